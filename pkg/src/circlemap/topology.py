"""Topological quantities: period matrix, phase offsets, lattice searches.

The period matrix couples the harmonic measures of the holes; the phase
offsets measure how far the transported phase of the singular current lags
the boundary data on each hole; the lattice searches pick the admissible
topological coefficients minimizing the quadratic energy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import solver as sv
from .boundary import BoundaryData, check_compatibility
from .errors import (
    DegreeMismatch,
    PathTooCloseToSingularity,
    SearchRadiusInsufficient,
    SolverSingular,
)
from .geometry import DomainSpec, PunctureSet, curve_frame


# --------------------------------------------------------------------------
# period matrix


@dataclass(frozen=True)
class PeriodMatrix:
    """Flux Gram matrix of the hole harmonic measures (outward-of-domain
    normal), restricted to `hole_components` of the domain."""

    matrix: np.ndarray
    hole_components: tuple

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)


def harmonic_measures(domain: DomainSpec, active_holes=None, neumann_zero=()):
    """Solve the harmonic-measure problem for each active hole.

    Measure l is 1 on the active hole l, 0 on the other value components,
    and has zero pointwise normal derivative on `neumann_zero` components.
    """
    ncomp = 1 + domain.n_holes
    if active_holes is None:
        active_holes = tuple(range(1, ncomp))
    active_holes = tuple(active_holes)
    neumann_zero = frozenset(neumann_zero)
    fields = []
    for l in active_holes:
        conds = []
        for c in range(ncomp):
            if c in neumann_zero:
                conds.append(sv.NeumannCondition(0.0))
            else:
                conds.append(sv.ValueCondition(1.0 if c == l else 0.0))
        fields.append(sv.solve(domain, None, conds))
    return fields


def period_matrix(domain: DomainSpec, active_holes=None, neumann_zero=(),
                  fields=None) -> PeriodMatrix:
    """Period matrix P[l, m] = flux of measure m through hole l."""
    ncomp = 1 + domain.n_holes
    if active_holes is None:
        active_holes = tuple(range(1, ncomp))
    active_holes = tuple(active_holes)
    if fields is None:
        fields = harmonic_measures(domain, active_holes, neumann_zero)
    n = len(active_holes)
    P = np.empty((n, n))
    for m, fld in enumerate(fields):
        for l, comp in enumerate(active_holes):
            P[l, m] = sv.flux(fld, comp)
    asym = np.abs(P - P.T).max()
    if asym > 1e-8:
        raise SolverSingular(
            f"period matrix asymmetry {asym:.3e} exceeds 1e-8; "
            "discretization under-resolved"
        )
    P = 0.5 * (P + P.T)
    return PeriodMatrix(matrix=P, hole_components=active_holes)


# --------------------------------------------------------------------------
# phase offsets


@dataclass(frozen=True)
class PhaseOffsets:
    """Per-hole phase lags in [-pi, pi) with two-path integer witnesses."""

    theta: tuple
    witnesses: tuple
    path_residuals: tuple  # |(I2 - I1) - 2 pi witness| per hole


def wrap_angle(x):
    """Wrap to [-pi, pi)."""
    return (x + np.pi) % (2.0 * np.pi) - np.pi


def _route(domain, p_start, p_end, obstacles, standoff, side,
           allow_straight=True, forbidden=()):
    """Find a polyline from p_start to p_end avoiding circular obstacles.

    `side` biases which way the first accepted detour bends; candidates are
    tried in order of increasing detour.
    """
    p_start = np.asarray(p_start, dtype=float)
    p_end = np.asarray(p_end, dtype=float)
    base = p_end - p_start
    perp = np.array([-base[1], base[0]])
    nrm = np.linalg.norm(perp)
    perp = perp / nrm if nrm > 0 else np.array([0.0, 1.0])
    scale = max(np.linalg.norm(base), 0.1 * domain.diameter)

    def clear(polyline):
        for i in range(len(polyline) - 1):
            a, b = polyline[i], polyline[i + 1]
            samples = a[None, :] + np.linspace(0, 1, 33)[:, None] * (b - a)[None, :]
            inner = samples[1:-1] if (i == 0 or i == len(polyline) - 2) else samples
            for (center, radius) in obstacles:
                d = np.linalg.norm(samples - np.asarray(center)[None, :], axis=1)
                if d.min() < radius:
                    return False
            if len(inner):
                if not np.all(domain.contains(inner)):
                    return False
                dmin = domain.distance_to_boundary(inner).min()
                if dmin < 0.5 * standoff:
                    return False
        return True

    offsets = [0.0] if allow_straight else []
    for mag in (0.25, 0.5, 0.75, 1.0, 1.5):
        offsets.extend([side * mag, -side * mag])
    for off in offsets:
        if off in forbidden:
            continue
        if off == 0.0:
            cand = np.stack([p_start, p_end])
        else:
            mid = 0.5 * (p_start + p_end) + off * scale * perp
            ts = np.linspace(0.0, 1.0, 9)[:, None]
            cand = ((1 - ts) ** 2) * p_start[None, :] + \
                2 * ts * (1 - ts) * mid[None, :] + (ts ** 2) * p_end[None, :]
        if clear(cand):
            return cand, off
    raise PathTooCloseToSingularity(
        "could not route a transport path clear of the singularities"
    )


def _transport_paths(domain, field, l, anchor_t=None, target_t=None):
    """Two inequivalent polylines from the outer anchor to hole l's anchor."""
    h = field.h_band
    outer = domain.curves[0]
    hole = domain.curves[l]
    delta = min(h, 0.1 * domain.diameter)

    obstacles = []
    if field.sources is not None:
        guard = 0.25 * domain.diameter
        if field.sources.k > 1:
            pts = field.sources.points_array
            pd = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
            pd[pd == 0] = np.inf
            guard = min(guard, 0.4 * pd.min())
        guard = min(guard, 2.0 * delta)
        for p in field.sources.points:
            obstacles.append((p, guard))
    for c in range(1, 1 + domain.n_holes):
        if c == l:
            continue
        cloud = field.geo["clouds"][c]
        center = cloud.mean(axis=0)
        radius = np.linalg.norm(cloud - center[None, :], axis=1).max()
        obstacles.append((center, radius + 0.5 * delta))

    def pick_anchor(curve, is_hole, preset):
        candidates = [preset] if preset is not None else \
            [2.0 * np.pi * j / 16.0 for j in range(16)]
        for t_cand in candidates:
            b, _, nu, _ = curve_frame(curve, t_cand, hole=is_hole)
            p = b - delta * nu
            if all(np.linalg.norm(p - np.asarray(c0)) >= r0
                   for c0, r0 in obstacles):
                return t_cand, b, p
        raise PathTooCloseToSingularity(
            "no boundary anchor clears the singularity guards"
        )

    anchor_t, b0, p0 = pick_anchor(outer, False, anchor_t)
    target_t, bl, pl = pick_anchor(hole, True, target_t)

    mid1, off1 = _route(domain, p0, pl, obstacles, delta, +1.0)
    mid2, _ = _route(domain, p0, pl, obstacles, delta, -1.0,
                     allow_straight=False, forbidden=(off1,))
    paths = [np.vstack([b0[None, :], mid, bl[None, :]]) for mid in (mid1, mid2)]
    return paths, anchor_t, target_t


def theta_offsets(domain: DomainSpec, bd: BoundaryData, field,
                  punctures: PunctureSet | None = None,
                  witness: bool = True, holes=None) -> PhaseOffsets:
    """Phase lags of the transported singular current behind the data g.

    The phase of the current-generated unit map is transported from the
    outer anchor to an anchor on each hole along two inequivalent interior
    polylines; the two results must agree modulo 2*pi (witness integers).
    """
    if punctures is not None:
        verdict = check_compatibility(bd, punctures)
        if not verdict.relation_holds:
            raise DegreeMismatch(
                f"degree relation fails: outer {verdict.component_degrees[0]} != "
                f"punctures {verdict.total_puncture_degree} + holes "
                f"{sum(verdict.component_degrees[1:])}"
            )
    if holes is None:
        holes = range(1, 1 + domain.n_holes)
    thetas, witnesses, residuals = [], [], []
    for l in holes:
        paths, t0, tl = _transport_paths(domain, field, l)
        if not witness:
            paths = paths[:1]
        vals = [
            sv.path_integral_perp(
                [(field, 1.0, 0.0)], poly,
                boundary_start=(0, t0), boundary_end=(l, tl),
            )
            for poly in paths
        ]
        if witness:
            diff = vals[1] - vals[0]
            m = int(np.rint(diff / (2.0 * np.pi)))
            residuals.append(abs(diff - 2.0 * np.pi * m))
            witnesses.append(m)
        else:
            residuals.append(0.0)
            witnesses.append(0)
        anchor_phase = float(bd.component(0).angle(t0))
        target_phase = float(bd.component(l).angle(tl))
        theta = wrap_angle(target_phase - (anchor_phase + vals[0]))
        thetas.append(float(theta))
    return PhaseOffsets(tuple(thetas), tuple(witnesses), tuple(residuals))


# --------------------------------------------------------------------------
# lattice searches


@dataclass(frozen=True)
class LatticeSolution:
    """Minimizer of the topological quadratic over the shifted lattice."""

    alpha: tuple
    shifts: tuple
    value: float
    tie: bool


def lattice_minimize(P: PeriodMatrix, theta, search_radius: int = 3) -> LatticeSolution:
    """Minimize 0.5 a^T P a over a in theta + 2 pi Z^n, |shift| <= radius.

    An eigenvalue bound certifies that no lattice point outside the
    enumeration box can beat the attained minimum; ties are broken toward
    the lexicographically smallest shift vector.
    """
    mat = P.matrix if isinstance(P, PeriodMatrix) else np.asarray(P, dtype=float)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = len(theta)
    if mat.shape != (n, n):
        raise SolverSingular("period matrix / offset dimension mismatch")
    m_range = range(-search_radius, search_radius + 1)
    best_val, best = None, []
    for shifts in itertools.product(m_range, repeat=n):
        alpha = theta + 2.0 * np.pi * np.asarray(shifts, dtype=float)
        val = 0.5 * float(alpha @ mat @ alpha)
        if best_val is None or val < best_val - 1e-12 * (1.0 + abs(best_val)):
            best_val, best = val, [(shifts, alpha)]
        elif abs(val - best_val) <= 1e-12 * (1.0 + abs(best_val)):
            best.append((shifts, alpha))
    best.sort(key=lambda item: item[0])
    shifts, alpha = best[0]
    lam_min = float(np.linalg.eigvalsh(mat)[0])
    boundary_norm = 2.0 * np.pi * (search_radius + 1) - np.pi
    outside_lb = 0.5 * lam_min * boundary_norm ** 2
    if outside_lb <= best_val:
        raise SearchRadiusInsufficient(
            f"cannot certify optimality: bound {outside_lb:.6g} <= "
            f"attained {best_val:.6g}; increase the search radius"
        )
    return LatticeSolution(
        alpha=tuple(float(a) for a in alpha),
        shifts=tuple(int(s) for s in shifts),
        value=best_val,
        tie=len(best) > 1,
    )


def neumann_beta(P: PeriodMatrix, strengths, phi_at_sources, degrees):
    """Coefficients of the hole harmonic measures in the Neumann potential.

    Solves P beta = -2 pi (dtilde + s) with s_l = sum_i d_i phi_l(a_i).
    Returns (beta, s, residual).
    """
    mat = P.matrix if isinstance(P, PeriodMatrix) else np.asarray(P, dtype=float)
    n = mat.shape[0]
    strengths = np.atleast_1d(np.asarray(strengths, dtype=float))
    dtilde = np.atleast_1d(np.asarray(degrees, dtype=float))
    phi = np.asarray(phi_at_sources, dtype=float).reshape(n, len(strengths)) \
        if len(strengths) else np.zeros((n, 0))
    s = phi @ strengths
    rhs = -2.0 * np.pi * (dtilde + s)
    beta = np.linalg.solve(mat, rhs) if n else np.zeros(0)
    residual = float(np.linalg.norm(mat @ beta - rhs)) if n else 0.0
    return beta, s, residual


@dataclass(frozen=True)
class DegreeSearch:
    """Outcome of the integer minimization of the Neumann quadratic."""

    degrees: tuple
    beta: tuple
    quadratic: float
    tie: bool
    candidates: tuple  # ((degrees, quadratic), ...) sorted by value


def minimize_degree_quadratic(P: PeriodMatrix, s, search_radius: int = 3) -> DegreeSearch:
    """Minimize 2 pi^2 (d + s)^T P^{-1} (d + s) over integer hole degrees d.

    The quadratic is the topological part 0.5 beta^T P beta of the Neumann
    energy as a function of the prescribed hole degrees.
    """
    mat = P.matrix if isinstance(P, PeriodMatrix) else np.asarray(P, dtype=float)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n = len(s)
    inv = np.linalg.inv(mat)
    m_range = range(-search_radius, search_radius + 1)
    entries = []
    for d in itertools.product(m_range, repeat=n):
        v = np.asarray(d, dtype=float) + s
        entries.append((2.0 * np.pi ** 2 * float(v @ inv @ v), d))
    entries.sort(key=lambda e: (e[0], e[1]))
    best_val, best_d = entries[0]
    ties = [d for val, d in entries if abs(val - best_val) <= 1e-12 * (1.0 + best_val)]
    lam_max = float(np.linalg.eigvalsh(mat)[-1])
    margin = (search_radius + 1) - float(np.abs(s).max() if n else 0.0)
    outside_lb = 2.0 * np.pi ** 2 / lam_max * max(margin, 0.0) ** 2
    if outside_lb <= best_val:
        raise SearchRadiusInsufficient(
            f"cannot certify optimality: bound {outside_lb:.6g} <= "
            f"attained {best_val:.6g}; increase the search radius"
        )
    beta = np.linalg.solve(mat, -2.0 * np.pi * (np.asarray(best_d, float) + s))
    return DegreeSearch(
        degrees=tuple(int(x) for x in best_d),
        beta=tuple(float(b) for b in beta),
        quadratic=best_val,
        tie=len(ties) > 1,
        candidates=tuple((tuple(int(x) for x in d), val) for val, d in entries[:5]),
    )


def optimal_degree_search(domain: DomainSpec, search_radius: int = 3):
    """Search the hole degrees minimizing the Neumann renormalized energy.

    Returns (degrees, beta, energy_report) for the minimizer.
    """
    from . import energy  # local import to avoid a module cycle

    report = energy.neumann_renormalized_energy(
        domain, mode="optimal", search_radius=search_radius
    )
    return report.degrees, report.beta, report
