"""Closed-form renormalized energies and the limiting canonical maps.

The Dirichlet energy assembles the pairwise vortex interaction, the boundary
coupling of the singular potential with the data current, the regular part
of the potential at the singularities, and the topological quadratic of the
hole coefficients.  The Neumann energy does the same with the zero-value
potential and the degree-parametrized hole coefficients.  Canonical maps are
produced by transporting the phase of the current along interior paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import solver as sv
from . import topology as tp
from .boundary import BoundaryData, check_compatibility, current_density
from .errors import IncompatibleDegrees, PathTooCloseToSingularity
from .geometry import DomainSpec, build_domain, curve_frame


@dataclass(frozen=True)
class EnergyReport:
    """Renormalized energy with its additive term breakdown.

    total == term_pairwise + term_boundary + term_regular + term_topological
    to machine precision by construction.
    """

    total: float
    term_pairwise: float
    term_boundary: float
    term_regular: float
    term_topological: float
    alpha: tuple | None = None
    shifts: tuple | None = None
    theta: tuple | None = None
    degrees: tuple | None = None
    beta: tuple | None = None
    diagnostics: dict = field(default_factory=dict)


def _sources_from(domain: DomainSpec):
    p = domain.punctures
    if p.k == 0:
        return None
    return sv.SourceTerm(p.points, tuple(float(d) for d in p.degrees))


def _pairwise_term(domain: DomainSpec) -> float:
    p = domain.punctures
    if p.k < 2:
        return 0.0
    pts = p.points_array
    d = p.degrees_array.astype(float)
    total = 0.0
    for i in range(p.k):
        for j in range(p.k):
            if i != j:
                total += d[i] * d[j] * np.log(np.linalg.norm(pts[i] - pts[j]))
    return -np.pi * total


def singular_neumann_data(domain: DomainSpec, bd: BoundaryData):
    """Outward-normal data of the singular potential: the boundary current
    taken with the outward-of-domain normal (sign flipped on holes)."""
    n = domain.panels
    t = 2.0 * np.pi * np.arange(n) / n
    data = []
    for c in range(1 + domain.n_holes):
        q = current_density(domain, bd, c, t)
        data.append(q if c == 0 else -q)
    return data


def solve_singular_neumann(domain: DomainSpec, bd: BoundaryData,
                           normalization="boundary_mean"):
    """Potential with the puncture sources and boundary-current Neumann data."""
    return sv.solve_neumann(
        domain, _sources_from(domain), singular_neumann_data(domain, bd),
        normalization=normalization,
    )


def dirichlet_renormalized_energy(domain: DomainSpec, bd: BoundaryData,
                                  search_radius: int = 3) -> EnergyReport:
    """Renormalized energy for prescribed boundary values of the map."""
    verdict = check_compatibility(bd, domain.punctures)
    if not verdict.relation_holds:
        raise IncompatibleDegrees(
            f"outer degree {verdict.component_degrees[0]} != puncture total "
            f"{verdict.total_puncture_degree} + hole degrees "
            f"{sum(verdict.component_degrees[1:])}"
        )
    data = singular_neumann_data(domain, bd)
    phi0 = solve_singular_neumann(domain, bd)

    pairwise = _pairwise_term(domain)

    w = 2.0 * np.pi / domain.panels
    boundary = 0.0
    for c in range(1 + domain.n_holes):
        trace = sv.boundary_trace(phi0, c)
        boundary += 0.5 * w * float(np.sum(trace * data[c] * phi0.geo["speed"][c]))

    regular = 0.0
    for i in range(domain.punctures.k):
        regular += domain.punctures.degrees[i] * sv.regular_part(phi0, i)
    regular *= -np.pi

    diagnostics = {}
    if domain.n_holes:
        P = tp.period_matrix(domain)
        offs = tp.theta_offsets(domain, bd, phi0, domain.punctures)
        sol = tp.lattice_minimize(P, offs.theta, search_radius)
        topological = sol.value
        alpha, shifts, theta = sol.alpha, sol.shifts, offs.theta
        tang = sum(
            a * sv.tangential_integral(phi0, l)
            for a, l in zip(sol.alpha, range(1, 1 + domain.n_holes))
        )
        boundary += tang
        diagnostics.update(
            tangential_term=tang,
            theta_witnesses=offs.witnesses,
            theta_path_residuals=offs.path_residuals,
            lattice_tie=sol.tie,
        )
    else:
        topological = 0.0
        alpha, shifts, theta = (), (), ()
        diagnostics.update(tangential_term=0.0)

    total = pairwise + boundary + regular + topological
    return EnergyReport(
        total=total,
        term_pairwise=pairwise,
        term_boundary=boundary,
        term_regular=regular,
        term_topological=topological,
        alpha=alpha,
        shifts=shifts,
        theta=theta,
        diagnostics=diagnostics,
    )


def neumann_renormalized_energy(domain: DomainSpec, mode: str = "optimal",
                                degrees=None,
                                search_radius: int = 3) -> EnergyReport:
    """Renormalized energy with free boundary phase (insulating boundary).

    mode "optimal" searches the hole degrees minimizing the energy; mode
    "fixed" prescribes them (the semi-stiff variant).
    """
    sources = _sources_from(domain)
    pairwise = _pairwise_term(domain)
    diagnostics = {}

    regular = 0.0
    ghat = None
    if sources is not None:
        ghat = sv.solve_dirichlet(domain, sources,
                                  [0.0] * (1 + domain.n_holes))
        for i in range(domain.punctures.k):
            regular += domain.punctures.degrees[i] * sv.regular_part(ghat, i)
        regular *= -np.pi

    n = domain.n_holes
    if n == 0:
        topological = 0.0
        dts, beta = (), ()
    else:
        measures = tp.harmonic_measures(domain)
        P = tp.period_matrix(domain, fields=measures)
        k = domain.punctures.k
        if k:
            pts = domain.punctures.points_array
            phi_vals = np.stack(
                [sv.eval_field_accurate(m, pts) for m in measures]
            )
            s = phi_vals @ domain.punctures.degrees_array.astype(float)
        else:
            phi_vals = np.zeros((n, 0))
            s = np.zeros(n)
        if mode == "fixed":
            if degrees is None or len(degrees) != n:
                raise IncompatibleDegrees(
                    f"fixed mode needs {n} hole degrees"
                )
            beta_arr, s_chk, resid = tp.neumann_beta(
                P, domain.punctures.degrees_array.astype(float)
                if k else np.zeros(0),
                phi_vals, degrees,
            )
            dts = tuple(int(d) for d in degrees)
            topological = 0.5 * float(beta_arr @ P.matrix @ beta_arr)
            beta = tuple(float(b) for b in beta_arr)
            diagnostics.update(beta_residual=resid)
        elif mode == "optimal":
            search = tp.minimize_degree_quadratic(P, s, search_radius)
            dts, beta = search.degrees, search.beta
            topological = search.quadratic
            diagnostics.update(
                degree_tie=search.tie,
                degree_candidates=search.candidates,
            )
        else:
            raise IncompatibleDegrees(f"unknown mode {mode!r}")
        if ghat is not None:
            # flux identity of the zero-value potential through each hole
            diagnostics["hole_flux_identity_residual"] = max(
                abs(sv.flux(ghat, 1 + l) - 2.0 * np.pi * s[l])
                for l in range(n)
            )

    total = pairwise + regular + topological
    return EnergyReport(
        total=total,
        term_pairwise=pairwise,
        term_boundary=0.0,
        term_regular=regular,
        term_topological=topological,
        degrees=tuple(dts),
        beta=tuple(beta),
        diagnostics=diagnostics,
    )


# --------------------------------------------------------------------------
# canonical maps


@dataclass(frozen=True)
class CanonicalMapSample:
    """One transported sample of the limiting unit-modulus map."""

    point: tuple
    value: complex
    path: tuple


class CanonicalMap:
    """Phase-transported limiting map with prescribed singularities.

    The current of the map is a fixed linear combination of solved field
    gradients; samples are produced by integrating it along interior paths
    from a fixed anchor whose phase is known.
    """

    def __init__(self, domain, terms, anchor_point, anchor_phase,
                 anchor_boundary=None):
        self.domain = domain
        self.terms = tuple(terms)
        self.anchor_point = np.asarray(anchor_point, dtype=float)
        self.anchor_phase = float(anchor_phase)
        self.anchor_boundary = anchor_boundary  # (component, parameter) or None
        base = self.terms[0][0]
        self.h = base.h_band
        self.obstacles = []
        delta = min(self.h, 0.1 * domain.diameter)
        for f, _, _ in self.terms:
            if f.sources is not None:
                for p in f.sources.points:
                    guard = min(0.25 * domain.diameter, 2.0 * delta,
                                0.45 * domain.rho_max if domain.punctures.k
                                else np.inf)
                    self.obstacles.append((p, guard))
        self.delta = delta
        if anchor_boundary is not None:
            comp, tpar = anchor_boundary
            b, _, nu, _ = curve_frame(domain.curves[comp], tpar,
                                      hole=domain.is_hole(comp))
            self.start = b - delta * nu
            self.start_vertex = b
        else:
            self.start = self.anchor_point
            self.start_vertex = self.anchor_point

    def _phase_to(self, x, end_boundary=None):
        x = np.asarray(x, dtype=float)
        mid, _ = tp._route(self.domain, self.start, x, self.obstacles,
                           self.delta, +1.0)
        verts = [self.start_vertex[None, :], mid] \
            if self.anchor_boundary is not None else [mid]
        poly = np.vstack(verts)
        inc = sv.path_integral_perp(
            self.terms, poly,
            boundary_start=self.anchor_boundary,
            boundary_end=end_boundary,
        )
        return self.anchor_phase + inc, poly

    def sample(self, x) -> CanonicalMapSample:
        """Map value at an interior point away from the singularities."""
        x = np.asarray(x, dtype=float)
        for center, radius in self.obstacles:
            if np.linalg.norm(x - np.asarray(center)) < radius:
                raise PathTooCloseToSingularity(
                    f"sample point {tuple(x)} is inside a singularity guard"
                )
        phase, poly = self._phase_to(x)
        return CanonicalMapSample(
            point=(float(x[0]), float(x[1])),
            value=complex(np.exp(1j * phase)),
            path=tuple(map(tuple, poly)),
        )

    def boundary_sample(self, component, tpar) -> CanonicalMapSample:
        """Map value at a boundary point, transported through the interior."""
        curve = self.domain.curves[component]
        b, _, nu, _ = curve_frame(curve, tpar, hole=self.domain.is_hole(component))
        q = b - self.delta * nu
        phase, poly = self._phase_to(q)
        stub = np.vstack([q[None, :], b[None, :]])
        phase += sv.path_integral_perp(
            self.terms, stub, boundary_end=(component, float(tpar))
        )
        return CanonicalMapSample(
            point=(float(b[0]), float(b[1])),
            value=complex(np.exp(1j * phase)),
            path=tuple(map(tuple, poly)) + (tuple(b),),
        )

    def winding_around(self, center, radius, npts=32):
        """Winding number of the map around a loop, with rounding residual."""
        center = np.asarray(center, dtype=float)
        th = np.linspace(0.0, 2.0 * np.pi, npts + 1)
        loop = center[None, :] + radius * np.stack(
            [np.cos(th), np.sin(th)], axis=1
        )
        total = sv.path_integral_perp(self.terms, loop)
        wind = total / (2.0 * np.pi)
        return int(np.rint(wind)), float(wind - np.rint(wind))


def canonical_dirichlet_map(domain: DomainSpec, bd: BoundaryData,
                            search_radius: int = 3):
    """Limiting map for prescribed boundary values, anchored to the data."""
    verdict = check_compatibility(bd, domain.punctures)
    if not verdict.relation_holds:
        raise IncompatibleDegrees("degree relation fails")
    phi0 = solve_singular_neumann(domain, bd)
    terms = [(phi0, 1.0, 0.0)]
    if domain.n_holes:
        measures = tp.harmonic_measures(domain)
        P = tp.period_matrix(domain, fields=measures)
        offs = tp.theta_offsets(domain, bd, phi0, domain.punctures,
                                witness=False)
        sol = tp.lattice_minimize(P, offs.theta, search_radius)
        for a, m in zip(sol.alpha, measures):
            terms.append((m, 0.0, a))
    anchor_t = 0.0
    return CanonicalMap(
        domain, terms,
        anchor_point=domain.outer.point(anchor_t),
        anchor_phase=float(bd.component(0).angle(anchor_t)),
        anchor_boundary=(0, anchor_t),
    )


def canonical_neumann_map(domain: DomainSpec, mode: str = "optimal",
                          degrees=None, search_radius: int = 3):
    """Limiting map for the free-phase problem, phase 1 at an interior anchor."""
    report = neumann_renormalized_energy(domain, mode, degrees, search_radius)
    sources = _sources_from(domain)
    terms = []
    if sources is not None:
        ghat = sv.solve_dirichlet(domain, sources, [0.0] * (1 + domain.n_holes))
        terms.append((ghat, 1.0, 0.0))
    if domain.n_holes:
        measures = tp.harmonic_measures(domain)
        for b, m in zip(report.beta, measures):
            terms.append((m, b, 0.0))
    if not terms:
        raise IncompatibleDegrees("map is trivial: no punctures and no holes")
    # interior anchor: midpoint pushed inside from the outer anchor
    base = terms[0][0]
    b0, _, nu0, _ = curve_frame(domain.outer, 0.0, hole=False)
    anchor = b0 - min(base.h_band, 0.1 * domain.diameter) * nu0
    cmap = CanonicalMap(domain, terms, anchor_point=anchor, anchor_phase=0.0)
    cmap.report = report
    return cmap


def canonical_map(domain, x, bd: BoundaryData | None = None,
                  mode: str = "optimal", degrees=None,
                  search_radius: int = 3) -> CanonicalMapSample:
    """One-shot sample of the limiting map at x.

    With boundary data `bd` the prescribed-value map is sampled; without it
    the free-phase map.  For many samples build the map object once via
    canonical_dirichlet_map / canonical_neumann_map instead.
    """
    if bd is not None:
        m = canonical_dirichlet_map(domain, bd, search_radius)
    else:
        m = canonical_neumann_map(domain, mode, degrees, search_radius)
    return m.sample(x)


# --------------------------------------------------------------------------
# landscapes


def energy_landscape(domain: DomainSpec, kind: str, grid_points,
                     moving_index: int = 0, bd: BoundaryData | None = None,
                     mode: str = "optimal", degrees=None,
                     search_radius: int = 3):
    """Energy as one puncture moves over a grid; failures yield None entries.

    Returns a list of dicts with keys x, y, W, term_pairwise, term_boundary,
    term_regular, term_topological (values None where the point is not
    admissible).
    """
    rows = []
    pts = list(domain.punctures.points)
    degs = list(domain.punctures.degrees)
    for p in np.atleast_2d(np.asarray(grid_points, dtype=float)):
        row = {"x": float(p[0]), "y": float(p[1]), "W": None,
               "term_pairwise": None, "term_boundary": None,
               "term_regular": None, "term_topological": None}
        try:
            new_pts = list(pts)
            new_pts[moving_index] = (float(p[0]), float(p[1]))
            moved = build_domain(
                domain.outer, domain.holes,
                type(domain.punctures)(tuple(new_pts), tuple(degs)),
                panels=domain.panels, band_factor=domain.band_factor,
            )
            if kind == "dirichlet":
                if bd is None:
                    raise IncompatibleDegrees("dirichlet landscape needs data")
                rep = dirichlet_renormalized_energy(moved, bd, search_radius)
            else:
                rep = neumann_renormalized_energy(moved, mode, degrees,
                                                 search_radius)
            row.update(
                W=rep.total,
                term_pairwise=rep.term_pairwise,
                term_boundary=rep.term_boundary,
                term_regular=rep.term_regular,
                term_topological=rep.term_topological,
            )
        except Exception:
            pass
        rows.append(row)
    return rows
