"""Independent cross-check of the closed-form energies at finite excision radius.

The punctures are replaced by excised circles of radius rho and the energy of
the constrained minimizer on the perforated domain is computed by boundary
integrals only.  Running a geometric radius schedule gives a monotone deflated
sequence whose Richardson extrapolation must reproduce the closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import itertools

import numpy as np

from . import solver as sv
from . import topology as tp
from .boundary import BoundaryData
from .energy import singular_neumann_data
from .errors import (
    ConvergenceOrderError,
    IncompatibleNeumannData,
    NonMonotoneSequence,
    RhoTooSmall,
)
from .geometry import DomainSpec, omega_rho

_MIN_RHO_FACTOR = 1e-4
_MONOTONE_SLACK = 1e-7
_MIN_FIT_ORDER = 0.7


def _excise(domain: DomainSpec, rho: float):
    """Excised domain plus the component indices of the small circles."""
    rho = float(rho)
    if rho < _MIN_RHO_FACTOR * domain.diameter:
        raise RhoTooSmall(
            f"rho={rho:g} below conditioning guard "
            f"{_MIN_RHO_FACTOR * domain.diameter:g}"
        )
    om = omega_rho(domain, rho)
    n_orig = domain.n_holes
    circles = tuple(range(1 + n_orig, 1 + om.n_holes))
    return om, circles


def finite_rho_dirichlet(domain: DomainSpec, bd: BoundaryData, rho: float,
                         search_radius: int = 3):
    """Minimal energy at excision radius rho with prescribed boundary values.

    Returns (W, diagnostics).  The potential takes the boundary-current
    Neumann data on the original components and floats with prescribed flux
    on each excised circle; the Dirichlet energy is evaluated by boundary
    integrals and the finite-radius topological quadratic is added.
    """
    om, circles = _excise(domain, rho)
    data = singular_neumann_data(domain, bd)
    conds = [sv.NeumannCondition(q) for q in data]
    for d in domain.punctures.degrees:
        conds.append(sv.FloatingCondition(-2.0 * np.pi * d))
    fld = sv.solve(om, None, conds)

    w = 2.0 * np.pi / om.panels
    energy = 0.0
    for c in range(1 + domain.n_holes):
        trace = sv.boundary_trace(fld, c)
        energy += w * float(np.sum(trace * data[c] * fld.geo["speed"][c]))
    for i, c in enumerate(circles):
        energy += fld.floating[c] * (-2.0 * np.pi * domain.punctures.degrees[i])
    energy *= 0.5

    diagnostics = {
        "floating": dict(fld.floating),
        "slack": fld.slack,
    }
    if domain.n_holes:
        orig_holes = tuple(range(1, 1 + domain.n_holes))
        measures = tp.harmonic_measures(om, orig_holes, neumann_zero=circles)
        P = tp.period_matrix(om, orig_holes, fields=measures)
        offs = tp.theta_offsets(om, bd, fld, witness=False, holes=orig_holes)
        sol = tp.lattice_minimize(P, offs.theta, search_radius)
        energy += sol.value
        diagnostics.update(
            theta=offs.theta,
            lattice_shifts=sol.shifts,
            alpha=sol.alpha,
        )
    return energy, diagnostics


def _neumann_energy_at(om, circles, domain, degrees):
    """Solve the free-phase potential at fixed hole degrees; energy and field."""
    conds = [sv.ValueCondition(0.0)]
    for dt in degrees:
        conds.append(sv.FloatingCondition(-2.0 * np.pi * dt))
    for d in domain.punctures.degrees:
        conds.append(sv.FloatingCondition(-2.0 * np.pi * d))
    fld = sv.solve(om, None, conds)
    energy = 0.0
    for l, dt in enumerate(degrees):
        energy += fld.floating[1 + l] * dt
    for i, c in enumerate(circles):
        energy += fld.floating[c] * domain.punctures.degrees[i]
    return -np.pi * energy, fld


def finite_rho_neumann(domain: DomainSpec, rho: float, mode: str = "optimal",
                       degrees=None, search_radius: int = 3):
    """Minimal energy at excision radius rho with free boundary phase.

    Returns (W, diagnostics).  The potential vanishes on the outer component
    and floats with degree-prescribed fluxes on holes and excised circles;
    optimal mode enumerates the hole degrees.
    """
    om, circles = _excise(domain, rho)
    n = domain.n_holes
    if mode == "fixed":
        if degrees is None or len(degrees) != n:
            raise IncompatibleNeumannData(f"fixed mode needs {n} hole degrees")
        cand = [tuple(int(d) for d in degrees)]
    elif mode == "optimal":
        cand = [d for d in itertools.product(
            range(-search_radius, search_radius + 1), repeat=n)]
        cand.sort()
    else:
        raise IncompatibleNeumannData(f"unknown mode {mode!r}")
    best = None
    for d in cand:
        energy, fld = _neumann_energy_at(om, circles, domain, d)
        if best is None or energy < best[0] - 1e-14 * (1.0 + abs(best[0])):
            best = (energy, d, fld)
    energy, d, fld = best
    diagnostics = {
        "degrees": d,
        "floating": dict(fld.floating),
        "slack": fld.slack,
    }
    return energy, diagnostics


@dataclass(frozen=True)
class RhoStudy:
    """Radius schedule with per-radius energies and the extrapolated limit."""

    schedule: tuple
    values: tuple            # W at each radius
    deflated: tuple          # W - pi (sum d_i^2) |log rho|
    extrapolated: float
    order: float | None      # fitted convergence rate, None when exact
    records: tuple = ()      # per-radius diagnostics dicts


def convergence_study(domain: DomainSpec, kind: str, rho0: float,
                      steps: int, bd: BoundaryData | None = None,
                      mode: str = "optimal", degrees=None,
                      search_radius: int = 3) -> RhoStudy:
    """Run a geometric radius schedule and extrapolate the energy limit.

    kind is "dirichlet" (needs bd) or "neumann".  The deflated sequence must
    be non-decreasing along the shrinking schedule within a small slack, and
    the fitted convergence order must support first-order extrapolation.
    """
    if steps < 3:
        raise ConvergenceOrderError("need at least 3 schedule steps")
    schedule = tuple(float(rho0) * 0.5 ** j for j in range(steps))
    d2 = float(np.sum(np.square(domain.punctures.degrees_array))) \
        if domain.punctures.k else 0.0
    values, deflated, records = [], [], []
    for rho in schedule:
        if kind == "dirichlet":
            if bd is None:
                raise IncompatibleNeumannData(
                    "dirichlet study needs boundary data")
            w, diag = finite_rho_dirichlet(domain, bd, rho, search_radius)
        else:
            w, diag = finite_rho_neumann(domain, rho, mode, degrees,
                                         search_radius)
        values.append(w)
        deflated.append(w - np.pi * d2 * abs(np.log(rho)))
        records.append(diag)
    for j in range(1, steps):
        if deflated[j] < deflated[j - 1] - _MONOTONE_SLACK:
            raise NonMonotoneSequence(
                f"deflated energy dropped by "
                f"{deflated[j - 1] - deflated[j]:.3e} from rho="
                f"{schedule[j - 1]:g} to rho={schedule[j]:g}"
            )
    extrapolated = 2.0 * deflated[-1] - deflated[-2]
    resid = np.abs(np.asarray(deflated) - extrapolated)
    mask = resid > 1e-10 * (1.0 + abs(extrapolated))
    if np.count_nonzero(mask) < 2:
        order = None
    else:
        rr = np.log(np.asarray(schedule)[mask])
        fit = np.polyfit(rr, np.log(resid[mask]), 1)
        order = float(fit[0])
        if order < _MIN_FIT_ORDER:
            raise ConvergenceOrderError(
                f"fitted convergence order {order:.3f} < {_MIN_FIT_ORDER}; "
                "extrapolation unreliable"
            )
    return RhoStudy(
        schedule=schedule,
        values=tuple(values),
        deflated=tuple(deflated),
        extrapolated=float(extrapolated),
        order=order,
        records=tuple(records),
    )


@dataclass(frozen=True)
class OscillationVerdict:
    """Maximum-principle oscillation bound check for a harmonic field."""

    holds: bool
    interior_oscillation: float
    bound: float
    margin: float
    component_oscillations: tuple
    outer_included: bool


def oscillation_check(fld, holes=None, grid: int = 64) -> OscillationVerdict:
    """Check the hole-oscillation bound on a source-free harmonic field.

    The interior oscillation (dense-grid sample) must not exceed the sum of
    the hole boundary oscillations, plus the outer boundary oscillation when
    the outer component carries prescribed values.  Requires zero flux
    through each listed hole.
    """
    if fld.sources is not None and fld.sources.k:
        raise IncompatibleNeumannData(
            "oscillation bound applies to source-free fields only")
    domain = fld.domain
    if holes is None:
        holes = tuple(range(1, fld.n_components))
    for l in holes:
        f = sv.flux(fld, l)
        if abs(f) > 1e-8:
            raise IncompatibleNeumannData(
                f"hole {l} carries flux {f:.3e}; bound needs zero flux"
            )

    outer_pts = domain.outer.sample(512)
    lo, hi = outer_pts.min(axis=0), outer_pts.max(axis=0)
    xs = np.linspace(lo[0], hi[0], grid)
    ys = np.linspace(lo[1], hi[1], grid)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    keep = domain.contains(pts)
    pts = pts[keep]
    keep = fld.component_distance(pts).min(axis=1) > fld.h_band
    pts = pts[keep]
    vals = sv.eval_field(fld, pts)
    interior = float(vals.max() - vals.min())

    oscs = []
    bound = 0.0
    for c in range(fld.n_components):
        tr = sv.boundary_trace(fld, c)
        oscs.append(float(tr.max() - tr.min()))
    for l in holes:
        bound += oscs[l]
    outer_included = isinstance(fld.conditions[0], sv.ValueCondition)
    if outer_included:
        bound += oscs[0]
    margin = bound - interior
    return OscillationVerdict(
        holds=margin >= -1e-10,
        interior_oscillation=interior,
        bound=bound,
        margin=margin,
        component_oscillations=tuple(oscs),
        outer_included=outer_included,
    )
