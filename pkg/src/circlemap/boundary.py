"""Circle-valued boundary data, degrees, and the tangential current density.

Boundary data on each component is stored as an integer winding plus a
periodic phase perturbation: g(t) = exp(i (w t + psi(t))).  This keeps
|g| = 1 exact and makes phase lifting along the boundary trivial.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadComponentIndex, NonIntegerDegree
from .geometry import DomainSpec, PunctureSet


@dataclass(frozen=True)
class FourierPhase:
    """Real 2*pi-periodic function psi(t) = a0 + sum a_k cos(kt) + b_k sin(kt)."""

    cos: tuple = (0.0,)
    sin: tuple = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos) or (0.0,))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin) or (0.0,))

    @property
    def max_mode(self) -> int:
        return max(len(self.cos), len(self.sin)) - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k, c in enumerate(self.cos):
            out = out + c * np.cos(k * t)
        for k, s in enumerate(self.sin):
            out = out + s * np.sin(k * t)
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k, c in enumerate(self.cos):
            out = out - k * c * np.sin(k * t)
        for k, s in enumerate(self.sin):
            out = out + k * s * np.cos(k * t)
        return out


@dataclass(frozen=True)
class ComponentData:
    """Unit-circle-valued data on one boundary component."""

    winding: int = 0
    phase: FourierPhase = field(default_factory=FourierPhase)

    def angle(self, t):
        """Continuous phase lift w*t + psi(t)."""
        return self.winding * np.asarray(t, dtype=float) + self.phase(t)

    def angle_derivative(self, t):
        return self.winding + self.phase.derivative(t)


@dataclass(frozen=True)
class BoundaryData:
    """One ComponentData per boundary component; index 0 is the outer curve."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __len__(self) -> int:
        return len(self.components)

    def component(self, index: int) -> ComponentData:
        if not (0 <= index < len(self.components)):
            raise BadComponentIndex(
                f"component {index} out of range [0, {len(self.components)})"
            )
        return self.components[index]


def boundary_data_for(domain: DomainSpec, windings, phases=None) -> BoundaryData:
    """Assemble BoundaryData for a domain, checking the component count."""
    windings = [int(w) for w in windings]
    n_comp = 1 + domain.n_holes
    if len(windings) != n_comp:
        raise BadComponentIndex(
            f"expected {n_comp} windings, got {len(windings)}"
        )
    if phases is None:
        phases = [FourierPhase()] * n_comp
    if len(phases) != n_comp:
        raise BadComponentIndex(
            f"expected {n_comp} phases, got {len(phases)}"
        )
    return BoundaryData(
        tuple(ComponentData(w, p) for w, p in zip(windings, phases))
    )


def eval_g(bd: BoundaryData, component: int, t):
    """g(t) = exp(i (w t + psi(t))) on the given component."""
    return np.exp(1j * bd.component(component).angle(t))


def degree(bd: BoundaryData, component: int, quadrature_size: int = 256):
    """Topological degree via the trapezoidal quadrature of (1/2pi) ∮ g ∧ g'.

    Returns the nearest integer; raises if the pre-rounding value is too far
    from an integer (under-resolved data).
    """
    cd = bd.component(component)
    t = np.linspace(0.0, 2.0 * np.pi, quadrature_size, endpoint=False)
    # g ∧ dg/dt = Im(conj(g) g') equals the phase derivative for unit data
    g = np.exp(1j * cd.angle(t))
    gprime = 1j * cd.angle_derivative(t) * g
    integrand = np.imag(np.conj(g) * gprime)
    raw = np.sum(integrand) * (2.0 * np.pi / quadrature_size) / (2.0 * np.pi)
    nearest = int(np.rint(raw))
    residual = raw - nearest
    if abs(residual) > 1e-6:
        raise NonIntegerDegree(
            f"component {component}: degree quadrature {raw!r} is not close to an integer"
        )
    return nearest, residual


def current_density(domain: DomainSpec, bd: BoundaryData, component: int, t):
    """g ∧ ∂_tau g = (w + psi'(t)) / |gamma'(t)| on the given component.

    This is the tangential derivative of the phase with respect to arclength,
    with tau the anti-clockwise tangent on every component.
    """
    cd = bd.component(component)
    if component >= 1 + domain.n_holes:
        raise BadComponentIndex(
            f"component {component} out of range [0, {1 + domain.n_holes})"
        )
    curve = domain.curves[component]
    return cd.angle_derivative(t) / curve.speed(t)


@dataclass(frozen=True)
class CompatibilityVerdict:
    """Outcome of the degree bookkeeping between boundary data and punctures."""

    component_degrees: tuple
    total_puncture_degree: int
    relation_holds: bool
    unpunctured_class_nonempty: bool | None

    def __bool__(self) -> bool:
        return self.relation_holds


def check_compatibility(bd: BoundaryData, punctures: PunctureSet) -> CompatibilityVerdict:
    """Check sum(d_i) + sum of hole degrees == outer degree.

    For a puncture-free configuration the same relation decides whether the
    admissible class of unit-valued Sobolev maps with trace g is nonempty;
    that verdict is reported separately (None when punctures are present).
    """
    degs = tuple(degree(bd, c)[0] for c in range(len(bd)))
    total_d = punctures.total_degree
    holds = total_d + sum(degs[1:]) == degs[0]
    nonempty = None
    if punctures.k == 0:
        nonempty = sum(degs[1:]) == degs[0]
    return CompatibilityVerdict(
        component_degrees=degs,
        total_puncture_degree=total_d,
        relation_holds=holds,
        unpunctured_class_nonempty=nonempty,
    )
