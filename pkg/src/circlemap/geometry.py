"""Multiply connected planar domains bounded by smooth closed Fourier curves.

A domain is an outer curve minus a finite union of hole curves, together with
a set of punctures (point singularities with integer strengths).  All curves
are trigonometric polynomials parametrized anti-clockwise on [0, 2*pi), which
gives exact derivatives and spectral accuracy downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateCurve,
    OverlappingCurves,
    PunctureOutsideDomain,
    RhoTooLarge,
)

_VALIDATION_SAMPLES = 256
_WINDING_SAMPLES = 2048


@dataclass(frozen=True)
class Curve:
    """Closed smooth curve given by finite Fourier series per coordinate.

    x(t) = ax[0] + sum_k ax[k] cos(kt) + bx[k] sin(kt), same for y.
    Orientation is anti-clockwise by convention; this is checked at domain
    build time via the total-turning sign.
    """

    ax: tuple
    bx: tuple
    ay: tuple
    by: tuple

    @staticmethod
    def circle(center, radius) -> "Curve":
        cx, cy = float(center[0]), float(center[1])
        r = float(radius)
        return Curve(ax=(cx, r), bx=(0.0, 0.0), ay=(cy, 0.0), by=(0.0, r))

    @staticmethod
    def fourier(ax, bx, ay, by) -> "Curve":
        return Curve(
            ax=tuple(float(v) for v in ax),
            bx=tuple(float(v) for v in bx),
            ay=tuple(float(v) for v in ay),
            by=tuple(float(v) for v in by),
        )

    def _series(self, coeffs_cos, coeffs_sin, t, derivative=0):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        n = max(len(coeffs_cos), len(coeffs_sin))
        for k in range(n):
            c = coeffs_cos[k] if k < len(coeffs_cos) else 0.0
            s = coeffs_sin[k] if k < len(coeffs_sin) else 0.0
            if derivative == 0:
                out = out + c * np.cos(k * t) + s * np.sin(k * t)
            elif derivative == 1:
                out = out + k * (-c * np.sin(k * t) + s * np.cos(k * t))
            elif derivative == 2:
                out = out + k * k * (-c * np.cos(k * t) - s * np.sin(k * t))
            else:
                raise ValueError("derivative order must be 0, 1 or 2")
        return out

    def point(self, t):
        """Position gamma(t), shape (..., 2)."""
        return np.stack(
            [self._series(self.ax, self.bx, t), self._series(self.ay, self.by, t)],
            axis=-1,
        )

    def velocity(self, t):
        return np.stack(
            [
                self._series(self.ax, self.bx, t, 1),
                self._series(self.ay, self.by, t, 1),
            ],
            axis=-1,
        )

    def acceleration(self, t):
        return np.stack(
            [
                self._series(self.ax, self.bx, t, 2),
                self._series(self.ay, self.by, t, 2),
            ],
            axis=-1,
        )

    def speed(self, t):
        return np.linalg.norm(self.velocity(t), axis=-1)

    def sample(self, n=_VALIDATION_SAMPLES):
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return self.point(t)

    @property
    def diameter(self) -> float:
        pts = self.sample()
        return float(max(
            np.max(pts[:, 0]) - np.min(pts[:, 0]),
            np.max(pts[:, 1]) - np.min(pts[:, 1]),
        ))


def curve_frame(curve: Curve, t, hole: bool = False):
    """Point, unit tangent, outward-of-domain normal nu_G, and speed at t.

    The tangent follows the anti-clockwise parametrization.  nu_G points out
    of the domain G: outward on the outer curve, into the hole on a hole
    curve (``hole=True``).
    """
    p = curve.point(t)
    v = curve.velocity(t)
    sp = np.linalg.norm(v, axis=-1)
    tau = v / sp[..., None]
    # rotating tau by -90 deg gives the outward normal of the enclosed region
    nu = np.stack([tau[..., 1], -tau[..., 0]], axis=-1)
    if hole:
        nu = -nu
    return p, tau, nu, sp


def winding_number(curve: Curve, points, samples=_WINDING_SAMPLES):
    """Integer winding of the curve around each query point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    z = curve.point(t)
    zc = z[:, 0] + 1j * z[:, 1]
    w = pts[:, 0] + 1j * pts[:, 1]
    ang = np.angle(zc[None, :] - w[:, None])
    dang = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    wind = np.sum(dang, axis=1) / (2.0 * np.pi)
    return np.rint(wind).astype(int)


def total_turning(curve: Curve, samples=_WINDING_SAMPLES) -> float:
    """Integrated turning of the tangent; +2*pi for an anti-clockwise curve."""
    t = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    v = curve.velocity(t)
    ang = np.arctan2(v[:, 1], v[:, 0])
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.sum(dang))


@dataclass(frozen=True)
class PunctureSet:
    """Prescribed point singularities (a_i, d_i)."""

    points: tuple = ()
    degrees: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple((float(p[0]), float(p[1])) for p in self.points)
        )
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def points_array(self):
        return np.asarray(self.points, dtype=float).reshape(self.k, 2)

    @property
    def degrees_array(self):
        return np.asarray(self.degrees, dtype=int)

    @property
    def total_degree(self) -> int:
        return int(sum(self.degrees))


@dataclass(frozen=True)
class DomainSpec:
    """Validated multiply connected domain with punctures.

    Immutable after construction; safe for concurrent reads.
    """

    outer: Curve
    holes: tuple = ()
    punctures: PunctureSet = field(default_factory=PunctureSet)
    panels: int = 256
    band_factor: float = 5.0

    @property
    def n_holes(self) -> int:
        return len(self.holes)

    @property
    def curves(self):
        """All boundary components, outer first."""
        return (self.outer,) + tuple(self.holes)

    def is_hole(self, component: int) -> bool:
        return component >= 1

    def contains(self, points) -> np.ndarray:
        """Strict interior test by winding numbers."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = winding_number(self.outer, pts) == 1
        for hole in self.holes:
            inside &= winding_number(hole, pts) == 0
        return inside

    def boundary_cloud(self, samples=512):
        return np.concatenate([c.sample(samples) for c in self.curves], axis=0)

    def distance_to_boundary(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cloud = self.boundary_cloud()
        d = np.linalg.norm(pts[:, None, :] - cloud[None, :, :], axis=-1)
        return np.min(d, axis=1)

    @property
    def rho_max(self) -> float:
        """Half the smallest puncture-puncture / puncture-boundary distance."""
        if self.punctures.k == 0:
            return np.inf
        a = self.punctures.points_array
        dists = [np.min(self.distance_to_boundary(a))]
        if self.punctures.k > 1:
            pair = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=-1)
            pair[pair == 0.0] = np.inf
            dists.append(float(np.min(pair)))
        return 0.5 * float(min(dists))

    @property
    def diameter(self) -> float:
        return self.outer.diameter


def _validate_curve(curve: Curve, label: str) -> None:
    t = np.linspace(0.0, 2.0 * np.pi, _VALIDATION_SAMPLES, endpoint=False)
    sp = curve.speed(t)
    diam = curve.diameter
    if diam <= 0.0 or not np.all(np.isfinite(sp)):
        raise DegenerateCurve(f"{label}: degenerate parametrization")
    tol = 1e-10 * diam
    if np.min(sp) < tol:
        raise DegenerateCurve(f"{label}: speed falls below {tol:g}")
    pts = curve.point(t)
    # off-diagonal pairs in parameter must stay separated in the plane
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    idx = np.arange(_VALIDATION_SAMPLES)
    sep = np.minimum(
        np.abs(idx[:, None] - idx[None, :]),
        _VALIDATION_SAMPLES - np.abs(idx[:, None] - idx[None, :]),
    )
    mask = sep >= 8
    if np.any(d[mask] <= tol):
        raise DegenerateCurve(f"{label}: self-intersection detected")
    if total_turning(curve) < 0.0:
        raise DegenerateCurve(f"{label}: clockwise orientation (must be anti-clockwise)")


def build_domain(
    outer: Curve,
    holes=(),
    punctures: PunctureSet | None = None,
    panels: int = 256,
    band_factor: float = 5.0,
) -> DomainSpec:
    """Validate geometry and return an immutable DomainSpec."""
    if punctures is None:
        punctures = PunctureSet()
    holes = tuple(holes)
    if panels % 2 != 0 or panels < 4:
        raise DegenerateCurve(f"panels must be an even integer >= 4, got {panels}")

    _validate_curve(outer, "outer curve")
    for j, h in enumerate(holes):
        _validate_curve(h, f"hole {j}")

    for j, h in enumerate(holes):
        pts = h.sample()
        if not np.all(winding_number(outer, pts) == 1):
            raise OverlappingCurves(f"hole {j} is not strictly inside the outer curve")
        for m in range(j):
            other = holes[m].sample()
            dmin = np.min(
                np.linalg.norm(pts[:, None, :] - other[None, :, :], axis=-1)
            )
            if dmin <= 1e-10 * outer.diameter or np.any(
                winding_number(holes[m], pts) == 1
            ) or np.any(winding_number(h, other) == 1):
                raise OverlappingCurves(f"holes {m} and {j} overlap")

    if punctures.k:
        a = punctures.points_array
        dmat = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=-1)
        dmat[np.arange(punctures.k), np.arange(punctures.k)] = np.inf
        if punctures.k > 1 and np.min(dmat) <= 0.0:
            raise PunctureOutsideDomain("punctures must be pairwise distinct")
        if np.any(punctures.degrees_array == 0):
            bad = int(np.argmax(punctures.degrees_array == 0))
            raise PunctureOutsideDomain(f"puncture {bad} has zero degree")

    spec = DomainSpec(
        outer=outer,
        holes=holes,
        punctures=punctures,
        panels=int(panels),
        band_factor=float(band_factor),
    )
    if punctures.k:
        inside = spec.contains(punctures.points_array)
        if not np.all(inside):
            bad = int(np.argmax(~inside))
            raise PunctureOutsideDomain(f"puncture {bad} lies outside the domain")
        if spec.rho_max <= 0.0:
            raise PunctureOutsideDomain("puncture configuration leaves no room")
    return spec


def omega_rho(domain: DomainSpec, rho: float) -> DomainSpec:
    """Excise disks of radius rho around the punctures.

    Returns a domain whose hole list gains one circle per puncture and whose
    puncture set is emptied.
    """
    rho = float(rho)
    if domain.punctures.k == 0:
        raise RhoTooLarge("domain has no punctures to excise")
    if not (0.0 < rho < domain.rho_max):
        raise RhoTooLarge(
            f"rho={rho:g} not in (0, rho_max={domain.rho_max:g})"
        )
    circles = tuple(
        Curve.circle(p, rho) for p in domain.punctures.points
    )
    return replace(
        domain,
        holes=tuple(domain.holes) + circles,
        punctures=PunctureSet(),
    )
