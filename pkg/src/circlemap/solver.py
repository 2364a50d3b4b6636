"""Nystrom boundary-integral solver for Laplace problems with log point sources.

Every field is represented as

    u(x) = sum_i d_i log|x - a_i|                (prescribed point sources)
         + sum_c S_c[sigma_c](x)                 (single-layer potential per component)
         + sum_{holes j} c_j log|x - z_j|        (auxiliary charge inside each hole)
         + omega                                 (global constant)

The layer densities are discretized at uniform parameter nodes; the weakly
singular self-interaction uses the periodized-log product quadrature, which
is spectrally accurate on smooth Fourier curves.  Rank deficiencies of the
single layer on multiply connected domains (degenerate scales, hole fluxes)
are repaired by bordering: a zero-mean constraint per density, the hole
charges, the global constant, and -- for problems without any fixed boundary
value -- a solvability slack plus a normalization row.  The bordered dense
system is solved by LU with partial pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    IncompatibleNeumannData,
    NoSuchSource,
    OverDeterminedProblem,
    PathTooCloseToSingularity,
    PunctureOutsideDomain,
    SolverSingular,
    TooCloseToBoundary,
    UnderDeterminedProblem,
)
from .geometry import DomainSpec, curve_frame

_FINE_CAP = 2 ** 21
_GAUSS_ORDER = 16


# --------------------------------------------------------------------------
# problem descriptors


@dataclass(frozen=True)
class SourceTerm:
    """Point sources contributing sum_i d_i log|x - a_i|."""

    points: tuple = ()
    strengths: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "points", tuple((float(p[0]), float(p[1])) for p in self.points)
        )
        object.__setattr__(
            self, "strengths", tuple(float(d) for d in self.strengths)
        )

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def points_array(self):
        return np.asarray(self.points, dtype=float).reshape(self.k, 2)

    @property
    def strengths_array(self):
        return np.asarray(self.strengths, dtype=float)

    @property
    def total(self) -> float:
        return float(sum(self.strengths))


@dataclass(frozen=True)
class ValueCondition:
    """Prescribed boundary values (constant, node array, or callable of t)."""

    values: object = 0.0


@dataclass(frozen=True)
class NeumannCondition:
    """Prescribed normal derivative in the outward-of-domain convention."""

    data: object = 0.0


@dataclass(frozen=True)
class FloatingCondition:
    """Unknown constant boundary value with prescribed total outward flux."""

    flux: float = 0.0


# --------------------------------------------------------------------------
# quadrature helpers


def _log_weights(t_eval, s_nodes):
    """Product-quadrature weights for the kernel log(4 sin^2((t-s)/2)).

    Row i approximates  integral_0^{2pi} f(s) log(4 sin^2((t_i - s)/2)) ds
    as sum_k R[i, k] f(s_k), exact for trigonometric polynomials of degree
    below N/2.
    """
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    n_half = len(s_nodes) // 2
    diff = t_eval[:, None] - s_nodes[None, :]
    acc = np.zeros_like(diff)
    for m in range(1, n_half):
        acc += np.cos(m * diff) / m
    acc = 2.0 * acc + np.cos(n_half * diff) / n_half
    return -(2.0 * np.pi / len(s_nodes)) * acc


def _resample_periodic(values, n_fine):
    """Trigonometric interpolation of uniform samples onto a finer grid."""
    n = len(values)
    if n_fine == n:
        return np.asarray(values, dtype=float)
    spec = np.fft.rfft(values)
    spec[-1] *= 0.5  # split the Nyquist bin before embedding
    out = np.zeros(n_fine // 2 + 1, dtype=complex)
    out[: len(spec)] = spec
    return np.fft.irfft(out, n=n_fine) * (n_fine / n)


def _trig_eval(values, t):
    """Evaluate the trig interpolant of uniform samples at arbitrary t."""
    n = len(values)
    spec = np.fft.rfft(values) / n
    t = np.atleast_1d(np.asarray(t, dtype=float))
    m = np.arange(1, len(spec))
    w = np.where(m < n / 2, 2.0, 1.0)
    phase = np.outer(t, m)
    out = (np.cos(phase) @ (w * np.real(spec[1:]))
           - np.sin(phase) @ (w * np.imag(spec[1:]))
           + float(np.real(spec[0])))
    return out


def _spectral_derivative(values):
    """d/dt of the trig interpolant, sampled at the same uniform nodes."""
    n = len(values)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    spec = np.fft.rfft(values) * (1j * k)
    if n % 2 == 0:
        spec[-1] = 0.0
    return np.fft.irfft(spec, n=n)


# --------------------------------------------------------------------------
# the solved field


class HarmonicField:
    """Immutable solved Laplace field; see module docstring for the ansatz."""

    def __init__(self, domain, sources, conditions, sigma, charges, omega,
                 slack, floating, geometry):
        self.domain = domain
        self.sources = sources
        self.conditions = tuple(conditions)
        self.sigma = sigma            # (C, N) layer densities
        self.charges = charges        # (C,) log-charge per component (0 for outer)
        self.omega = float(omega)
        self.slack = float(slack)
        self.floating = dict(floating)  # component index -> solved constant
        self.geo = geometry           # per-component node geometry
        self._fine_cache = {}
        self._trace_cache = None
        self._dn_cache = None

    # -- basic geometry ----------------------------------------------------

    @property
    def n_components(self) -> int:
        return len(self.geo["points"])

    @property
    def n_nodes(self) -> int:
        return self.geo["points"][0].shape[0]

    @property
    def h_band(self) -> float:
        return self.geo["h"]

    @property
    def nodes_t(self):
        return self.geo["t"]

    def charge_centers(self):
        return self.geo["centers"]

    # -- distances ---------------------------------------------------------

    def component_distance(self, x):
        """Distance from points x to each component's dense sample cloud."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((x.shape[0], self.n_components))
        for c, cloud in enumerate(self.geo["clouds"]):
            d = np.linalg.norm(x[:, None, :] - cloud[None, :, :], axis=-1)
            out[:, c] = d.min(axis=1)
        return out

    def _fine_geometry(self, comp, n_fine):
        key = (comp, n_fine)
        if key not in self._fine_cache:
            curve = self.domain.curves[comp]
            t = np.linspace(0.0, 2.0 * np.pi, n_fine, endpoint=False)
            p, tau, nu, sp = curve_frame(curve, t, hole=self.domain.is_hole(comp))
            sig = _resample_periodic(self.sigma[comp], n_fine)
            self._fine_cache[key] = (p, nu, sp, sig)
        return self._fine_cache[key]


# --------------------------------------------------------------------------
# assembly


def _node_geometry(domain: DomainSpec):
    n = domain.panels
    t = 2.0 * np.pi * np.arange(n) / n
    points, taus, nus, speeds, accs, clouds, centers = [], [], [], [], [], [], []
    t_cloud = np.linspace(0.0, 2.0 * np.pi, 2048, endpoint=False)
    for c, curve in enumerate(domain.curves):
        p, tau, nu, sp = curve_frame(curve, t, hole=domain.is_hole(c))
        points.append(p)
        taus.append(tau)
        nus.append(nu)
        speeds.append(sp)
        accs.append(curve.acceleration(t))
        clouds.append(curve.point(t_cloud))
        centers.append(curve.sample().mean(axis=0))
    max_spacing = max((2.0 * np.pi / n) * sp.max() for sp in speeds)
    return {
        "t": t,
        "points": points,
        "tau": taus,
        "nu": nus,
        "speed": speeds,
        "acc": accs,
        "clouds": clouds,
        "centers": centers,
        "h": domain.band_factor * max_spacing,
    }


def _trace_blocks(geo, t_eval=None, comp_eval=None):
    """Single-layer trace matrices.

    Without arguments: node-to-node blocks T[p][q] mapping density values on
    component q to the potential trace at the nodes of component p.  With
    (t_eval, comp_eval): rows for arbitrary parameters on one component.
    """
    n = len(geo["points"][0])
    t = geo["t"]
    ncomp = len(geo["points"])
    w = 2.0 * np.pi / n

    def rows_for(p_pts, pcomp, t_rows):
        blocks = []
        for q in range(ncomp):
            yq = geo["points"][q]
            spq = geo["speed"][q]
            if q == pcomp:
                diff = t_rows[:, None] - t[None, :]
                r = np.linalg.norm(p_pts[:, None, :] - yq[None, :, :], axis=-1)
                s2 = np.abs(2.0 * np.sin(diff / 2.0))
                smooth = np.where(
                    s2 < 1e-12,
                    np.log(np.maximum(_trig_eval(spq, t_rows)[:, None] *
                                      np.ones_like(r), 1e-300)),
                    np.log(np.maximum(r, 1e-300) / np.maximum(s2, 1e-300)),
                )
                block = (0.5 * _log_weights(t_rows, t) + w * smooth) * spq[None, :]
            else:
                r = np.linalg.norm(p_pts[:, None, :] - yq[None, :, :], axis=-1)
                block = w * np.log(r) * spq[None, :]
            blocks.append(block)
        return blocks

    if t_eval is None:
        return [rows_for(geo["points"][p], p, t) for p in range(ncomp)]
    curve_pts = np.atleast_1d(np.asarray(t_eval, dtype=float))
    p_pts = np.stack(
        [_trig_eval(geo["points"][comp_eval][:, 0], curve_pts),
         _trig_eval(geo["points"][comp_eval][:, 1], curve_pts)], axis=-1
    )
    return rows_for(p_pts, comp_eval, curve_pts)


def _dn_blocks(geo, t_eval=None, comp_eval=None, frames=None):
    """Outward-normal-derivative matrices (one-sided interior limit).

    The self block uses the smooth adjoint-double-layer kernel plus the
    -pi * sigma jump term.
    """
    n = len(geo["points"][0])
    t = geo["t"]
    ncomp = len(geo["points"])
    w = 2.0 * np.pi / n

    def rows_for(p_pts, p_nu, pcomp, t_rows, jump):
        blocks = []
        for q in range(ncomp):
            yq = geo["points"][q]
            spq = geo["speed"][q]
            diff = p_pts[:, None, :] - yq[None, :, :]
            r2 = np.sum(diff * diff, axis=-1)
            num = np.sum(diff * p_nu[:, None, :], axis=-1)
            if q == pcomp:
                # coincident parameters: smooth diagonal limit of the kernel
                dt = t_rows[:, None] - t[None, :]
                near = np.abs(np.sin(dt / 2.0)) < 1e-9
                r2 = np.where(near, 1.0, r2)
                kern = num / r2
                if np.any(near):
                    acc = geo["acc"][pcomp]
                    sp = geo["speed"][pcomp]
                    nu = geo["nu"][pcomp]
                    diag = -np.sum(acc * nu, axis=1) / (2.0 * sp ** 2)
                    diag_rows = _trig_eval(diag, t_rows)
                    kern = np.where(near, diag_rows[:, None], kern)
                block = w * kern * spq[None, :]
                if jump is not None:
                    block = block - np.pi * jump
            else:
                block = w * (num / r2) * spq[None, :]
            blocks.append(block)
        return blocks

    if t_eval is None:
        out = []
        for p in range(ncomp):
            out.append(
                rows_for(geo["points"][p], geo["nu"][p], p, t, np.eye(n))
            )
        return out
    t_rows = np.atleast_1d(np.asarray(t_eval, dtype=float))
    p_pts, p_nu = frames
    # jump matrix: -pi times trig interpolation of sigma at t_rows
    interp = _trig_interp_matrix(n, t_rows)
    return rows_for(p_pts, p_nu, comp_eval, t_rows, interp)


def _trig_interp_matrix(n, t_rows):
    """Matrix mapping n uniform samples to trig-interpolant values at t_rows.

    Closed-form periodic cardinal function for even n:
    K(tau) = sin(n tau / 2) * cot(tau / 2) / n, with K(0) = 1.
    """
    t_rows = np.atleast_1d(np.asarray(t_rows, dtype=float))
    s = 2.0 * np.pi * np.arange(n) / n
    tau = t_rows[:, None] - s[None, :]
    half = np.sin(tau / 2.0)
    tiny = np.abs(half) < 1e-12
    half = np.where(tiny, 1.0, half)
    kern = np.sin(n * tau / 2.0) * np.cos(tau / 2.0) / (n * half)
    return np.where(tiny, 1.0, kern)


def _node_values(geo, comp, val):
    t = geo["t"]
    if callable(val):
        return np.asarray(val(t), dtype=float) * np.ones_like(t)
    arr = np.asarray(val, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.ones_like(t)
    if arr.shape != t.shape:
        raise OverDeterminedProblem(
            f"component {comp}: boundary data has {arr.shape[0]} values, "
            f"expected {len(t)}"
        )
    return arr


def _source_trace(sources, pts):
    if sources is None or sources.k == 0:
        return np.zeros(pts.shape[0])
    diff = pts[:, None, :] - sources.points_array[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    return np.log(r) @ sources.strengths_array


def _source_grad(sources, pts):
    if sources is None or sources.k == 0:
        return np.zeros_like(pts)
    diff = pts[:, None, :] - sources.points_array[None, :, :]
    r2 = np.sum(diff * diff, axis=-1)
    return np.einsum("pk,pkd->pd", sources.strengths_array[None, :] / r2, diff)


def solve(domain: DomainSpec, sources, conditions, normalization="boundary_mean"):
    """Solve the mixed boundary-value problem described by `conditions`.

    conditions: one of ValueCondition / NeumannCondition / FloatingCondition
    per boundary component (outer first).  Neumann data and fluxes use the
    outward-of-domain normal on every component.
    """
    if sources is not None and sources.k:
        if not np.all(domain.contains(sources.points_array)):
            raise PunctureOutsideDomain("a log source lies outside the domain")
    ncomp = 1 + domain.n_holes
    conditions = tuple(conditions)
    if len(conditions) != ncomp:
        raise UnderDeterminedProblem(
            f"expected {ncomp} boundary conditions, got {len(conditions)}"
        )
    for c, cond in enumerate(conditions):
        if isinstance(cond, FloatingCondition) and c == 0:
            raise UnderDeterminedProblem(
                "outer component cannot carry a floating constant"
            )

    geo = _node_geometry(domain)
    n = domain.panels
    w = 2.0 * np.pi / n
    has_value = any(isinstance(c, ValueCondition) for c in conditions)
    free = not has_value  # needs slack + normalization row

    # solvability check when no fixed value pins the problem
    if free:
        total = sources.total if sources is not None else 0.0
        given = 0.0
        for c, cond in enumerate(conditions):
            if isinstance(cond, NeumannCondition):
                q = _node_values(geo, c, cond.data)
                given += np.sum(q * geo["speed"][c]) * w
            else:
                given += cond.flux
        if abs(given - 2.0 * np.pi * total) > 1e-8 * max(1.0, abs(total)):
            raise IncompatibleNeumannData(
                f"total prescribed flux {given:.3e} != 2*pi*sources "
                f"{2.0 * np.pi * total:.3e}"
            )

    float_comps = [c for c, cond in enumerate(conditions)
                   if isinstance(cond, FloatingCondition)]
    hole_comps = list(range(1, ncomp))

    nsig = ncomp * n
    idx_charge = {c: nsig + j for j, c in enumerate(hole_comps)}
    off = nsig + len(hole_comps)
    idx_mu = {c: off + j for j, c in enumerate(float_comps)}
    off += len(float_comps)
    idx_omega = off
    off += 1
    idx_slack = off if free else None
    nun = off + (1 if free else 0)

    A = np.zeros((nun, nun))
    b = np.zeros(nun)

    T = _trace_blocks(geo)
    D = _dn_blocks(geo)

    src_pts = sources.points_array if (sources is not None and sources.k) else None

    def charge_trace(pts):
        cols = np.empty((pts.shape[0], len(hole_comps)))
        for j, hc in enumerate(hole_comps):
            cols[:, j] = np.log(
                np.linalg.norm(pts - geo["centers"][hc][None, :], axis=-1)
            )
        return cols

    def charge_dn(pts, nus):
        cols = np.empty((pts.shape[0], len(hole_comps)))
        for j, hc in enumerate(hole_comps):
            diff = pts - geo["centers"][hc][None, :]
            cols[:, j] = np.sum(diff * nus, axis=-1) / np.sum(diff * diff, axis=-1)
        return cols

    row = 0
    all_trace_rows, all_trace_rhs, all_w, all_dn_rows, all_dn_rhs = [], [], [], [], []

    for c, cond in enumerate(conditions):
        pts = geo["points"][c]
        nus = geo["nu"][c]
        sp = geo["speed"][c]
        rows_T = np.zeros((n, nun))
        for q in range(ncomp):
            rows_T[:, q * n:(q + 1) * n] = T[c][q]
        if hole_comps:
            ct = charge_trace(pts)
            for j, hc in enumerate(hole_comps):
                rows_T[:, idx_charge[hc]] = ct[:, j]
        rows_T[:, idx_omega] = 1.0
        rhs_T = -_source_trace(sources, pts)

        rows_D = np.zeros((n, nun))
        for q in range(ncomp):
            rows_D[:, q * n:(q + 1) * n] = D[c][q]
        if hole_comps:
            cd = charge_dn(pts, nus)
            for j, hc in enumerate(hole_comps):
                rows_D[:, idx_charge[hc]] = cd[:, j]
        rhs_D = -np.sum(_source_grad(sources, pts) * nus, axis=-1) \
            if src_pts is not None else np.zeros(n)

        all_trace_rows.append(rows_T)
        all_trace_rhs.append(rhs_T)
        all_w.append(w * sp)
        all_dn_rows.append(rows_D)
        all_dn_rhs.append(rhs_D)

        if isinstance(cond, ValueCondition):
            f = _node_values(geo, c, cond.values)
            A[row:row + n] = rows_T
            b[row:row + n] = f + rhs_T
        elif isinstance(cond, NeumannCondition):
            q_data = _node_values(geo, c, cond.data)
            A[row:row + n] = rows_D
            if free:
                A[row:row + n, idx_slack] = 1.0
            b[row:row + n] = q_data + rhs_D
        else:  # floating
            A[row:row + n] = rows_T
            A[row:row + n, idx_mu[c]] = -1.0
            b[row:row + n] = rhs_T
        row += n

    # zero-mean constraint per density
    for c in range(ncomp):
        A[row, c * n:(c + 1) * n] = w * geo["speed"][c]
        b[row] = 0.0
        row += 1

    # prescribed flux per floating component (enclosed-charge identity)
    for c in float_comps:
        A[row, idx_charge[c]] = -2.0 * np.pi
        A[row, c * n:(c + 1) * n] = -2.0 * np.pi * w * geo["speed"][c]
        b[row] = conditions[c].flux
        row += 1

    if free:
        if normalization == "boundary_mean":
            # boundary mean of u = 0 with u = (trace rows) @ x - rhs_T
            for c in range(ncomp):
                A[row] += all_w[c] @ all_trace_rows[c]
            b[row] = sum(all_w[c] @ all_trace_rhs[c] for c in range(ncomp))
        elif normalization == "area_mean":
            # int_G u = sum_c oint (u dv/dn - v du/dn) + (pi/2) sum d_i |a_i|^2
            for c in range(ncomp):
                pts = geo["points"][c]
                nus = geo["nu"][c]
                dvdn = 0.5 * np.sum(pts * nus, axis=-1)
                v = 0.25 * np.sum(pts * pts, axis=-1)
                A[row] += (all_w[c] * dvdn) @ all_trace_rows[c]
                A[row] -= (all_w[c] * v) @ all_dn_rows[c]
                b[row] += (all_w[c] * dvdn) @ all_trace_rhs[c]
                b[row] -= (all_w[c] * v) @ all_dn_rhs[c]
            if sources is not None and sources.k:
                b[row] -= (np.pi / 2.0) * float(
                    np.sum(sources.strengths_array *
                           np.sum(sources.points_array ** 2, axis=1))
                )
        else:
            raise UnderDeterminedProblem(
                f"unknown normalization {normalization!r}"
            )
        row += 1

    if row != nun:
        raise SolverSingular(
            f"internal assembly mismatch: {row} rows for {nun} unknowns"
        )

    try:
        lu, piv = scipy.linalg.lu_factor(A)
        x = scipy.linalg.lu_solve((lu, piv), b)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SolverSingular(str(exc)) from exc
    resid = np.linalg.norm(A @ x - b) / max(1.0, np.linalg.norm(b))
    if not np.all(np.isfinite(x)) or resid > 1e-6:
        raise SolverSingular(f"linear system residual {resid:.3e}")

    sigma = x[:nsig].reshape(ncomp, n)
    charges = np.zeros(ncomp)
    for c in hole_comps:
        charges[c] = x[idx_charge[c]]
    floating = {c: float(x[idx_mu[c]]) for c in float_comps}
    omega = x[idx_omega]
    slack = x[idx_slack] if free else 0.0

    return HarmonicField(domain, sources, conditions, sigma, charges, omega,
                         slack, floating, geo)


def solve_dirichlet(domain, sources, values):
    """Prescribed boundary values on every component."""
    return solve(domain, sources, [ValueCondition(v) for v in values])


def solve_neumann(domain, sources, data, normalization="boundary_mean"):
    """Prescribed outward normal derivative on every component."""
    return solve(domain, sources, [NeumannCondition(q) for q in data],
                 normalization=normalization)


def solve_modified_dirichlet(domain, sources, conditions,
                             normalization="boundary_mean"):
    """Mixed problem: values / Neumann data / floating constants with fluxes."""
    return solve(domain, sources, conditions, normalization=normalization)


# --------------------------------------------------------------------------
# evaluation


def _layer_eval(field, x, want_grad, fine):
    """Value/gradient of layers + charges + omega at interior points."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    val = np.full(x.shape[0], field.omega)
    grad = np.zeros_like(x)
    geo = field.geo
    dists = field.component_distance(x) if fine else None
    for c in range(field.n_components):
        if fine:
            dmin = max(dists[:, c].min(), 1e-300)
            max_sp = geo["speed"][c].max()
            need = 24.0 * max_sp / dmin
            n_fine = field.n_nodes
            while n_fine < need and n_fine < _FINE_CAP:
                n_fine *= 2
            pts, nus, sp, sig = field._fine_geometry(c, n_fine)
        else:
            pts, sp, sig = geo["points"][c], geo["speed"][c], field.sigma[c]
        wq = 2.0 * np.pi / len(sp)
        diff = x[:, None, :] - pts[None, :, :]
        r2 = np.maximum(np.sum(diff * diff, axis=-1), 1e-300)
        wgt = wq * sig * sp
        val += 0.5 * np.log(r2) @ wgt
        if want_grad:
            grad += np.einsum("pk,pkd->pd", wgt[None, :] / r2, diff)
    for c in range(1, field.n_components):
        z = geo["centers"][c]
        diff = x - z[None, :]
        r2 = np.sum(diff * diff, axis=-1)
        val += field.charges[c] * 0.5 * np.log(r2)
        if want_grad:
            grad += field.charges[c] * diff / r2[:, None]
    return (val, grad) if want_grad else val


def _full_eval(field, x, want_grad, fine):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if want_grad:
        val, grad = _layer_eval(field, x, True, fine)
        val = val + _source_trace(field.sources, x)
        grad = grad + _source_grad(field.sources, x)
        return val, grad
    return _layer_eval(field, x, False, fine) + _source_trace(field.sources, x)


def _check_band(field, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = field.component_distance(x).min(axis=1)
    if np.any(d <= field.h_band):
        bad = int(np.argmin(d))
        raise TooCloseToBoundary(
            f"point {tuple(x[bad])} is {d[bad]:.3e} from the boundary "
            f"(band {field.h_band:.3e}); use boundary_trace instead"
        )


def eval_field(field, x):
    """Field value at interior points farther than the near band."""
    _check_band(field, x)
    out = _full_eval(field, x, False, False)
    return out if np.asarray(x).ndim > 1 else float(out[0])


def eval_grad(field, x):
    """Analytic field gradient at interior points farther than the near band."""
    _check_band(field, x)
    _, g = _full_eval(field, x, True, False)
    return g if np.asarray(x).ndim > 1 else g[0]


def eval_field_accurate(field, x):
    """Value evaluation valid also inside the near band (adaptive upsampling)."""
    out = _full_eval(field, x, False, True)
    return out if np.asarray(x).ndim > 1 else float(out[0])


def eval_grad_accurate(field, x):
    _, g = _full_eval(field, x, True, True)
    return g if np.asarray(x).ndim > 1 else g[0]


# --------------------------------------------------------------------------
# boundary quantities


def _node_traces(field):
    if field._trace_cache is None:
        geo = field.geo
        n = field.n_nodes
        T = _trace_blocks(geo)
        traces = []
        for c in range(field.n_components):
            val = np.full(n, field.omega)
            for q in range(field.n_components):
                val += T[c][q] @ field.sigma[q]
            for hc in range(1, field.n_components):
                val += field.charges[hc] * np.log(
                    np.linalg.norm(geo["points"][c] - geo["centers"][hc][None, :],
                                   axis=-1)
                )
            val += _source_trace(field.sources, geo["points"][c])
            traces.append(val)
        field._trace_cache = traces
    return field._trace_cache


def _node_dns(field):
    if field._dn_cache is None:
        geo = field.geo
        D = _dn_blocks(geo)
        out = []
        for c in range(field.n_components):
            val = np.zeros(field.n_nodes)
            for q in range(field.n_components):
                val += D[c][q] @ field.sigma[q]
            nus = geo["nu"][c]
            pts = geo["points"][c]
            for hc in range(1, field.n_components):
                diff = pts - geo["centers"][hc][None, :]
                val += field.charges[hc] * np.sum(diff * nus, axis=-1) / \
                    np.sum(diff * diff, axis=-1)
            val += np.sum(_source_grad(field.sources, pts) * nus, axis=-1)
            out.append(val)
        field._dn_cache = out
    return field._dn_cache


def boundary_trace(field, component, t=None):
    """One-sided boundary values; spectrally interpolated for arbitrary t."""
    traces = _node_traces(field)[component]
    if t is None:
        return traces.copy()
    return _trig_eval(traces, np.asarray(t, dtype=float))


def boundary_normal_derivative(field, component, t=None):
    """One-sided outward normal derivative on a component."""
    dns = _node_dns(field)[component]
    if t is None:
        return dns.copy()
    t = np.atleast_1d(np.asarray(t, dtype=float))
    geo = field.geo
    curve = field.domain.curves[component]
    pts, tau, nu, sp = curve_frame(curve, t, hole=field.domain.is_hole(component))
    rows = _dn_blocks(geo, t_eval=t, comp_eval=component, frames=(pts, nu))
    val = np.zeros(len(t))
    for q in range(field.n_components):
        val += rows[q] @ field.sigma[q]
    for hc in range(1, field.n_components):
        diff = pts - geo["centers"][hc][None, :]
        val += field.charges[hc] * np.sum(diff * nu, axis=-1) / \
            np.sum(diff * diff, axis=-1)
    val += np.sum(_source_grad(field.sources, pts) * nu, axis=-1)
    return val


def boundary_gradient(field, component, t):
    """Full one-sided gradient on the boundary: normal + tangential parts."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    curve = field.domain.curves[component]
    pts, tau, nu, sp = curve_frame(curve, t, hole=field.domain.is_hole(component))
    dn = boundary_normal_derivative(field, component, t)
    dtrace = _spectral_derivative(_node_traces(field)[component])
    dt_at = _trig_eval(dtrace, t) / sp
    return dn[:, None] * nu + dt_at[:, None] * tau


def flux(field, component):
    """Total outward flux through a component, from the enclosed charges."""
    geo = field.geo
    n = field.n_nodes
    w = 2.0 * np.pi / n
    if component == 0:
        total = field.sources.total if field.sources is not None else 0.0
        for c in range(1, field.n_components):
            total += field.charges[c] + w * np.sum(field.sigma[c] * geo["speed"][c])
        return 2.0 * np.pi * total
    c = component
    return -2.0 * np.pi * (
        field.charges[c] + w * np.sum(field.sigma[c] * geo["speed"][c])
    )


def tangential_integral(field, component):
    """Closed-loop integral of the tangential derivative (vanishes exactly)."""
    dtrace = _spectral_derivative(_node_traces(field)[component])
    return float(np.sum(dtrace)) * (2.0 * np.pi / field.n_nodes)


def regular_part(field, index):
    """Source-subtracted field value at source point `index`."""
    if field.sources is None or not (0 <= index < field.sources.k):
        raise NoSuchSource(f"field has no log source with index {index}")
    a = field.sources.points_array[index]
    val = float(_layer_eval(field, a[None, :], False, True)[0])
    for j in range(field.sources.k):
        if j != index:
            val += field.sources.strengths[j] * np.log(
                np.linalg.norm(a - field.sources.points_array[j])
            )
    return val


# --------------------------------------------------------------------------
# path integrals


def _gauss_panel(a, b, order=_GAUSS_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _rot90m(v):
    """Rotate vectors by -90 degrees: (x, y) -> (y, -x)."""
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def path_integral_perp(terms, vertices, *, boundary_start=None, boundary_end=None):
    """Integrate sum_j (wp_j grad^perp(u_j) + wg_j grad(u_j)) . dl over a polyline.

    terms: sequence of (field, w_perp, w_grad).  All fields must share a
    domain.  A vertex may lie exactly on the boundary only at the two ends;
    pass boundary_start/boundary_end as (component, parameter) so the exact
    one-sided boundary gradient can anchor the endpoint quadrature.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[0] < 2:
        raise PathTooCloseToSingularity("path needs at least two vertices")
    fields = [f for f, _, _ in terms]
    domain = fields[0].domain
    diam = domain.diameter

    # singularity guard: sources and hole-charge centers
    guards = []
    for f in fields:
        if f.sources is not None:
            for p in f.sources.points:
                guards.append(np.asarray(p))
    clearance = 1e-3 * diam
    for seg in range(vertices.shape[0] - 1):
        a, b = vertices[seg], vertices[seg + 1]
        for gpt in guards:
            ab = b - a
            tt = np.clip(np.dot(gpt - a, ab) / max(np.dot(ab, ab), 1e-300), 0, 1)
            if np.linalg.norm(a + tt * ab - gpt) < clearance:
                raise PathTooCloseToSingularity(
                    f"path passes within {clearance:.2e} of a singular point"
                )

    def integrand(pts, dirs):
        # dirs: unit direction per point
        out = np.zeros(pts.shape[0])
        for f, wp, wg in terms:
            if wp == 0.0 and wg == 0.0:
                continue
            g = eval_grad_accurate(f, pts)
            if wp:
                out += wp * np.sum(g * _rot90m(dirs), axis=-1)
            if wg:
                out += wg * np.sum(g * dirs, axis=-1)
        return out

    def boundary_value(binfo, direction):
        comp, tpar = binfo
        out = 0.0
        for f, wp, wg in terms:
            g = boundary_gradient(f, comp, [tpar])[0]
            if wp:
                out += wp * float(np.dot(g, _rot90m(direction[None, :])[0]))
            if wg:
                out += wg * float(np.dot(g, direction))
        return out

    total = 0.0
    nseg = vertices.shape[0] - 1
    h = min(f.h_band for f in fields)
    stub = 4e-4 * diam
    for seg in range(nseg):
        a, b = vertices[seg], vertices[seg + 1]
        length = np.linalg.norm(b - a)
        if length == 0.0:
            continue
        direction = (b - a) / length
        s_lo, s_hi = 0.0, length
        # endpoint handling: dyadic refinement toward on-boundary endpoints
        ends = []
        if seg == 0 and boundary_start is not None:
            ends.append(("start", boundary_start))
        if seg == nseg - 1 and boundary_end is not None:
            ends.append(("end", boundary_end))
        sub = []  # list of (sa, sb) inner panels in arclength along the segment
        for which, binfo in ends:
            ladder = [min(length / 2.0, h)]
            while ladder[-1] > stub:
                ladder.append(ladder[-1] / 2.0)
            # stub piece with the exact boundary-limit integrand value
            f0 = boundary_value(binfo, direction)
            eps = ladder[-1]
            if which == "start":
                p_eps = a + eps * direction
                f_eps = float(integrand(p_eps[None, :], direction[None, :])[0])
                total += 0.5 * eps * (f0 + f_eps)
                for k in range(len(ladder) - 1):
                    sub.append((ladder[k + 1], ladder[k]))
                s_lo = ladder[0]
            else:
                p_eps = b - eps * direction
                f_eps = float(integrand(p_eps[None, :], direction[None, :])[0])
                total += 0.5 * eps * (f0 + f_eps)
                for k in range(len(ladder) - 1):
                    sub.append((length - ladder[k], length - ladder[k + 1]))
                s_hi = length - ladder[0]
        if s_hi > s_lo:
            npan = max(1, int(np.ceil((s_hi - s_lo) / max(h, 1e-12))))
            edges = np.linspace(s_lo, s_hi, npan + 1)
            sub.extend(zip(edges[:-1], edges[1:]))
        for sa, sb in sub:
            order = 8 if (sb - sa) < h / 16.0 else _GAUSS_ORDER
            s_nodes, s_w = _gauss_panel(sa, sb, order)
            pts = a[None, :] + s_nodes[:, None] * direction[None, :]
            vals = integrand(pts, np.repeat(direction[None, :], len(s_nodes), 0))
            total += float(np.dot(s_w, vals))
    return total
