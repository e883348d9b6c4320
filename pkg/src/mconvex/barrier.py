"""Barrier vectorfield construction and pointwise verification.

Given a boundary point p of a domain N = {u0 >= 0} and a target constant
eta below the sum of the m smallest boundary curvatures at p, this module
builds the contact surface Sigma (the boundary displaced outward by the
fourth power of the distance to p), the signed distance u to Sigma, the
exponential cutoff phi, and the vectorfield X = phi(u) nu.  It then checks,
on a grid, that the top-m eigenvalue sum of the symmetrized covariant
differential of X stays below -eta |X|.

The analytic evaluation path (exact foot points plus the tube transformation
k(u) = kappa / (1 - u kappa) of principal curvatures) is available for the
euclidean metric and for constant conformal rescalings of it; general
metrics fall back to geodesic shooting for distances and finite differences
for derivatives, at correspondingly looser tolerances.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import (
    Domain,
    GeometryError,
    ScalarField,
    SumField,
    QuarticGapField,
    VectorField,
    bilinear_form_Q,
    christoffel,
    levelset_shape,
    top_m_eigensum,
)


class BarrierRefusal(GeometryError):
    """The Theorem-2 hypothesis fails: requested eta >= curvature sum at p."""


class TubeError(GeometryError):
    """A point could not be handled inside the tube around Sigma."""


# --------------------------------------------------------------------------
# cutoff


def cutoff(t, eps):
    """phi(t) = exp(1/(t - eps)) for 0 <= t < eps, 0 for t >= eps."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("cutoff argument must be nonnegative")
    inside = t < eps
    with np.errstate(divide="ignore"):
        out = np.where(inside, np.exp(1.0 / np.where(inside, t - eps, -1.0)), 0.0)
    return out


def cutoff_derivative(t, eps):
    """phi'(t) = -phi(t) / (t - eps)^2 on [0, eps), 0 for t >= eps."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("cutoff argument must be nonnegative")
    inside = t < eps
    denom = np.where(inside, (t - eps) ** 2, 1.0)
    return np.where(inside, -cutoff(t, eps) / denom, 0.0)


# --------------------------------------------------------------------------
# the contact surface


@dataclass
class SigmaSurface:
    """Implicit surface {w = 0} with w = u0 + |x - p|_g(p)^4.

    w is positive on N away from p, so the zero set touches N only at p and
    makes second-order contact with the boundary there (the gap over the
    boundary is quartic in the distance to p).
    """

    domain: Domain
    p: np.ndarray
    w: ScalarField = field(init=False)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        gram = np.asarray(self.domain.metric.matrix(self.p), dtype=float)
        self.w = SumField([self.domain.u0, QuarticGapField(self.p, gram)])

    def project(self, x, tol=1e-12, max_iter=60):
        """Euclidean closest point on {w = 0}.

        Returns ``(foot, ok)``; ``ok`` is False where the KKT Newton
        iteration failed to converge (point outside the tube).
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x.reshape(-1, x.shape[-1])
        n = pts.shape[-1]
        y = pts.copy()
        gw = self.w.gradient(y)
        lam = self.w.value(y) / np.maximum(
            np.einsum("...i,...i->...", gw, gw), 1e-20
        )
        max_step = 0.25 * self.domain.chart_diameter()
        ok = np.ones(len(pts), dtype=bool)
        for _ in range(max_iter):
            wv = self.w.value(y)
            gw = self.w.gradient(y)
            Hw = self.w.hessian(y)
            res_y = y - pts + lam[:, None] * gw
            res = np.concatenate([res_y, wv[:, None]], axis=-1)
            if np.all(np.linalg.norm(res, axis=-1) <= tol):
                break
            J = np.zeros((len(pts), n + 1, n + 1))
            J[:, :n, :n] = np.eye(n) + lam[:, None, None] * Hw
            J[:, :n, n] = gw
            J[:, n, :n] = gw
            try:
                step = np.linalg.solve(J, res[..., None])[..., 0]
            except np.linalg.LinAlgError:
                ok[:] = False
                break
            # damp overlong steps; keeps far-away starts from exploding
            norms = np.linalg.norm(step[:, :n], axis=-1)
            scale = np.minimum(1.0, max_step / np.maximum(norms, 1e-300))
            step = step * scale[:, None]
            y = y - step[:, :n]
            lam = lam - step[:, n]
        final = np.abs(self.w.value(y))
        grad_final = self.w.gradient(y)
        align = y - pts + lam[:, None] * grad_final
        ok = ok & (final <= 1e-9) & (np.linalg.norm(align, axis=-1) <= 1e-7)
        ok = ok & np.all(np.isfinite(y), axis=-1)
        if single:
            return y[0], bool(ok[0])
        return y.reshape(x.shape), ok.reshape(x.shape[:-1])


# --------------------------------------------------------------------------
# tube evaluation (foot points, distances, curvatures)


_EUCLID_CACHE = {}


def _euclid(n):
    if n not in _EUCLID_CACHE:
        _EUCLID_CACHE[n] = geo.EuclideanMetric(n)
    return _EUCLID_CACHE[n]


@dataclass
class TubeData:
    """Per-point geometric data of the signed-distance foliation of Sigma.

    Quantities are in metric units; ``nu`` carries chart coordinates of the
    g-unit normal, ``frame`` the g-orthonormal principal directions of the
    level set through each point, ``curvatures`` ascending.
    """

    u: np.ndarray
    nu: np.ndarray
    curvatures: np.ndarray
    frame: np.ndarray
    hess_u: np.ndarray  # coordinate Hessian of u
    foot: np.ndarray
    valid: np.ndarray


def tube_eval(sigma, x, scale_factor=1.0):
    """Evaluate distance/normal/curvature data at points ``x``.

    ``scale_factor`` is the constant c with g = c^2 * euclidean; the
    evaluation is exact up to the Newton projection tolerance.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        data = tube_eval(sigma, x[None, :], scale_factor)
        return TubeData(*[np.asarray(v)[0] for v in (
            data.u, data.nu, data.curvatures, data.frame, data.hess_u,
            data.foot, data.valid,
        )])
    c = float(scale_factor)
    foot, ok = sigma.project(x)
    w_x = sigma.w.value(x)
    sgn = np.where(w_x >= 0.0, 1.0, -1.0)
    diff = x - foot
    d_e = np.linalg.norm(diff, axis=-1)
    u_e = sgn * d_e

    shp = levelset_shape(sigma.w, np.where(ok[..., None], foot, sigma.p), _euclid(sigma.p.shape[0]))
    kappa = shp.values  # Sigma curvatures at the foot, euclidean units
    denom = 1.0 - u_e[..., None] * kappa
    valid = ok & np.all(denom > 0.05, axis=-1)

    k_e = kappa / np.where(denom > 0.05, denom, 1.0)
    # curvatures stay ascending: t -> k/(1-tk) is monotone in k for 1-tk>0
    nu_e = shp.normal
    hess_u_e = -np.einsum(
        "...i,...ia,...ib->...ab", k_e, shp.directions, shp.directions
    )
    return TubeData(
        u=c * u_e,
        nu=nu_e / c,
        curvatures=k_e / c,
        frame=shp.directions / c,
        hess_u=c * hess_u_e,
        foot=foot,
        valid=valid,
    )


class DistanceToSigmaField(ScalarField):
    """Signed distance to Sigma as a scalar field with exact derivatives."""

    def __init__(self, sigma, scale_factor=1.0):
        self.sigma = sigma
        self.c = float(scale_factor)
        self.n = sigma.p.shape[0]

    def _tube(self, x):
        data = tube_eval(self.sigma, x, self.c)
        if not np.all(data.valid):
            raise TubeError("signed distance queried outside the tube")
        return data

    def value(self, x):
        return self._tube(x).u

    def gradient(self, x):
        data = self._tube(x)
        # coordinate partials of u: c * euclidean unit normal
        return self.c * (data.nu * self.c)

    def hessian(self, x):
        return self._tube(x).hess_u


def signed_distance(sigma, x, metric, rk_steps=64):
    """Signed geodesic distance from x to Sigma, nonnegative on N.

    Exact closest-point projection when the metric is euclidean up to a
    constant conformal factor; otherwise a shooting solve along normal
    geodesics integrated with classical RK4.
    """
    c = metric.constant_factor()
    if c is not None:
        data = tube_eval(sigma, x, c)
        if not np.all(data.valid):
            raise TubeError("point outside the tube of Sigma")
        return data.u
    return _geodesic_signed_distance(sigma, np.asarray(x, dtype=float), metric, rk_steps)


def _geodesic_flow(metric, y, v, length, steps):
    """Integrate the geodesic ODE from (y, v) for the given parameter length."""
    h = length / steps

    def acc(y, v):
        gam = christoffel(metric, y)
        return -np.einsum("kij,i,j->k", gam, v, v)

    for _ in range(steps):
        k1y, k1v = v, acc(y, v)
        k2y, k2v = v + 0.5 * h * k1v, acc(y + 0.5 * h * k1y, v + 0.5 * h * k1v)
        k3y, k3v = v + 0.5 * h * k2v, acc(y + 0.5 * h * k2y, v + 0.5 * h * k2v)
        k4y, k4v = v + h * k3v, acc(y + h * k3y, v + h * k3v)
        y = y + (h / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return y, v


def _geodesic_signed_distance(sigma, x, metric, rk_steps):
    if x.ndim > 1:
        return np.array(
            [_geodesic_signed_distance(sigma, xi, metric, rk_steps) for xi in x]
        )
    n = x.shape[0]
    foot0, ok = sigma.project(x)
    if not ok:
        raise TubeError("euclidean initialization of geodesic projection failed")
    sgn = 1.0 if sigma.w.value(x) >= 0 else -1.0

    shp = levelset_shape(sigma.w, foot0, metric)
    tangents = shp.directions  # (n-1, n), g-orthonormal at foot0

    def endpoint(params):
        a, s = params[:-1], params[-1]
        y = sigma.project(foot0 + a @ tangents)[0]
        nu = levelset_shape(sigma.w, y, metric).normal
        z, _ = _geodesic_flow(metric, y, sgn * nu, s, rk_steps)
        return z - x

    params = np.zeros(n)
    params[-1] = abs(float(np.linalg.norm(x - foot0))) * float(
        metric.norm(foot0, (x - foot0) / max(np.linalg.norm(x - foot0), 1e-300))
        if np.linalg.norm(x - foot0) > 1e-14
        else 1.0
    )
    if params[-1] < 1e-14:
        return 0.0
    for _ in range(30):
        r = endpoint(params)
        if np.linalg.norm(r) < 1e-10:
            break
        # finite-difference Jacobian of the shooting residual
        J = np.zeros((n, n))
        h = 1e-6
        for j in range(n):
            dp = params.copy()
            dp[j] += h
            J[:, j] = (endpoint(dp) - r) / h
        try:
            params = params - np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise TubeError("geodesic shooting Jacobian is singular")
    else:
        raise TubeError("geodesic shooting did not converge")
    return sgn * params[-1]


# --------------------------------------------------------------------------
# bundle


@dataclass
class BarrierBundle:
    """Assembled barrier data: Sigma, distances, curvature bound, cutoff.

    ``chart`` is the working box around p (the shrunken ambient ball of the
    construction); everything about the barrier lives inside it.
    """

    domain: Domain
    p: np.ndarray
    m: int
    eta: float
    K: float
    epsilon: float
    sigma: SigmaSurface
    scale_factor: float
    kappa_sum_p: float
    chart: np.ndarray

    def u_field(self):
        return DistanceToSigmaField(self.sigma, self.scale_factor)

    def tube(self, x):
        return tube_eval(self.sigma, x, self.scale_factor)

    def field(self):
        return BarrierVectorField(self)


def _tube_curvatures(sigma, chart, p, scale_factor, sample_budget, seed):
    """Sample level-set curvature lists over the prospective tube in a chart.

    Feet are obtained by projecting random chart points onto Sigma; each foot
    is pushed inward by a random offset up to half the distance from p to the
    chart faces (the largest value epsilon can later take).  Returns the
    sampled ascending curvature lists in metric units.
    """
    rng = np.random.default_rng(seed)
    c = float(scale_factor)
    lo, hi = chart[:, 0], chart[:, 1]
    n = len(lo)
    pts = lo + (hi - lo) * rng.random((sample_budget, n))
    corners = np.stack(np.meshgrid(*np.stack([lo, hi], axis=-1), indexing="ij"), axis=-1)
    pts = np.concatenate([pts, corners.reshape(-1, n), p[None, :]], axis=0)
    # keep every foot a chart point projects to, even just outside the box:
    # the verification grid will reach those feet through the tube
    foot, ok = sigma.project(pts)
    if not np.any(ok):
        raise TubeError("no Sigma feet found inside the chart")
    foot = foot[ok]
    t_max = 0.5 * float(np.min(np.minimum(p - lo, hi - p)))
    t = t_max * rng.random((len(foot), 1))
    kappa = levelset_shape(sigma.w, foot, _euclid(n)).values
    denom = np.maximum(1.0 - t * kappa, 0.1)
    return (kappa / denom) / c


def curvature_bound(sigma, chart, p, scale_factor=1.0, sample_budget=2000, seed=0, cap=1e4):
    """Sampled bound K on the level-set principal curvatures over the tube.

    K is 1.25 times the largest curvature magnitude seen (metric units).
    """
    if sample_budget < 10:
        raise ValueError("sample budget too small")
    k = _tube_curvatures(sigma, chart, p, scale_factor, sample_budget, seed)
    K = 1.25 * float(np.max(np.abs(k)))
    if K > cap:
        raise TubeError(f"curvature blow-up detected: K = {K:.3g}")
    return K


def select_epsilon(K, chart, p, scale_factor=1.0):
    """eps = min(K^{-1/2}, half the metric distance from p to the chart edge)."""
    if K <= 0:
        raise ValueError("K must be positive")
    p = np.asarray(p, dtype=float)
    chart = np.asarray(chart, dtype=float)
    lo, hi = chart[:, 0], chart[:, 1]
    margin = float(np.min(np.minimum(p - lo, hi - p)))
    eps = min(K ** -0.5, 0.5 * float(scale_factor) * margin)
    if eps <= 0:
        raise GeometryError("no positive epsilon fits the chart")
    return eps


def build_barrier(
    domain,
    p,
    m,
    eta=None,
    h=0.0,
    sample_budget=2000,
    seed=0,
    enforce_hypothesis=True,
    initial_halfwidth=None,
    epsilon_override=None,
):
    """Construct the full barrier bundle at a boundary point p.

    ``eta`` defaults to the midpoint of (h, kappa_1 + ... + kappa_m at p).
    With ``enforce_hypothesis`` the construction refuses whenever that sum
    does not exceed eta (no vacuous barriers).

    The working chart starts as a box around p clipped to the domain chart
    and is shrunk until the sampled tube satisfies k_1 + ... + k_m > eta
    everywhere, mirroring the "sufficiently small ball around p" step of the
    underlying construction.
    """
    p = np.asarray(p, dtype=float)
    kappa_sum, _, _ = geo.m_convexity(domain, p, m)
    if eta is None:
        eta = 0.5 * (h + kappa_sum)
    if enforce_hypothesis and kappa_sum <= eta:
        raise BarrierRefusal(
            f"curvature sum {kappa_sum:.6g} at p does not exceed eta = {eta:.6g}"
        )
    c = domain.metric.constant_factor()
    if c is None:
        raise GeometryError(
            "barrier construction needs the euclidean metric or a constant "
            "conformal rescaling of it"
        )
    sigma = SigmaSurface(domain, p)

    dlo, dhi = domain.chart[:, 0], domain.chart[:, 1]
    span = float(np.min(np.maximum(np.minimum(p - dlo, dhi - p), 0.25 * (dhi - dlo))))
    w = initial_halfwidth if initial_halfwidth is not None else 0.5 * span
    goal = eta + 0.02 * max(kappa_sum - eta, 0.0)
    shrinkable = kappa_sum > eta
    k_samples = None
    chart = None
    for _ in range(18):
        chart = np.stack(
            [np.maximum(p - w, dlo), np.minimum(p + w, dhi)], axis=-1
        )
        k_samples = _tube_curvatures(sigma, chart, p, c, sample_budget, seed)
        if not shrinkable:
            break
        if float(np.min(np.sum(k_samples[..., :m], axis=-1))) > goal:
            break
        w *= 0.7
    else:
        raise TubeError(
            "tube radius collapsed before the convexity inequality held"
        )

    K = 1.25 * float(np.max(np.abs(k_samples)))
    if K > 1e4:
        raise TubeError(f"curvature blow-up detected: K = {K:.3g}")
    eps = select_epsilon(K, chart, p, scale_factor=c)
    if epsilon_override is not None:
        if not 0 < epsilon_override <= eps:
            raise ValueError("epsilon override must lie in (0, selected epsilon]")
        eps = float(epsilon_override)
    return BarrierBundle(
        domain=domain,
        p=p,
        m=m,
        eta=float(eta),
        K=float(K),
        epsilon=float(eps),
        sigma=sigma,
        scale_factor=float(c),
        kappa_sum_p=float(kappa_sum),
        chart=chart,
    )


# --------------------------------------------------------------------------
# the vectorfield X = phi(u) nu


class BarrierVectorField(VectorField):
    """X = phi(u) nu, supported on the closure of N intersect {u < eps}."""

    def __init__(self, bundle):
        self.bundle = bundle
        self.n = bundle.p.shape[0]

    def _eval(self, x):
        x = np.asarray(x, dtype=float)
        b = self.bundle
        data = tube_eval(b.sigma, x, b.scale_factor)
        u = data.u
        live = data.valid & (u >= 0.0) & (u < b.epsilon)
        u_safe = np.where(live, u, b.epsilon)
        phi = cutoff(u_safe, b.epsilon)
        dphi = cutoff_derivative(u_safe, b.epsilon)
        return data, live, phi, dphi

    def value(self, x):
        data, live, phi, _ = self._eval(x)
        return np.where(live[..., None], phi[..., None] * data.nu, 0.0)

    def jacobian(self, x):
        data, live, phi, dphi = self._eval(x)
        c = self.bundle.scale_factor
        nu_e = data.nu * c  # euclidean unit normal
        outer = nu_e[..., :, None] * nu_e[..., None, :]
        # data.hess_u is the coordinate Hessian of u = c * u_e, hence the c^2
        J = dphi[..., None, None] * outer + (phi / c**2)[..., None, None] * data.hess_u
        return np.where(live[..., None, None], J, 0.0)


def psi(X, x, m, metric):
    """Largest trace of the covariant differential of X over m-planes."""
    Q = bilinear_form_Q(X, x, metric)
    if metric.is_euclidean:
        return top_m_eigensum(Q, m)
    return top_m_eigensum(Q, m, metric_matrix=metric.matrix(x))


def adapted_frame_Q(bundle, q):
    """Matrix of Q in the g-orthonormal basis (e_1, ..., e_{n-1}, nu).

    Diagonal with entries (-phi(u) k_i, ..., phi'(u)) up to numerical error.
    """
    q = np.asarray(q, dtype=float)
    b = bundle
    data = tube_eval(b.sigma, q, b.scale_factor)
    if not np.all(data.valid & (data.u < b.epsilon)):
        raise TubeError("adapted frame requested outside the open tube")
    X = b.field()
    Qc = bilinear_form_Q(X, q, b.domain.metric)
    frame = np.concatenate([data.frame, data.nu[..., None, :]], axis=-2)
    return np.einsum("...ai,...ij,...bj->...ab", frame, Qc, frame)


# --------------------------------------------------------------------------
# verification


@dataclass
class BarrierReport:
    passed: bool
    worst_margin: float
    worst_point: list
    n_grid: int
    n_tube: int
    epsilon: float
    K: float
    eta: float
    m: int
    tolerance: float
    margins: np.ndarray | None = None
    points: np.ndarray | None = None

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_point": [float(v) for v in self.worst_point],
            "n_grid": int(self.n_grid),
            "n_tube": int(self.n_tube),
            "epsilon": float(self.epsilon),
            "K": float(self.K),
            "eta": float(self.eta),
            "m": int(self.m),
            "tolerance": float(self.tolerance),
        }


def chart_grid(chart, resolution):
    axes = [
        np.linspace(lo, hi, resolution) for lo, hi in np.asarray(chart, dtype=float)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def verify_barrier(
    bundle,
    X=None,
    grid_resolution=50,
    tolerance=1e-7,
    threads=1,
    keep_margins=False,
):
    """Check Psi_X + eta |X| <= 0 on a chart grid intersected with N.

    Margins are normalized by phi(u) (1 + K); points at or beyond the cutoff
    contribute an exact zero.  The report carries the worst margin and its
    location.
    """
    b = bundle
    X = X or b.field()
    pts = chart_grid(b.chart, grid_resolution)
    pts = pts[np.asarray(b.domain.contains(pts), dtype=bool)]
    metric = b.domain.metric
    gmat = None if metric.is_euclidean else metric.matrix(np.zeros(b.p.shape))

    def margins_for(chunk):
        data = tube_eval(b.sigma, chunk, b.scale_factor)
        u = data.u
        live = data.valid & (u >= 0.0) & (u < b.epsilon)
        # phi underflows to an exact 0 just below the cutoff; X vanishes there
        live = live & (cutoff(np.where(live, u, b.epsilon), b.epsilon) > 0.0)
        out = np.zeros(len(chunk))
        if not np.any(live):
            return out, np.zeros(len(chunk), dtype=bool)
        sub = chunk[live]
        Q = bilinear_form_Q(X, sub, metric)
        if metric.is_euclidean:
            top = top_m_eigensum(Q, b.m)
        else:
            top = top_m_eigensum(Q, b.m, metric_matrix=metric.matrix(sub))
        phi = cutoff(u[live], b.epsilon)
        raw = top + b.eta * phi
        out[live] = raw / (phi * (1.0 + b.K))
        return out, live

    chunks = np.array_split(pts, max(1, threads * 8))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(margins_for, chunks))
    else:
        results = [margins_for(ch) for ch in chunks]
    margins = np.concatenate([r[0] for r in results]) if len(pts) else np.zeros(0)
    live = np.concatenate([r[1] for r in results]) if len(pts) else np.zeros(0, bool)
    if len(pts) == 0:
        raise GeometryError("verification grid is empty")
    worst = int(np.argmax(margins))
    report = BarrierReport(
        passed=bool(margins[worst] <= tolerance),
        worst_margin=float(margins[worst]),
        worst_point=pts[worst].tolist(),
        n_grid=len(pts),
        n_tube=int(np.count_nonzero(live)),
        epsilon=b.epsilon,
        K=b.K,
        eta=b.eta,
        m=b.m,
        tolerance=tolerance,
        margins=margins if keep_margins else None,
        points=pts if keep_margins else None,
    )
    return report
