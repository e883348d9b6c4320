"""Riemannian geometry on a single coordinate chart of R^n.

Everything is evaluated pointwise and batched: points are arrays of shape
``(..., n)`` and all operations broadcast over the leading axes.  Scalar and
vector fields expose exact first and second derivatives, either symbolically
(expression-backed fields) or in closed form (built-in distance fields), so
curvature computations carry no finite-difference noise.

Sign conventions: a boundary-defining function ``u0`` is nonnegative inside
the domain, its metric gradient is the inward normal, and the shape operator
``v -> -grad_v(nu)`` of a level set makes a round sphere bounding a ball have
positive principal curvatures with respect to the inward normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exprfield
from .exprfield import Expression, differentiate, parse


class GeometryError(Exception):
    pass


class MetricError(GeometryError):
    """Metric not symmetric positive definite at a queried point."""


class VanishingGradientError(GeometryError):
    pass


class BoundaryError(GeometryError):
    """A point required to lie on the boundary does not."""


# --------------------------------------------------------------------------
# scalar fields


class ScalarField:
    """Scalar function on the chart with first and second derivatives."""

    n: int

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        """Coordinate partials, shape ``(..., n)``."""
        raise NotImplementedError

    def hessian(self, x):
        """Coordinate second partials, shape ``(..., n, n)``."""
        raise NotImplementedError


class ExprScalarField(ScalarField):
    def __init__(self, expr, n):
        if isinstance(expr, str):
            expr = parse(expr)
        if expr.max_var() >= n:
            raise ValueError(
                f"expression uses x{expr.max_var() + 1} but dimension is {n}"
            )
        self.n = n
        self.expr = expr.fold()
        self._grads = [differentiate(self.expr, i) for i in range(n)]
        self._hess = [
            [differentiate(self._grads[i], j) for j in range(n)] for i in range(n)
        ]

    def value(self, x):
        return self.expr.eval_at(x)

    def gradient(self, x):
        return np.stack([g.eval_at(x) for g in self._grads], axis=-1)

    def hessian(self, x):
        rows = [
            np.stack([h.eval_at(x) for h in row], axis=-1) for row in self._hess
        ]
        return np.stack(rows, axis=-2)


class LinearField(ScalarField):
    """a . x + b"""

    def __init__(self, a, b=0.0):
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)
        self.n = self.a.shape[0]

    def value(self, x):
        return np.asarray(x)[..., :] @ self.a + self.b

    def gradient(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.a, x.shape).copy()

    def hessian(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n, self.n))


class RadialDistanceField(ScalarField):
    """R - |x - c| over all n coordinates: euclidean signed distance to a sphere."""

    def __init__(self, radius, center, n=3):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.n = n

    def _r(self, x, need_derivatives=False):
        d = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(d, axis=-1)
        if need_derivatives and np.any(r < 1e-14):
            raise VanishingGradientError("radial field differentiated at its center")
        return d, r

    def value(self, x):
        _, r = self._r(x)
        return self.radius - r

    def gradient(self, x):
        d, r = self._r(x, need_derivatives=True)
        return -d / r[..., None]

    def hessian(self, x):
        d, r = self._r(x, need_derivatives=True)
        u = d / r[..., None]
        eye = np.eye(self.n)
        proj = eye - u[..., :, None] * u[..., None, :]
        return -proj / r[..., None, None]


class AxialDistanceField(ScalarField):
    """R - sqrt(x1^2 + ... ) over the coordinates transverse to ``axis``."""

    def __init__(self, radius, axis=2, n=3):
        self.radius = float(radius)
        self.axis = axis
        self.n = n
        self.mask = np.array([i != axis for i in range(n)], dtype=float)

    def _r(self, x, need_derivatives=False):
        d = np.asarray(x, dtype=float) * self.mask
        r = np.linalg.norm(d, axis=-1)
        if need_derivatives and np.any(r < 1e-14):
            raise VanishingGradientError("axial field differentiated on its axis")
        return d, r

    def value(self, x):
        _, r = self._r(x)
        return self.radius - r

    def gradient(self, x):
        d, r = self._r(x, need_derivatives=True)
        return -d / r[..., None]

    def hessian(self, x):
        d, r = self._r(x, need_derivatives=True)
        u = d / r[..., None]
        proj = np.diag(self.mask) - u[..., :, None] * u[..., None, :]
        return -proj / r[..., None, None]


class QuarticGapField(ScalarField):
    """((x-p)^T G (x-p))^2, the fourth power of the G-norm distance to p."""

    def __init__(self, p, gram):
        self.p = np.asarray(p, dtype=float)
        self.gram = np.asarray(gram, dtype=float)
        self.n = self.p.shape[0]

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.p
        s = np.einsum("...i,ij,...j->...", d, self.gram, d)
        return s * s

    def gradient(self, x):
        d = np.asarray(x, dtype=float) - self.p
        gd = d @ self.gram.T
        s = np.einsum("...i,...i->...", d, gd)
        return 4.0 * s[..., None] * gd

    def hessian(self, x):
        d = np.asarray(x, dtype=float) - self.p
        gd = d @ self.gram.T
        s = np.einsum("...i,...i->...", d, gd)
        outer = gd[..., :, None] * gd[..., None, :]
        return 4.0 * s[..., None, None] * self.gram + 8.0 * outer


class SumField(ScalarField):
    def __init__(self, fields):
        self.fields = list(fields)
        self.n = self.fields[0].n

    def value(self, x):
        return sum(f.value(x) for f in self.fields)

    def gradient(self, x):
        return sum(f.gradient(x) for f in self.fields)

    def hessian(self, x):
        return sum(f.hessian(x) for f in self.fields)


class ComposedField(ScalarField):
    """psi(f(x)) for a smooth scalar map psi given with two derivatives."""

    def __init__(self, inner, psi, dpsi, d2psi):
        self.inner = inner
        self.psi, self.dpsi, self.d2psi = psi, dpsi, d2psi
        self.n = inner.n

    def value(self, x):
        return self.psi(self.inner.value(x))

    def gradient(self, x):
        v = self.inner.value(x)
        return self.dpsi(v)[..., None] * self.inner.gradient(x)

    def hessian(self, x):
        v = self.inner.value(x)
        g = self.inner.gradient(x)
        outer = g[..., :, None] * g[..., None, :]
        return (
            self.dpsi(v)[..., None, None] * self.inner.hessian(x)
            + self.d2psi(v)[..., None, None] * outer
        )


# --------------------------------------------------------------------------
# vector fields


class VectorField:
    """Tangent vectorfield in chart coordinates.

    ``jacobian(x)[..., k, i]`` is the coordinate partial d_i X^k.
    """

    n: int

    def value(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        raise NotImplementedError


class ExprVectorField(VectorField):
    def __init__(self, components, n):
        comps = []
        for c in components:
            comps.append(parse(c) if isinstance(c, str) else c)
        if len(comps) != n:
            raise ValueError(f"expected {n} components, got {len(comps)}")
        self.n = n
        self.components = [c.fold() for c in comps]
        self._jac = [
            [differentiate(c, i) for i in range(n)] for c in self.components
        ]

    def value(self, x):
        return np.stack([c.eval_at(x) for c in self.components], axis=-1)

    def jacobian(self, x):
        rows = [
            np.stack([d.eval_at(x) for d in row], axis=-1) for row in self._jac
        ]
        return np.stack(rows, axis=-2)


class ConstantVectorField(VectorField):
    def __init__(self, v):
        self.v = np.asarray(v, dtype=float)
        self.n = self.v.shape[0]

    def value(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.v, x.shape).copy()

    def jacobian(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n, self.n))


class LinearVectorField(VectorField):
    """X(x) = A x + b; covers the position field and rigid rotations."""

    def __init__(self, A, b=None):
        self.A = np.asarray(A, dtype=float)
        self.n = self.A.shape[0]
        self.b = np.zeros(self.n) if b is None else np.asarray(b, dtype=float)

    def value(self, x):
        return np.asarray(x) @ self.A.T + self.b

    def jacobian(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.A, x.shape[:-1] + (self.n, self.n)).copy()


def position_field(n=3):
    return LinearVectorField(np.eye(n))


class BumpVectorField(VectorField):
    """Smooth compactly supported field: direction times a radial bump.

    The profile exp(-1/(1 - s)) in s = |x-c|^2/r^2 vanishes to all orders at
    the support boundary |x-c| = r.
    """

    def __init__(self, center, radius, direction):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.direction = np.asarray(direction, dtype=float)
        self.n = self.center.shape[0]

    def _profile(self, x):
        d = np.asarray(x, dtype=float) - self.center
        s = np.einsum("...i,...i->...", d, d) / self.radius**2
        inside = s < 1.0
        val = np.zeros_like(s)
        dval = np.zeros_like(s)  # derivative w.r.t. s
        with np.errstate(divide="ignore", over="ignore"):
            t = np.where(inside, 1.0 - s, 1.0)
            e = np.where(inside, np.exp(-1.0 / t), 0.0)
        val = e
        dval = np.where(inside, -e / t**2, 0.0)
        return d, s, val, dval

    def value(self, x):
        _, _, val, _ = self._profile(x)
        return val[..., None] * self.direction

    def jacobian(self, x):
        d, _, _, dval = self._profile(x)
        ds = 2.0 * d / self.radius**2  # gradient of s
        return self.direction[:, None] * dval[..., None, None] * ds[..., None, :]


class CombinationVectorField(VectorField):
    def __init__(self, terms):
        """terms: list of (coefficient, VectorField)."""
        self.terms = [(float(a), X) for a, X in terms]
        self.n = self.terms[0][1].n

    def value(self, x):
        return sum(a * X.value(x) for a, X in self.terms)

    def jacobian(self, x):
        return sum(a * X.jacobian(x) for a, X in self.terms)


# --------------------------------------------------------------------------
# metrics


class MetricField:
    n: int

    def matrix(self, x):
        raise NotImplementedError

    def dmatrix(self, x):
        """Partials of the metric entries: ``[..., k, i, j] = d_k g_ij``."""
        raise NotImplementedError

    def inverse(self, x):
        return np.linalg.inv(self.matrix(x))

    @property
    def is_euclidean(self):
        return False

    def constant_factor(self):
        """If g = c^2 * euclidean with constant c, return c, else None."""
        return None

    def check_spd(self, x):
        g = self.matrix(x)
        w = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
        if np.any(w[..., 0] <= 0):
            raise MetricError("metric is not positive definite at a queried point")

    def norm(self, x, v):
        g = self.matrix(x)
        return np.sqrt(np.einsum("...i,...ij,...j->...", v, g, v))

    def inner(self, x, u, v):
        g = self.matrix(x)
        return np.einsum("...i,...ij,...j->...", u, g, v)


class EuclideanMetric(MetricField):
    def __init__(self, n=3):
        self.n = n

    def matrix(self, x):
        x = np.asarray(x)
        return np.broadcast_to(np.eye(self.n), x.shape[:-1] + (self.n, self.n)).copy()

    def dmatrix(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n, self.n, self.n))

    def inverse(self, x):
        return self.matrix(x)

    @property
    def is_euclidean(self):
        return True

    def constant_factor(self):
        return 1.0

    def check_spd(self, x):
        pass


class ConformalMetric(MetricField):
    """g = e^{2f} * delta for an expression-backed scalar f."""

    def __init__(self, f, n=3):
        if isinstance(f, str):
            f = parse(f)
        if isinstance(f, Expression):
            f = ExprScalarField(f, n)
        self.f = f
        self.n = n

    def factor(self, x):
        return np.exp(2.0 * self.f.value(x))

    def matrix(self, x):
        return self.factor(x)[..., None, None] * np.eye(self.n)

    def dmatrix(self, x):
        df = self.f.gradient(x)
        return (
            2.0
            * self.factor(x)[..., None, None, None]
            * df[..., :, None, None]
            * np.eye(self.n)
        )

    def inverse(self, x):
        return (1.0 / self.factor(x))[..., None, None] * np.eye(self.n)

    def constant_factor(self):
        if isinstance(self.f, ExprScalarField):
            if all(g == exprfield.Const(0.0) for g in self.f._grads):
                f0 = float(self.f.value(np.zeros(self.n)))
                return float(np.exp(f0))
        return None

    def check_spd(self, x):
        pass  # e^{2f} delta is always positive definite


class MatrixMetric(MetricField):
    """General metric with expression entries; symmetry is enforced."""

    def __init__(self, entries, n=3):
        self.n = n
        entries = list(entries)
        if len(entries) == n * (n + 1) // 2 and all(
            isinstance(e, str) or hasattr(e, "eval_at") for e in entries
        ):
            # flat upper triangle g11, g12, ..., g1n, g22, ...
            it = iter(entries)
            entries = [[None] * n for _ in range(n)]
            for i in range(n):
                for j in range(i, n):
                    entries[i][j] = next(it)
            for i in range(n):
                for j in range(i):
                    entries[i][j] = entries[j][i]
        grid = []
        for row in entries:
            grid.append(
                [parse(e) if isinstance(e, str) else e for e in row]
            )
        # symmetrize exactly by mirroring the upper triangle
        for i in range(n):
            for j in range(i):
                grid[i][j] = grid[j][i]
        self.entries = [[e.fold() for e in row] for row in grid]
        self._d = [
            [[differentiate(self.entries[i][j], k) for k in range(n)] for j in range(n)]
            for i in range(n)
        ]

    def matrix(self, x):
        rows = [
            np.stack([e.eval_at(x) for e in row], axis=-1) for row in self.entries
        ]
        g = np.stack(rows, axis=-2)
        return g

    def dmatrix(self, x):
        n = self.n
        out = [
            [
                np.stack([self._d[i][j][k].eval_at(x) for j in range(n)], axis=-1)
                for i in range(n)
            ]
            for k in range(n)
        ]
        return np.stack([np.stack(rows, axis=-2) for rows in out], axis=-3)


# --------------------------------------------------------------------------
# connection and curvature operations


def christoffel(metric, x):
    """Connection coefficients ``[..., k, i, j] = Gamma^k_ij``."""
    metric.check_spd(x)
    if metric.is_euclidean:
        x = np.asarray(x)
        n = metric.n
        return np.zeros(x.shape[:-1] + (n, n, n))
    gi = metric.inverse(x)
    d = metric.dmatrix(x)
    # T[..., l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    T = (
        np.einsum("...ijl->...lij", d)
        + np.einsum("...jil->...lij", d)
        - d
    )
    return 0.5 * np.einsum("...kl,...lij->...kij", gi, T)


def covariant_gradient(X, x, metric):
    """Matrix of the endomorphism v -> grad_v X: ``[..., k, i] = (grad_i X)^k``."""
    J = X.jacobian(x)
    if metric.is_euclidean:
        return J
    gam = christoffel(metric, x)
    return J + np.einsum("...kij,...j->...ki", gam, X.value(x))


def bilinear_form_Q(X, x, metric):
    """Matrix of Q(u, v) = <u, grad_v X>_g in chart coordinates."""
    A = covariant_gradient(X, x, metric)
    if metric.is_euclidean:
        return A
    g = metric.matrix(x)
    return np.einsum("...ab,...bi->...ai", g, A)


def metric_gradient(f, x, metric):
    """Raise the differential of f: grad^i = g^{ij} d_j f."""
    df = f.gradient(x)
    if metric.is_euclidean:
        return df
    return np.einsum("...ij,...j->...i", metric.inverse(x), df)


@dataclass
class PrincipalCurvatureList:
    """Level-set principal curvatures, ascending, with directions and normal.

    ``values[..., i]`` ascending; ``directions[..., i, :]`` the matching
    g-orthonormal principal directions; ``normal[..., :]`` the unit normal
    (the normalized metric gradient of the level-set function).
    """

    values: np.ndarray
    directions: np.ndarray
    normal: np.ndarray


def _fix_signs(vecs):
    """First nonzero component positive; vecs[..., i, :] are the vectors."""
    comp = np.where(np.abs(vecs) > 1e-12, vecs, 0.0)
    n = vecs.shape[-1]
    first = np.zeros(vecs.shape[:-1])
    picked = np.zeros(vecs.shape[:-1], dtype=bool)
    for j in range(n):
        take = (~picked) & (comp[..., j] != 0.0)
        first = np.where(take, comp[..., j], first)
        picked = picked | take
    sign = np.where(first < 0.0, -1.0, 1.0)
    return vecs * sign[..., None]


def levelset_shape(f, x, metric):
    """Shape operator spectrum of the level set of f through each point.

    Returns a :class:`PrincipalCurvatureList` with respect to the unit normal
    ``grad f / |grad f|_g``; for a boundary function that is positive inside,
    that normal points inward and a convex domain has positive curvatures.
    """
    x = np.asarray(x, dtype=float)
    n = metric.n
    metric.check_spd(x)
    df = f.gradient(x)
    H = f.hessian(x)
    if metric.is_euclidean:
        g = None
        grad = df
        Hc = H
    else:
        gam = christoffel(metric, x)
        Hc = H - np.einsum("...kij,...k->...ij", gam, df)
        grad = metric_gradient(f, x, metric)
    norm2 = np.einsum("...i,...i->...", df, grad)
    if np.any(norm2 <= 1e-24):
        raise VanishingGradientError("level-set function has vanishing gradient")
    norm = np.sqrt(norm2)
    nu = grad / norm[..., None]  # raised unit normal
    nu_flat = df / norm[..., None]  # lowered unit normal (= g nu)
    B = -Hc / norm[..., None, None]

    # restrict the bilinear form to the tangent space of the level set
    eye = np.eye(n)
    Pi = eye - nu[..., :, None] * nu_flat[..., None, :]
    Bt = np.einsum("...ai,...ab,...bj->...ij", Pi, B, Pi)

    if metric.is_euclidean:
        C = Bt
        nu_hat = nu
    else:
        gmat = metric.matrix(x)
        L = np.linalg.cholesky(gmat)
        W = np.swapaxes(np.linalg.solve(L, Bt), -1, -2)  # B_t L^{-T}
        C = np.linalg.solve(L, W)
        nu_hat = np.einsum("...ji,...j->...i", L, nu)  # L^T nu, unit length

    # deflate the normal direction with a sentinel eigenvalue
    scale = 1.0 + 2.0 * np.max(np.sum(np.abs(C), axis=-1), axis=-1)
    Cs = C + scale[..., None, None] * nu_hat[..., :, None] * nu_hat[..., None, :]
    Cs = 0.5 * (Cs + np.swapaxes(Cs, -1, -2))
    w, V = np.linalg.eigh(Cs)  # ascending
    # drop the eigenvalue closest to the sentinel
    idx = np.argmin(np.abs(w - scale[..., None]), axis=-1)
    keep = np.broadcast_to(np.arange(n) != idx[..., None], w.shape)
    vals = w[keep].reshape(w.shape[:-1] + (n - 1,))
    vecs_hat = np.swapaxes(V, -1, -2)[keep].reshape(w.shape[:-1] + (n - 1, n))
    if metric.is_euclidean:
        vecs = vecs_hat
    else:
        LT = np.swapaxes(L, -1, -2)
        vecs = np.swapaxes(
            np.linalg.solve(LT[..., None, :, :], vecs_hat[..., :, :, None]), -1, -2
        )[..., 0, :]
    return PrincipalCurvatureList(vals, _fix_signs(vecs), nu)


def top_m_eigensum(S, m, metric_matrix=None):
    """Sum of the m largest eigenvalues of a symmetric bilinear form.

    Equals the maximum over m-dimensional subspaces P of trace(S|P) in the
    metric inner product; the input is symmetrized first.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[-1]
    if not 1 <= m <= n:
        raise ValueError(f"m must be in [1, {n}], got {m}")
    S = 0.5 * (S + np.swapaxes(S, -1, -2))
    if metric_matrix is not None:
        L = np.linalg.cholesky(np.asarray(metric_matrix, dtype=float))
        W = np.swapaxes(np.linalg.solve(L, S), -1, -2)
        S = np.linalg.solve(L, W)
        S = 0.5 * (S + np.swapaxes(S, -1, -2))
    w = np.linalg.eigvalsh(S)
    return np.sum(w[..., n - m:], axis=-1)


# --------------------------------------------------------------------------
# domains


@dataclass
class Domain:
    """Chart region N = {u0 >= 0} with boundary {u0 = 0}."""

    metric: MetricField
    u0: ScalarField
    chart: np.ndarray  # (n, 2) bounding box
    name: str = "domain"

    def __post_init__(self):
        self.chart = np.asarray(self.chart, dtype=float)

    @property
    def n(self):
        return self.metric.n

    def chart_diameter(self):
        return float(np.linalg.norm(self.chart[:, 1] - self.chart[:, 0]))

    @property
    def boundary_tolerance(self):
        return 1e-9 * self.chart_diameter()

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        inside = self.u0.value(x) >= -tol
        in_chart = np.all(
            (x >= self.chart[:, 0] - tol) & (x <= self.chart[:, 1] + tol), axis=-1
        )
        return inside & in_chart

    def on_boundary(self, p):
        return np.abs(self.u0.value(p)) < self.boundary_tolerance

    def inward_normal(self, x):
        """nu_N: the g-unit inward normal, valid on (a neighborhood of) dN."""
        grad = metric_gradient(self.u0, x, self.metric)
        nrm = self.metric.norm(x, grad)
        if np.any(nrm < 1e-12):
            raise VanishingGradientError("u0 gradient vanishes at a boundary sample")
        return grad / nrm[..., None]

    def sample_chart(self, rng, count):
        lo, hi = self.chart[:, 0], self.chart[:, 1]
        return lo + (hi - lo) * rng.random((count, self.n))


def newton_level_project(f, x, level=0.0, tol=1e-12, max_iter=50):
    """Project points onto {f = level} by damped Newton along grad f.

    Uses euclidean coordinate steps; raises GeometryError on non-convergence.
    """
    y = np.array(x, dtype=float, copy=True)
    single = y.ndim == 1
    if single:
        y = y[None, :]
    for _ in range(max_iter):
        r = f.value(y) - level
        if np.all(np.abs(r) <= tol):
            break
        g = f.gradient(y)
        g2 = np.einsum("...i,...i->...", g, g)
        if np.any(g2 < 1e-20):
            raise VanishingGradientError("vanishing gradient during projection")
        y = y - (r / g2)[..., None] * g
    else:
        r = f.value(y) - level
        if np.any(np.abs(r) > tol):
            raise GeometryError("level-set projection did not converge")
    return y[0] if single else y


def m_convexity(domain, p, m, strict_tol=1e-8):
    """Sum of the m smallest boundary principal curvatures at p, classified.

    Returns ``(kappa_sum, classification, curvatures)`` where classification
    is one of "strongly m-convex", "m-convex", "neither".
    """
    p = np.asarray(p, dtype=float)
    if not np.all(domain.on_boundary(p)):
        raise BoundaryError(
            f"point {p.tolist()} is not on the boundary "
            f"(|u0| >= {domain.boundary_tolerance:.3e})"
        )
    shape = levelset_shape(domain.u0, p, domain.metric)
    kappas = shape.values
    total = float(np.sum(kappas[..., :m], axis=-1))
    if total > strict_tol:
        cls = "strongly m-convex"
    elif total >= -strict_tol:
        cls = "m-convex"
    else:
        cls = "neither"
    return total, cls, kappas


# --------------------------------------------------------------------------
# catalogs addressable from configs


def metric_euclidean(n=3):
    return EuclideanMetric(n)


def metric_conformal(f, n=3):
    return ConformalMetric(f, n)


def metric_matrix(entries, n=3):
    return MatrixMetric(entries, n)


def domain_halfspace(n=3, metric=None, chart_halfwidth=2.0):
    """N = {x_n >= 0}."""
    a = np.zeros(n)
    a[-1] = 1.0
    chart = np.array([[-chart_halfwidth, chart_halfwidth]] * n)
    chart[-1] = [-chart_halfwidth, chart_halfwidth]
    return Domain(
        metric or EuclideanMetric(n), LinearField(a), chart, name="halfspace"
    )


def domain_ball(radius=1.0, n=3, metric=None, chart=None):
    """N = {|x| <= R}; u0 = R - |x| is the exact signed distance."""
    if chart is None:
        w = 1.5 * radius
        chart = np.array([[-w, w]] * n)
    return Domain(
        metric or EuclideanMetric(n),
        RadialDistanceField(radius, np.zeros(n), n),
        chart,
        name=f"ball:{radius:g}",
    )


def domain_cylinder(radius=1.0, metric=None, chart=None):
    """Solid cylinder {x1^2 + x2^2 <= R^2} in R^3 (axis x3)."""
    if chart is None:
        w = 1.5 * radius
        chart = np.array([[-w, w], [-w, w], [-2.0, 2.0]])
    return Domain(
        metric or EuclideanMetric(3),
        AxialDistanceField(radius, axis=2, n=3),
        chart,
        name=f"cylinder:{radius:g}",
    )


def domain_levelset(expr, chart, n=3, metric=None):
    return Domain(
        metric or EuclideanMetric(n),
        ExprScalarField(expr, n),
        np.asarray(chart, dtype=float),
        name="levelset",
    )
