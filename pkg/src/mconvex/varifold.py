"""Discrete varifolds: weighted (point, m-plane) atoms and their calculus.

A varifold here is a finite sum of atoms, each carrying a base point, an
orthonormal m-frame for its tangent plane, and a positive weight with units
of m-area.  Meshes are lowered to varifolds by per-simplex barycentric
quadrature, and the first variation is the weighted sum of tangential
divergences of the test field.  This is enough structure to state and check
the variational statements the package cares about: stationarity, bounded
mean curvature, and the boundary decomposition of integral varifolds.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import geometry as geo


class VarifoldError(Exception):
    pass


class MeshFormatError(VarifoldError):
    """Malformed SVMESH input."""


class DegenerateSimplexError(VarifoldError):
    pass


class InadmissibleFieldError(VarifoldError):
    """A test field violating the inward-variation constraint on dN."""


class NonIntegralError(VarifoldError):
    """Decomposition requested for a varifold with non-integer multiplicities."""


class DecompositionError(VarifoldError):
    """The boundary part cannot be subtracted with nonnegative remainder."""


# ---------------------------------------------------------------------------
# meshes


@dataclass
class SimplicialSurface:
    """m-dimensional simplicial mesh in chart coordinates.

    ``simplices`` holds (m+1)-tuples of 0-based vertex indices and
    ``multiplicity`` one positive real per simplex (integers in integral
    mode).
    """

    vertices: np.ndarray
    simplices: np.ndarray
    multiplicity: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.simplices = np.asarray(self.simplices, dtype=int)
        if self.multiplicity is None:
            self.multiplicity = np.ones(len(self.simplices))
        self.multiplicity = np.asarray(self.multiplicity, dtype=float)
        if self.simplices.ndim != 2:
            raise VarifoldError("simplices must be a 2-d index array")
        if np.any(self.multiplicity <= 0):
            raise VarifoldError("multiplicities must be strictly positive")
        if np.any(self.simplices < 0) or np.any(self.simplices >= len(self.vertices)):
            raise VarifoldError("simplex index out of range")

    @property
    def m(self):
        return self.simplices.shape[1] - 1

    @property
    def n(self):
        return self.vertices.shape[1]

    def edge_matrices(self):
        """Per-simplex edge vectors, shape (F, m, n)."""
        v = self.vertices[self.simplices]
        return v[:, 1:, :] - v[:, :1, :]

    def euclidean_volumes(self):
        E = self.edge_matrices()
        gram = np.einsum("fae,fbe->fab", E, E)
        det = np.linalg.det(gram)
        fact = np.prod(np.arange(1, self.m + 1))
        return np.sqrt(np.maximum(det, 0.0)) / fact

    def mesh_scale(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo)) or 1.0

    def check(self):
        vols = self.euclidean_volumes()
        if np.any(vols <= 1e-12 * self.mesh_scale() ** self.m):
            raise DegenerateSimplexError(
                f"{int(np.sum(vols <= 1e-12 * self.mesh_scale() ** self.m))} "
                "degenerate simplices"
            )
        return self

    def max_edge_length(self):
        v = self.vertices[self.simplices]
        m1 = self.m + 1
        best = 0.0
        for i in range(m1):
            for j in range(i + 1, m1):
                best = max(best, float(np.max(np.linalg.norm(v[:, i] - v[:, j], axis=-1))))
        return best

    def boundary_vertices(self):
        """Indices of vertices on the mesh boundary (for m = 2: edges seen once)."""
        if self.m == 1:
            counts = np.zeros(len(self.vertices), dtype=int)
            np.add.at(counts, self.simplices.ravel(), 1)
            return np.nonzero(counts == 1)[0]
        edges = {}
        for tri in self.simplices:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        idx = sorted({v for (a, b), cnt in edges.items() if cnt == 1 for v in (a, b)})
        return np.asarray(idx, dtype=int)

    def with_vertices(self, vertices):
        return SimplicialSurface(vertices, self.simplices.copy(), self.multiplicity.copy())


def read_svmesh(stream):
    """Parse the SVMESH ASCII format (strict, 0-based indices).

    Line 1: ``SVMESH m n``; line 2: ``V F``; then V vertex lines of n floats
    and F simplex lines of m+1 indices plus an optional multiplicity.
    """
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "r") as fh:
            return read_svmesh(fh)
    lines = [ln.strip() for ln in stream if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise MeshFormatError("empty mesh file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "SVMESH":
        raise MeshFormatError(f"bad header {lines[0]!r}: expected 'SVMESH m n'")
    try:
        m, n = int(head[1]), int(head[2])
    except ValueError as exc:
        raise MeshFormatError(f"non-integer dimensions in header {lines[0]!r}") from exc
    if len(lines) < 2:
        raise MeshFormatError("missing count line 'V F'")
    try:
        V, F = (int(tok) for tok in lines[1].split())
    except ValueError as exc:
        raise MeshFormatError(f"bad count line {lines[1]!r}") from exc
    if len(lines) != 2 + V + F:
        raise MeshFormatError(
            f"expected {2 + V + F} content lines, found {len(lines)}"
        )
    verts = np.zeros((V, n))
    for i, ln in enumerate(lines[2:2 + V]):
        toks = ln.split()
        if len(toks) != n:
            raise MeshFormatError(f"vertex line {i}: expected {n} floats, got {len(toks)}")
        verts[i] = [float(t) for t in toks]
    simp = np.zeros((F, m + 1), dtype=int)
    mult = np.ones(F)
    for i, ln in enumerate(lines[2 + V:]):
        toks = ln.split()
        if len(toks) not in (m + 1, m + 2):
            raise MeshFormatError(
                f"simplex line {i}: expected {m + 1} indices (+ optional multiplicity)"
            )
        simp[i] = [int(t) for t in toks[:m + 1]]
        if len(toks) == m + 2:
            mult[i] = float(toks[m + 1])
    return SimplicialSurface(verts, simp, mult)


def write_svmesh(mesh, stream):
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "w") as fh:
            write_svmesh(mesh, fh)
            return
    stream.write(f"SVMESH {mesh.m} {mesh.n}\n")
    stream.write(f"{len(mesh.vertices)} {len(mesh.simplices)}\n")
    for v in mesh.vertices:
        stream.write(" ".join(repr(float(c)) for c in v) + "\n")
    for s, mu in zip(mesh.simplices, mesh.multiplicity):
        stream.write(" ".join(str(int(i)) for i in s) + f" {float(mu)!r}\n")


def svmesh_dumps(mesh):
    buf = io.StringIO()
    write_svmesh(mesh, buf)
    return buf.getvalue()


def svmesh_loads(text):
    return read_svmesh(io.StringIO(text))


# ---------------------------------------------------------------------------
# varifolds


@dataclass
class DiscreteVarifold:
    """Finite atomic m-varifold: points, orthonormal m-frames, weights."""

    m: int
    points: np.ndarray
    frames: np.ndarray  # (N, m, n), rows g-orthonormal at the point
    weights: np.ndarray
    mesh: Optional[SimplicialSurface] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.frames = np.asarray(self.frames, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0):
            raise VarifoldError("atom weights must be strictly positive")

    @property
    def total_weight(self):
        return float(np.sum(self.weights))

    def check_frames(self, metric, tol=1e-10):
        g = None if metric.is_euclidean else metric.matrix(self.points)
        if g is None:
            gram = np.einsum("fae,fbe->fab", self.frames, self.frames)
        else:
            gram = np.einsum("fae,fef_,fbf_->fab".replace("f_", "c"),
                             self.frames, g, self.frames)
        eye = np.eye(self.m)
        err = float(np.max(np.abs(gram - eye)))
        if err > tol:
            raise VarifoldError(f"frames not orthonormal: deviation {err:.3g}")
        return err


# barycentric quadrature rules on the reference simplex, exact to the stated
# polynomial degree; (nodes in barycentric coordinates, weights summing to 1)
_SEGMENT_RULES = {
    1: (np.array([[0.5, 0.5]]), np.array([1.0])),
    2: (np.array([
        [0.5 + 0.5 / np.sqrt(3.0), 0.5 - 0.5 / np.sqrt(3.0)],
        [0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)],
    ]), np.array([0.5, 0.5])),
    4: (np.array([
        [0.5 + 0.5 * np.sqrt(0.6), 0.5 - 0.5 * np.sqrt(0.6)],
        [0.5, 0.5],
        [0.5 - 0.5 * np.sqrt(0.6), 0.5 + 0.5 * np.sqrt(0.6)],
    ]), np.array([5.0, 8.0, 5.0]) / 18.0),
}

_TRIANGLE_RULES = {
    1: (np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0])),
    # edge midpoints: exact for quadratics
    2: (np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
        np.array([1.0, 1.0, 1.0]) / 3.0),
    # 6-point degree-4 rule (Dunavant)
    4: (np.array([
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
    ]), np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)),
}


def _quadrature(m, order):
    rules = _SEGMENT_RULES if m == 1 else _TRIANGLE_RULES if m == 2 else None
    if rules is None:
        raise VarifoldError(f"no quadrature rules for m = {m}")
    if order not in rules:
        raise VarifoldError(f"unsupported quadrature order {order} (have {sorted(rules)})")
    return rules[order]


def _metric_frames(E, points, metric):
    """Gram-Schmidt the edge vectors into g-orthonormal frames at each point."""
    F, m, n = E.shape
    if metric.is_euclidean:
        g = None
    else:
        g = metric.matrix(points)

    def inner(a, b):
        if g is None:
            return np.einsum("fe,fe->f", a, b)
        return np.einsum("fe,fec,fc->f", a, g, b)

    frames = np.zeros_like(E)
    for i in range(m):
        v = E[:, i, :].copy()
        for j in range(i):
            v -= inner(v, frames[:, j, :])[:, None] * frames[:, j, :]
        nrm = np.sqrt(np.maximum(inner(v, v), 0.0))
        if np.any(nrm < 1e-14):
            raise DegenerateSimplexError("edge vectors metrically dependent")
        frames[:, i, :] = v / nrm[:, None]
    return frames


def varifold_from_mesh(mesh, metric=None, order=2):
    """Lower a mesh to an atomic varifold: one atom per quadrature node.

    Atom weight = multiplicity x quadrature weight x metric m-volume of the
    simplex evaluated at the node (so curved-metric area is integrated with
    the same rule).
    """
    metric = metric or geo.metric_euclidean(mesh.n)
    mesh.check()
    nodes, wq = _quadrature(mesh.m, order)
    v = mesh.vertices[mesh.simplices]          # (F, m+1, n)
    pts = np.einsum("qb,fbn->fqn", nodes, v)   # (F, Q, n)
    E = mesh.edge_matrices()                   # (F, m, n)
    fact = np.prod(np.arange(1, mesh.m + 1))
    F, Q = pts.shape[:2]
    flat = pts.reshape(F * Q, mesh.n)
    if metric.is_euclidean:
        gram = np.einsum("fae,fbe->fab", E, E)
        vol_node = np.repeat(np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / fact, Q)
    else:
        g = metric.matrix(flat).reshape(F, Q, mesh.n, mesh.n)
        gram = np.einsum("fae,fqec,fbc->fqab", E, g, E)
        vol_node = (np.sqrt(np.maximum(np.linalg.det(gram), 0.0)) / fact).ravel()
    weights = np.repeat(mesh.multiplicity, Q) * np.tile(wq, F) * vol_node
    frames = _metric_frames(
        np.repeat(E, Q, axis=0), flat, metric
    )
    keep = weights > 0
    return DiscreteVarifold(mesh.m, flat[keep], frames[keep], weights[keep], mesh=mesh)


def area(mesh, metric=None, order=2):
    """Total metric m-area of the mesh (multiplicity-weighted)."""
    return varifold_from_mesh(mesh, metric, order=order).total_weight


def first_variation(V, X, metric=None):
    """delta V(X) = sum of weights x trace of the covariant gradient on P."""
    metric = metric or geo.metric_euclidean(V.points.shape[1])
    A = geo.covariant_gradient(X, V.points, metric)  # (N, n, n), [k, i]
    if metric.is_euclidean:
        terms = np.einsum("fae,fek,fak->f", V.frames, A, V.frames)
    else:
        g = metric.matrix(V.points)
        terms = np.einsum("fae,fec,fck,fak->f", V.frames, g, A, V.frames)
    return float(np.sum(V.weights * terms))


def weight_integral(V, f):
    """Integral of a scalar function against the weight measure."""
    vals = np.asarray(f(V.points), dtype=float)
    return float(np.sum(V.weights * vals))


def field_magnitude(X, metric=None):
    """|X|_g as a callable on point batches, for weight_integral."""
    def f(pts):
        vals = X.value(pts)
        if metric is None or metric.is_euclidean:
            return np.linalg.norm(vals, axis=-1)
        return metric.norm(pts, vals)
    return f


def flow_mesh(mesh, X, t, steps=8, domain=None):
    """Advance mesh vertices along X for time t with classical RK4."""
    y = mesh.vertices.copy()
    h = t / steps
    for _ in range(steps):
        k1 = X.value(y)
        k2 = X.value(y + 0.5 * h * k1)
        k3 = X.value(y + 0.5 * h * k2)
        k4 = X.value(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if domain is not None:
        lo, hi = domain.chart[:, 0], domain.chart[:, 1]
        if np.any(y < lo) or np.any(y > hi):
            raise VarifoldError("flow pushed a vertex out of the chart")
    return mesh.with_vertices(y)


def _admissibility_margin(X, domain, rng, samples=1000):
    """min over boundary samples of <X, nu_N>_g."""
    pts = domain.sample_chart(rng, 8 * samples)
    bnd = geo.newton_level_project(domain.u0, pts)
    lo, hi = domain.chart[:, 0], domain.chart[:, 1]
    ok = np.all((bnd >= lo) & (bnd <= hi), axis=-1)
    bnd = bnd[ok][:samples]
    if len(bnd) == 0:
        raise geo.GeometryError("no boundary samples found in the chart")
    nu = domain.inward_normal(bnd)
    vals = X.value(bnd)
    if domain.metric.is_euclidean:
        inner = np.einsum("fe,fe->f", vals, nu)
    else:
        g = domain.metric.matrix(bnd)
        inner = np.einsum("fe,fec,fc->f", vals, g, nu)
    return float(np.min(inner))


def check_first_order_minimizing(V, domain, fields, tolerance=None, seed=0):
    """Test the inward-variation inequality against a battery of fields.

    Every field must satisfy <X, nu_N> >= 0 on the boundary (sampled); a
    violator is rejected outright.  Pass iff min over fields of delta V(X)
    is above -tolerance.
    """
    rng = np.random.default_rng(seed)
    metric = domain.metric
    records = []
    for i, X in enumerate(fields):
        margin = _admissibility_margin(X, domain, rng)
        if margin < -1e-9:
            raise InadmissibleFieldError(
                f"field {i} has <X, nu_N> = {margin:.3g} < 0 on the boundary"
            )
        dv = first_variation(V, X, metric)
        sup = float(np.max(np.linalg.norm(X.value(V.points), axis=-1)))
        records.append({"index": i, "delta_V": dv, "sup_X": sup})
    if tolerance is None:
        sup_all = max((r["sup_X"] for r in records), default=0.0)
        tolerance = 1e-6 * V.total_weight * max(sup_all, 1.0)
    worst = min(records, key=lambda r: r["delta_V"], default=None)
    passed = worst is None or worst["delta_V"] >= -tolerance
    return {
        "passed": bool(passed),
        "min_delta_V": None if worst is None else worst["delta_V"],
        "worst_field": None if worst is None else worst["index"],
        "tolerance": float(tolerance),
        "fields": records,
    }


def check_bounded_mc(V, X, h, metric=None, tolerance=None):
    """delta V(X) + h * integral of |X|; pass iff >= -tolerance."""
    if h < 0:
        raise ValueError("h must be nonnegative")
    metric = metric or geo.metric_euclidean(V.points.shape[1])
    dv = first_variation(V, X, metric)
    mass = weight_integral(V, field_magnitude(X, metric))
    value = dv + h * mass
    if tolerance is None:
        tolerance = 1e-6 * V.total_weight * max(
            float(np.max(np.linalg.norm(X.value(V.points), axis=-1))), 1.0
        )
    return {
        "value": float(value),
        "delta_V": float(dv),
        "mass_X": float(mass),
        "passed": bool(value >= -tolerance),
        "tolerance": float(tolerance),
    }


def mesh_mean_curvature(mesh, metric=None):
    """Discrete mean-curvature vectors (area-gradient form), euclidean only.

    Returns (H, interior_mask): H[v] = -(vertex area gradient) / (barycentric
    vertex area).  Interior vertices of a flat mesh get H = 0; a unit sphere
    converges to |H| = 2 under refinement.
    """
    if metric is not None and not metric.is_euclidean:
        raise VarifoldError("mean curvature is implemented for the euclidean metric")
    if mesh.m != 2:
        raise VarifoldError("mean curvature needs a 2-dimensional mesh")
    mesh.check()
    grad = area_vertex_gradient(mesh)
    vols = mesh.euclidean_volumes() * mesh.multiplicity
    vert_area = np.zeros(len(mesh.vertices))
    np.add.at(vert_area, mesh.simplices.ravel(), np.repeat(vols / 3.0, 3))
    if np.any(vert_area <= 0):
        raise VarifoldError("isolated vertex in mean-curvature computation")
    H = -grad / vert_area[:, None]
    interior = np.ones(len(mesh.vertices), dtype=bool)
    interior[mesh.boundary_vertices()] = False
    return H, interior


def area_vertex_gradient(mesh):
    """Euclidean gradient of total area w.r.t. each vertex position."""
    v = mesh.vertices[mesh.simplices]  # (F, m+1, n)
    grad = np.zeros_like(mesh.vertices)
    if mesh.m == 1:
        d = v[:, 1] - v[:, 0]
        L = np.linalg.norm(d, axis=-1, keepdims=True)
        u = mesh.multiplicity[:, None] * d / np.maximum(L, 1e-300)
        np.add.at(grad, mesh.simplices[:, 0], -u)
        np.add.at(grad, mesh.simplices[:, 1], u)
        return grad
    if mesh.m != 2:
        raise VarifoldError("area gradient implemented for m in {1, 2}")
    for corner in range(3):
        a = v[:, corner]
        b = v[:, (corner + 1) % 3]
        c = v[:, (corner + 2) % 3]
        e = c - b
        elen2 = np.einsum("fe,fe->f", e, e)
        # altitude direction: component of (a - b) orthogonal to the far edge
        h = (a - b) - (np.einsum("fe,fe->f", a - b, e) / np.maximum(elen2, 1e-300))[:, None] * e
        hlen = np.linalg.norm(h, axis=-1)
        ga = 0.5 * np.sqrt(elen2)[:, None] * h / np.maximum(hlen, 1e-300)[:, None]
        np.add.at(grad, mesh.simplices[:, corner], mesh.multiplicity[:, None] * ga)
    return grad


def _simplex_keys(mesh, decimals=9):
    """Geometric keys: sorted rounded vertex coordinates of each simplex."""
    v = np.round(mesh.vertices[mesh.simplices], decimals)
    keys = []
    for simplex in v:
        rows = sorted(tuple(row) for row in simplex)
        keys.append(tuple(rows))
    return keys


def decompose_integral(V_mesh, boundary_mesh, tol=1e-9):
    """Split an integral mesh varifold as d x (boundary) + remainder.

    d is the smallest multiplicity the varifold carries over the boundary
    mesh (0 when any boundary simplex is absent).  Raises NonIntegralError
    for non-integer multiplicities and DecompositionError if the remainder
    would go negative.
    """
    frac = np.abs(V_mesh.multiplicity - np.round(V_mesh.multiplicity))
    if np.any(frac > tol):
        worst = float(np.max(frac))
        raise NonIntegralError(
            f"multiplicities deviate from integers by up to {worst:.3g}"
        )
    mult = np.round(V_mesh.multiplicity).astype(int)
    v_keys = _simplex_keys(V_mesh)
    index = {}
    for i, key in enumerate(v_keys):
        index[key] = index.get(key, 0) + mult[i]
    b_keys = _simplex_keys(boundary_mesh)
    d = min((index.get(key, 0) for key in b_keys), default=0)
    if d == 0:
        return None, V_mesh, 0
    remaining = dict.fromkeys(set(v_keys), 0)
    for i, key in enumerate(v_keys):
        remaining[key] += mult[i]
    for key in b_keys:
        remaining[key] = remaining.get(key, 0) - d
        if remaining[key] < 0:
            raise DecompositionError(
                "boundary part exceeds the varifold: remainder would be negative"
            )
    # rebuild the remainder on the original mesh combinatorics
    keep, new_mult = [], []
    consumed = {key: d for key in b_keys}
    for i, key in enumerate(v_keys):
        take = min(consumed.get(key, 0), mult[i])
        if take:
            consumed[key] -= take
        left = mult[i] - take
        if left > 0:
            keep.append(i)
            new_mult.append(left)
    W = SimplicialSurface(boundary_mesh.vertices, boundary_mesh.simplices,
                          d * np.ones(len(boundary_mesh.simplices)))
    if keep:
        Wp = SimplicialSurface(V_mesh.vertices, V_mesh.simplices[keep],
                               np.asarray(new_mult, dtype=float))
    else:
        Wp = None
    return W, Wp, d


def support_distance(V, p, metric=None):
    """Distance from p to the support (min over atom points)."""
    if len(V.points) == 0:
        raise VarifoldError("empty varifold has no support")
    p = np.asarray(p, dtype=float)
    d = float(cKDTree(V.points).query(p)[0])
    if metric is None or metric.is_euclidean:
        return d
    c = metric.constant_factor()
    if c is None:
        raise VarifoldError("support distance needs a constant-factor metric")
    return c * d


def support_points(mesh_or_varifold):
    pts = getattr(mesh_or_varifold, "points", None)
    if pts is None:
        # only vertices actually referenced by a simplex carry support
        mesh = mesh_or_varifold
        used = np.unique(mesh.simplices.ravel())
        pts = mesh.vertices[used]
    return np.asarray(pts, dtype=float)
