"""Parametric mesh builders for the test scenarios.

All builders return :class:`~mconvex.varifold.SimplicialSurface` objects in
ambient coordinates.  Triangulations are deliberately simple (fan / grid
patterns); refinement studies vary the resolution parameters rather than
remeshing.
"""
from __future__ import annotations

import numpy as np

from .varifold import SimplicialSurface


def _surface(vertices, simplices, multiplicity=None):
    vertices = np.asarray(vertices, dtype=float)
    simplices = np.asarray(simplices, dtype=int)
    if multiplicity is None:
        multiplicity = np.ones(len(simplices))
    return SimplicialSurface(vertices, simplices, np.asarray(multiplicity, dtype=float))


def _orthonormal_complement(normal):
    """Two unit vectors spanning the plane orthogonal to ``normal``."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    a = np.zeros(3)
    a[np.argmin(np.abs(n))] = 1.0
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def disk_mesh(radius=1.0, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
              rings=8, segments=64, multiplicity=1.0):
    """Flat triangulated disk: concentric rings around the center vertex."""
    center = np.asarray(center, dtype=float)
    e1, e2 = _orthonormal_complement(normal)
    verts = [center]
    ring_start = [None]
    for r in range(1, rings + 1):
        rho = radius * r / rings
        ring_start.append(len(verts))
        theta = 2 * np.pi * np.arange(segments) / segments
        verts.extend(center + rho * (np.outer(np.cos(theta), e1) + np.outer(np.sin(theta), e2)))
    tris = []
    for j in range(segments):
        tris.append((0, 1 + j, 1 + (j + 1) % segments))
    for r in range(1, rings):
        a, b = ring_start[r], ring_start[r + 1]
        for j in range(segments):
            jn = (j + 1) % segments
            tris.append((a + j, b + j, b + jn))
            tris.append((a + j, b + jn, a + jn))
    return _surface(verts, tris, multiplicity * np.ones(len(tris)))


def square_mesh(side=1.0, center=(0.5, 0.5, 0.0), divisions=1, multiplicity=1.0):
    """Axis-aligned square in the plane z = center_z."""
    cx, cy, cz = np.asarray(center, dtype=float)
    s = np.linspace(-0.5 * side, 0.5 * side, divisions + 1)
    verts = [(cx + x, cy + y, cz) for y in s for x in s]
    k = divisions + 1
    tris = []
    for j in range(divisions):
        for i in range(divisions):
            v = j * k + i
            tris.append((v, v + 1, v + k + 1))
            tris.append((v, v + k + 1, v + k))
    return _surface(verts, tris, multiplicity * np.ones(len(tris)))


def icosphere_mesh(radius=1.0, center=(0.0, 0.0, 0.0), subdivisions=3, multiplicity=1.0):
    """Geodesic sphere from a subdivided icosahedron (5120 faces at level 4)."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = list(verts)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        faces = [
            tri
            for (a, b, c) in faces
            for tri in (
                (a, midpoint(a, b), midpoint(a, c)),
                (b, midpoint(b, c), midpoint(a, b)),
                (c, midpoint(a, c), midpoint(b, c)),
                (midpoint(a, b), midpoint(b, c), midpoint(a, c)),
            )
        ]
    verts = np.asarray(center, dtype=float) + radius * np.asarray(verts)
    return _surface(verts, faces, multiplicity * np.ones(len(faces)))


def sphere_cap_mesh(radius=2.0, center=(0.0, 0.0, -1.2), z_range=(0.68, 0.79),
                    rings=10, segments=80, multiplicity=1.0):
    """Band of a round sphere between two horizontal planes.

    The default is a band of the radius-2 sphere centered at (0, 0, -1.2):
    mean curvature magnitude 2/R = 1, strictly inside the open unit ball
    (the two spheres meet at z = 0.65 and the pole sits at z = 0.8, so the
    band must stay strictly between those heights).
    """
    center = np.asarray(center, dtype=float)
    z0, z1 = z_range
    verts = []
    for r in range(rings + 1):
        z = z0 + (z1 - z0) * r / rings
        rho = np.sqrt(radius ** 2 - (z - center[2]) ** 2)
        theta = 2 * np.pi * np.arange(segments) / segments
        ring = np.stack([
            center[0] + rho * np.cos(theta),
            center[1] + rho * np.sin(theta),
            np.full(segments, z),
        ], axis=-1)
        verts.extend(ring)
    tris = []
    for r in range(rings):
        a, b = r * segments, (r + 1) * segments
        for j in range(segments):
            jn = (j + 1) % segments
            tris.append((a + j, b + j, b + jn))
            tris.append((a + j, b + jn, a + jn))
    return _surface(verts, tris, multiplicity * np.ones(len(tris)))


def cylinder_mesh(radius=1.0, z_range=(-0.5, 0.5), rings=16, segments=96, multiplicity=1.0):
    """Open cylinder of the given radius around the x3 axis."""
    z0, z1 = z_range
    verts = []
    for r in range(rings + 1):
        z = z0 + (z1 - z0) * r / rings
        theta = 2 * np.pi * np.arange(segments) / segments
        verts.extend(np.stack([
            radius * np.cos(theta), radius * np.sin(theta), np.full(segments, z)
        ], axis=-1))
    tris = []
    for r in range(rings):
        a, b = r * segments, (r + 1) * segments
        for j in range(segments):
            jn = (j + 1) % segments
            tris.append((a + j, b + j, b + jn))
            tris.append((a + j, b + jn, a + jn))
    return _surface(verts, tris, multiplicity * np.ones(len(tris)))


def circle_polyline(radius=1.0, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
                    segments=256, multiplicity=1.0):
    """Closed polygonal circle as a 1-dimensional mesh."""
    center = np.asarray(center, dtype=float)
    e1, e2 = _orthonormal_complement(normal)
    theta = 2 * np.pi * np.arange(segments) / segments
    verts = center + radius * (np.outer(np.cos(theta), e1) + np.outer(np.sin(theta), e2))
    segs = [(j, (j + 1) % segments) for j in range(segments)]
    return _surface(verts, segs, multiplicity * np.ones(len(segs)))


def chord_polyline(a, b, segments=32, multiplicity=1.0):
    """Straight polyline from a to b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.linspace(0.0, 1.0, segments + 1)[:, None]
    verts = (1 - t) * a + t * b
    segs = [(j, j + 1) for j in range(segments)]
    return _surface(verts, segs, multiplicity * np.ones(len(segs)))


def random_tube_mesh(bundle, rng, patch_scale=0.25, rings=3, segments=12):
    """Small random disk inside the tube of a barrier bundle.

    Draws a center in the working chart until the whole patch lies inside N
    with 0 <= u < epsilon, so the barrier field is genuinely nonzero on it.
    """
    from . import barrier as bar

    lo, hi = bundle.chart[:, 0], bundle.chart[:, 1]
    for _ in range(400):
        c = lo + (hi - lo) * rng.random(len(lo))
        r = patch_scale * bundle.epsilon / bundle.scale_factor
        normal = rng.standard_normal(3)
        mesh = disk_mesh(radius=r, center=c, normal=normal, rings=rings, segments=segments)
        data = bar.tube_eval(bundle.sigma, mesh.vertices, bundle.scale_factor)
        if np.all(data.valid) and np.all(data.u >= 0.05 * bundle.epsilon) \
                and np.all(data.u <= 0.9 * bundle.epsilon) \
                and np.all(bundle.domain.contains(mesh.vertices)):
            return mesh
    raise RuntimeError("could not place a random mesh inside the tube")
