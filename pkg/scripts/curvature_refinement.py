#!/usr/bin/env python3
"""Refinement study of the discrete mean-curvature operator.

Tracks the interior |H| error against the exact values on a unit sphere
(|H| = 2), a radius-2 spherical band (|H| = 1), and a unit cylinder
(|H| = 1) as the meshes are refined.
"""
import argparse
import sys

import numpy as np

from mconvex import meshes
from mconvex import varifold as vf


def study(name, builder, exact, levels):
    print(f"\n{name} (exact |H| = {exact})")
    print(f"{'faces':>8s} {'mean |H|':>10s} {'rel err':>9s}")
    for level in levels:
        mesh = builder(level)
        H, interior = vf.mesh_mean_curvature(mesh)
        mags = np.linalg.norm(H[interior], axis=-1)
        mean = float(np.mean(mags))
        print(f"{len(mesh.simplices):8d} {mean:10.5f} {abs(mean - exact) / exact:9.2%}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.parse_args()
    study("unit icosphere", lambda s: meshes.icosphere_mesh(subdivisions=s), 2.0, [2, 3, 4])
    study("radius-2 spherical band",
          lambda k: meshes.sphere_cap_mesh(rings=5 * k, segments=20 * k), 1.0, [2, 4, 5])
    study("unit cylinder",
          lambda k: meshes.cylinder_mesh(rings=8 * k, segments=32 * k), 1.0, [1, 2, 4])
    return 0


if __name__ == "__main__":
    sys.exit(main())
