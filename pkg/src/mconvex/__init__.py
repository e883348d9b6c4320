"""Numerical barrier constructions and maximum-principle checks for minimal
varieties in m-convex domains.

Submodules:

- :mod:`mconvex.exprfield` — expression parsing with exact symbolic derivatives
- :mod:`mconvex.geometry` — chart Riemannian geometry: metrics, shape
  operators, m-convexity
- :mod:`mconvex.barrier` — the contact surface, signed distance, cutoff, and
  the barrier vectorfield with its verification
- :mod:`mconvex.varifold` — atomic varifolds, first variation, mean
  curvature, boundary decomposition
- :mod:`mconvex.minimizer` — Plateau-style projected-gradient area
  minimization
- :mod:`mconvex.meshes` — parametric test meshes
- :mod:`mconvex.harness` — theorem-level scenario pipelines
- :mod:`mconvex.cli` — command-line front end
"""

__version__ = "0.1.0"

from . import barrier, exprfield, geometry, harness, meshes, minimizer, varifold  # noqa: F401
