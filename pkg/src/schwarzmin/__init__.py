"""Numerical lab for minimal surfaces in the doubled Schwarzschild manifold.

Modules
-------
geometry     conformal metric, isometries and the symmetry group
contour      piecewise-geodesic Jordan contour and its test domains
meshkit      triangle meshes: construction, refinement, I/O, intersections
plateau      area minimisation with fixed boundary and the R-sweep
assembly     reflection/rotation orbit of one piece welded into a closed-up surface
diagnostics  numerical checks of the qualitative properties of the solutions
cli          configuration-driven pipeline (``python3 -m schwarzmin``)
"""

from . import assembly, contour, diagnostics, geometry, meshkit, plateau, surfaces

__all__ = ["assembly", "contour", "diagnostics", "geometry", "meshkit", "plateau", "surfaces"]
__version__ = "0.1.0"
