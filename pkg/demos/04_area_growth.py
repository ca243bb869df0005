"""Area growth of the assembled surface against reference surfaces.

The metric area inside a coordinate ball counts the inner sheet, which is the
inversion image of the outer end and so already carries most of the area at
small radii.  The fitted exponent is then far below 2 at moderate radii, even
for a flat plane through the origin.  The inversion-symmetric shell and the
Euclidean area are shown for comparison.

    python3 demos/04_area_growth.py
"""

import numpy as np

from schwarzmin import assembly as asb
from schwarzmin import diagnostics as dg
from schwarzmin import geometry as geo
from schwarzmin import plateau as pl
from schwarzmin import surfaces as sf

M = 2.0
RADII = [4.0, 6.0, 9.0, 13.0]


def report(name, mesh):
    ball = dg.area_growth_fit(mesh, M, RADII)
    shell = dg.area_growth_fit(mesh, M, RADII, symmetric=True)
    flat = dg.area_growth_fit(mesh, M, RADII, metric=False)
    print(f"{name:>10}: metric ball {ball:6.3f}  metric shell {shell:6.3f}  euclidean {flat:6.3f}")


def main():
    res = pl.sweep_R(np.pi / 2, M, [3.0, 5.0, 8.0, 12.0, 16.0], n_per_arc=6, level=2)
    w = asb.assemble(res.meshes[-1], geo.generate_group(1, M))
    report("surface", w.mesh)
    report("plane", sf.polar_grid(1e-2, 16.0, 60, 48))
    far = [500.0, 1000.0, 2000.0, 4000.0]
    plane = sf.polar_grid(1e-2, 1e4, 60, 48)
    print(f"plane at radii {far}: metric ball {dg.area_growth_fit(plane, M, far):.3f}")


if __name__ == "__main__":
    main()
