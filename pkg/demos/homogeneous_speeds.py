"""Both solvers reproduce the bulk sound speeds of a uniform phase."""

import numpy as np

from phonomog import EPOXY, STEEL, UnitCell, effective_moduli, speeds

for name, mat in (("steel", STEEL), ("epoxy", EPOXY)):
    cell = UnitCell.homogeneous(mat)
    for method in ("pwe", "mm"):
        r = effective_moduli(cell, method, 1)
        ct, _, cl = speeds(r, [1, 0, 0])
        print(f"{name:6s} {method:3s}  c_t = {ct:8.2f} m/s   c_l = {cl:8.2f} m/s")
    c = mat.stiffness.c.real
    print(f"{name:6s} exact  c_t = {np.sqrt(c[0, 1, 0, 1] / mat.rho):8.2f} m/s"
          f"   c_l = {np.sqrt(c[0, 0, 0, 0] / mat.rho):8.2f} m/s")
