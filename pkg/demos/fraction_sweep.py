"""Longitudinal speed along x1 against steel volume fraction, with optional plot."""

import sys

import numpy as np

from phonomog import EPOXY, STEEL, UnitCell, hashin_shtrikman, mm_zero_bound
from phonomog.homogenize import principal_gamma, speeds_from_gamma

grid = np.linspace(0.1, 0.9, 9)
rows = []
for f in grid:
    cell = UnitCell.cube_fraction(EPOXY, STEEL, f)
    rho = cell.mean_density()
    # axis runs along x1 only; the full tensor is not needed for this direction
    pwe = speeds_from_gamma(principal_gamma(cell, "pwe", 2, 0), rho)[-1]
    mm = speeds_from_gamma(principal_gamma(cell, "mm", 1, 0), rho)[-1]
    bound = mm_zero_bound(cell).speeds_b([1, 0, 0])[-1]
    lo, hi = hashin_shtrikman(cell).cl
    rows.append((f, pwe, mm, bound, lo, hi))
    print(f"f={f:.1f}  pwe2={pwe:7.1f}  mm1={mm:7.1f}  bound={bound:7.1f}  HS=[{lo:7.1f}, {hi:7.1f}] m/s")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt

    data = np.array(rows)
    for j, label in enumerate(["PWE N=2", "MM N=1", "section bound", "HS lower", "HS upper"], start=1):
        plt.plot(data[:, 0], data[:, j], marker="o", label=label)
    plt.xlabel("steel volume fraction")
    plt.ylabel("c_l along x1 (m/s)")
    plt.legend()
    plt.savefig("fraction_sweep.png", dpi=150)
