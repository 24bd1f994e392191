"""Steel cubes in epoxy at f = 1/8: PWE falls from above, MM from the section bound.

The longitudinal speed along x1 is printed for each truncation next to the
Voigt and harmonic-section bounds and the Hashin-Shtrikman interval.
"""

import warnings

from phonomog import EPOXY, STEEL, PhonomogWarning, UnitCell, convergence_study, hashin_shtrikman, mm_zero_bound

cell = UnitCell.cube_fraction(EPOXY, STEEL, 1 / 8)
bounds = mm_zero_bound(cell)
hs = hashin_shtrikman(cell)
print(f"Voigt           c_l = {bounds.speeds_voigt([1, 0, 0])[-1]:8.2f} m/s")
print(f"section bound   c_l = {bounds.speeds_b([1, 0, 0])[-1]:8.2f} m/s")
print(f"Hashin-Shtrikman c_l in [{hs.cl[0]:.2f}, {hs.cl[1]:.2f}] m/s")

with warnings.catch_warnings():
    warnings.simplefilter("ignore", PhonomogWarning)
    rows = convergence_study(cell, Ns=(0, 1, 2))
for r in rows:
    print(f"{r['method']:3s} N={r['N']}  c_l = {r['speeds'][-1]:8.2f} m/s  ({r['seconds']:.1f} s)")
