"""Steel cubes on a sheared lattice: both change-of-variable routes give the same moduli."""

import numpy as np

from phonomog import BAR, EPOXY, STEEL, TILDE, UnitCell, effective_moduli

A = np.array([[1, 0, 0], [0, 1, 0], [0, 1, 1]])
cell = UnitCell.cube(EPOXY, STEEL, 0.5, lattice=A)
np.set_printoptions(precision=3, suppress=True, linewidth=120)
for form in (TILDE, BAR):
    r = effective_moduli(cell, "pwe", 2, form)
    print(f"{form}: Voigt moduli (GPa)\n{r.voigt / 1e9}")
