"""A steel/epoxy laminate: normal stiffness is the harmonic mean, exactly, at any truncation."""

from phonomog import EPOXY, STEEL, UnitCell
from phonomog.mm import cll_eff

f = 0.5
lam = UnitCell.laminate(EPOXY, STEEL, f, axis=0)
c_s, c_e = 170e9, EPOXY.stiffness.c[0, 0, 0, 0].real
exact = 1.0 / (f / c_s + (1 - f) / c_e)
for N in (0, 1, 2):
    c11 = cll_eff(lam, 0, N).C[0, 0].real
    print(f"N={N}  C11 = {c11 / 1e9:.10f} GPa   harmonic mean = {exact / 1e9:.10f} GPa")
