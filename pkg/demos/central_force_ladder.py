"""
Particular integrals of a central force
=======================================

The (r, phi, rho) chart of a central potential has a global integral pphi and
a particular integral prho.  Restricting to pphi = 0 and then prho = 0 gives
the one-dimensional radial Hamiltonian.
"""

import numpy as np

from partint.dynamics import IntegratorSpec, integrate
from partint.models import central_force
from partint.polyalg import SparsePoly, module_reduce, poly_from_expression, poly_poisson
from partint.reduction import BoxSampler, reduced_ladder, verify_particular_integral

cf = central_force(m=1.0, V="-1/r")
hc2 = cf.spherical
print("K =", cf.K)

# exact brackets: {pphi, K} vanishes, {prho, G} is a multiple of prho
K, G = poly_from_expression(cf.K), poly_from_expression(cf.G)
pphi, prho = SparsePoly.var("pphi"), SparsePoly.var("prho")
print("{pphi, K} =", poly_poisson(pphi, K, hc2.chart))
red = module_reduce(poly_poisson(prho, G, hc2.chart), [prho])
print("{prho, G} = (%s) * prho, remainder %s" % (red.coefficients[0], red.remainder))

# the same claim, checked numerically by sampling near prho = 0
rep = verify_particular_integral("prho", cf.G, hc2.chart, BoxSampler.for_model(hc2, seed=1))
print("numeric verdict:", rep.verdict)

# the reduction ladder K -> G -> J
for rung in reduced_ladder(hc2.chart, cf.K, ["pphi", "prho"]):
    print(f"  {rung.momentum} = 0 drops {rung.coordinate}: {rung.hamiltonian}")

# a trajectory started on pphi = prho = 0 never leaves it
x0 = hc2.chart.point(r=1.3, phi=0.2, rho=0.8, pr=0.1, pphi=0.0, prho=0.0)
tr = integrate(cf.K, x0, IntegratorSpec(dt=1e-3, steps=1000), {"pphi": "pphi", "prho": "prho"})
print("max |pphi|, |prho| along the orbit:",
      np.abs(tr.observables["pphi"]).max(), np.abs(tr.observables["prho"]).max())
