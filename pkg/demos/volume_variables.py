"""
Volume variables and the maximally reduced Hamiltonian
======================================================

V_k sums the squared contents of the k-faces of the simplex spanned by the
bodies.  The volume Hamiltonian in (V, P) agrees with H_rho at p_rho = J^T P.
"""

from fractions import Fraction

import numpy as np

from partint.models import pair_rho, rho_hamiltonian, vol_hamiltonian, volume_jacobian, volume_variables
from partint.models.rho import random_simplex, rho_names

# exact values on regular simplices
print("unit triangle:", volume_variables(3, [1, 1, 1]).values)
print("unit tetrahedron:", volume_variables(4, [1] * 6).values)
assert volume_variables(4, [1] * 6)[3] == Fraction(1, 72)

print("H_vol for three bodies:", vol_hamiltonian(3))

# the chain-rule identity at random configurations
rng = np.random.default_rng(0)
for N in (3, 4, 5):
    qn, pn = rho_names(N)
    Hrho = rho_hamiltonian(N, [1] * N).compile(qn + pn)
    Hvol = vol_hamiltonian(N).compile([f"V{k}" for k in range(1, N)] + [f"P{k}" for k in range(1, N)])
    worst = 0.0
    for _ in range(50):
        rho = pair_rho(random_simplex(rng, N))
        P = rng.uniform(-1, 1, N - 1)
        lhs = Hvol.value(np.concatenate((volume_variables(N, rho).as_array(), P)))
        rhs = Hrho.value(np.concatenate((rho, volume_jacobian(N, rho).T @ P)))
        worst = max(worst, abs(lhs - rhs))
    print(f"N = {N}: max |H_vol - H_rho| = {worst:.2e}")
