r"""
Certified averaging sums
------------------------
A random rank-one perturbation ``A + s B`` with ``B >= 0`` pushes eigenvalues
through a fixed window at a rate controlled by ``B``. Summed over integer
shifts of the window, the weight a vector ``phi`` sees is bounded by a constant
that depends on neither ``A`` nor the dimension.

This script builds a few random instances, computes the sums with certified
upper and lower estimates, and compares them with the bound.
"""
import math

import numpy as np

from wegnerlab import averaging as av
from wegnerlab import suite

#%%
# One instance. ``beta`` is the smallest eigenvalue of ``B``.
inst = suite.random_averaging_instance(0, 0, dims=(8,))
res = av.averaging_sum(inst)
print(f"dim={inst.A.shape[0]}  beta={inst.beta:.3f}  |B|={inst.norm_B:.3f}")
print(f"lower={res.lower:.5f}  upper={res.upper:.5f}  bound={av.averaging_bound(inst):.5f}")

#%%
# The ratio upper/bound over a batch. It stays below one at every dimension.
for d in (2, 8, 32):
    ratios = [av.averaging_sum(i).upper / av.averaging_bound(i)
              for i in (suite.random_averaging_instance(1, k, dims=(d,)) for k in range(20))]
    print(f"dim {d:>2}: max ratio {max(ratios):.3f}")

#%%
# The scalar lattice sum has a closed form at kappa = 0.
v = av.ell_value(0.0, 1.0)
print(f"l(0;1) in [{v.lower:.6f}, {v.upper:.6f}], closed form {1 + math.pi / math.tanh(math.pi):.6f}")

#%%
# With a dissipative part the sum still converges, with a bound that grows
# like 1 + 1/lambda as the dissipation weakens.
inst = suite.random_averaging_instance(2, 0, dims=(8,), dissipative=True)
for lam in (0.25, 0.5, 1.0):
    r = av.dissipative_sum(inst, lam, n_trunc=2000)
    print(f"lambda={lam}: partial sum {r.lower:.4f} <= {av.dissipative_bound(lam, inst.phi_norm2):.4f}")
