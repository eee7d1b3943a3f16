"""The measured ingredients of the contraction analysis.

Four independent checks, each printable as a one-line verdict:

* indicator reduction  -- an exact discrete inequality, margin <= 0
* quasi-orthogonality  -- Pythagoras holds exactly for the symmetric
                          linear problem and approximately (Lambda -> 1)
                          for the cubic one
* discrete inf-sup     -- 1 in the energy norm, a stable constant in H1
* local Lipschitz      -- the indicator difference of two states is
                          controlled by the meshsize-weighted distance
"""

import numpy as np

from afemlab import verify

print("indicator reduction (20 randomized instances, ell = 1)")
checks = verify.reduction_trials(n=20, seed=1)
print(f"  worst relative margin: {max(c.rel_margin for c in checks):.2e} "
      f"(must be <= 1e-10)")

print("\nquasi-orthogonality, linear symmetric problem")
lin = verify.linear_quasi_orthogonality_study()
print(f"  max |Lambda_k - 1| = {np.abs(lin['lambdas'] - 1).max():.2e}")

print("\nquasi-orthogonality, manufactured cubic problem")
cub = verify.cubic_quasi_orthogonality_study(max_dofs=10_000)
lams = cub["lambdas"][5:]
print(f"  max Lambda_k for k >= 5: {np.nanmax(lams):.6f} "
      f"(trending to 1: last five mean {np.nanmean(lams[-5:]):.6f})")

print("\ndiscrete inf-sup of the Laplacian form")
st = verify.infsup_study()
print(f"  energy norm: {st['energy']}")
print(f"  full H1:     {[round(b, 6) for b in st['h1']]} "
      f"at dofs {st['dofs']}")

print("\nlocal Lipschitz probe, 100 random admissible pairs")
tops = verify.lipschitz_trials(n=100, seed=5)
print(f"  measured constants: max {tops.max():.4f}, "
      f"median {np.median(tops):.4f}")
