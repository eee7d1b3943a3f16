"""Adaptive P1 finite elements for nonlinear elliptic PDEs in 2D.

The library implements the adaptive loop

    solve -> estimate -> mark -> refine

for semilinear and quasilinear second order problems on polygonal
domains, together with a verification toolbox that measures the
quantities driving its convergence analysis (quasi-orthogonality,
indicator reduction, reliability ratios, discrete inf-sup bounds and
quasi-error contraction factors) on concrete runs.
"""

from . import driver, estimate, fem, mark, mesh, nlsolve, problems, verify
from .errors import AfemError

__all__ = [
    "AfemError",
    "driver",
    "estimate",
    "fem",
    "mark",
    "mesh",
    "nlsolve",
    "problems",
    "verify",
]

__version__ = "0.1.0"
