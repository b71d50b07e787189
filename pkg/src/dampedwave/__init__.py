"""Pseudospectral laboratory for the semilinear damped wave equation.

The model is u_tt - lap(u) + u_t = |u|^p on a periodic box, with small
data eps*(u0, u1). The package provides exact per-mode linear propagation,
an exponential two-step nonlinear integrator, weighted decay-norm tracking,
lifespan measurement for blow-up runs, test-function based blow-up
functionals and numerical checks of the functional inequalities the
analysis rests on.
"""

__version__ = "0.1.0"
