"""Structure-preserving spectral solver for viscoelastic perturbation flow.

Submodules
----------
spectral      grids, transforms, dealiased products, norms, projections
cones         double-cone membership, leakage, support queries, splitting
dynamics      integrating-factor RK4 stepper and the simulate driver
initial_data  cone-supported (u0, E0) construction with gated residuals
diagnostics   energy terms, invariant residuals, ledger, CSV schema
checkpoint    binary field snapshots with JSON sidecars
config        strict JSON experiment configuration
verify        randomized property suites behind the CLI verify command
oracles       slow reference implementations used by the tests
"""

__version__ = "0.1.0"
