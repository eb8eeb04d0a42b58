"""Subspace learning machine: oblique decision trees grown by probabilistic
projection search, with forest and gradient-boosting ensembles.

Public entry points:

- :mod:`slm.data` -- dataset container, CSV I/O, synthetic generators, splits
- :mod:`slm.dft` -- discriminant feature test (split scoring on 1D projections)
- :mod:`slm.projection` -- candidate projection sampling and decorrelation
- :mod:`slm.tree` -- single SLM/SLR tree training and prediction
- :mod:`slm.ensemble` -- SLM Forest and SLM Boost
- :mod:`slm.serialize` -- model save/load
- :mod:`slm.cli` -- command line front end (``slm`` script)
"""

from slm._kernels import BACKEND as kernel_backend

__all__ = ["kernel_backend"]
__version__ = "0.1.0"
