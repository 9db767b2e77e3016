"""Dyadic-grid toolkit for rough singular integrals, their commutators and sparse bounds.

Submodules:

``lattice``
    grids, dyadic cubes, the translated lattices and sparse families
``norms``
    grid functions, weights, Orlicz norms, maximal functions, weight constants
``rough``
    rough kernels, ``T_Omega`` and ``[b, T_Omega]``, grand maximal operators,
    weak-type estimates
``sparse``
    stopping cubes, constructive sparse domination, sparse forms and operators
``harness``
    Rubio de Francia majorants, operator-norm lower estimates and weighted
    bound checks
``estimators``
    scikit-learn style wrappers
"""

from .config import ConfigError, ExperimentConfig
from .estimators import (
    Commutator,
    OrliczMaximal,
    RoughSingularIntegral,
    RubioDeFrancia,
    SparseDominator,
    WeightProfile,
)
from .harness import *  # noqa: F401,F403
from .lattice import *  # noqa: F401,F403
from .norms import *  # noqa: F401,F403
from .reports import VerificationReport
from .rough import *  # noqa: F401,F403
from .sparse import *  # noqa: F401,F403

__version__ = "0.1.0"
