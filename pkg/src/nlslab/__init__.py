"""Numerical laboratory for blow-up of focusing mass-supercritical radial NLS.

Modules: :mod:`fields` (grids, fields, functionals), :mod:`ground_state`,
:mod:`classifier`, :mod:`evolver`, :mod:`concentration`, :mod:`sphere`,
:mod:`io` and :mod:`cli`.
"""

from .errors import *  # noqa: F401,F403
from .fields import ComplexField, NlsParams, RadialGrid, energy, functionals, grad_sq, mass

__version__ = "0.1.0"

__all__ = ["ComplexField", "NlsParams", "RadialGrid", "energy", "functionals", "grad_sq", "mass"]
