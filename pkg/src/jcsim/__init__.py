"""Finite-dimensional simulator and claim checker for damped driven Jaynes-Cummings master equations."""

from .density import DensityMatrix, observables, state_coherent, state_fock, state_thermal
from .evolve import IntegratorConfig, integrate, unitary_oracle
from .genspec import PolynomialOperatorSpec, evaluate, preset
from .lindblad import ModelSpec, generator_apply, hamiltonian

__version__ = "0.1.0"
