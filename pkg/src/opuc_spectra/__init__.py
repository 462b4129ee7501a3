"""Absolutely continuous spectrum of orthogonal polynomials on the unit circle.

Transfer-matrix predictions of the a.c. spectrum for Verblunsky coefficients of
bounded variation, eventually periodic approximants with their densities, and
an independent CMV/Schur oracle to check them.
"""

from .arcs import ArcSet, arc
from .errors import (BranchError, BudgetError, ConfigurationError, DegenerateResult, DiagnosticError, DomainError,
                     NumericInstability, OpucError, OutOfBandError, RegionError)
from .sequences import VerblunskyCoefficient, VerblunskySequence, constant, explicit, periodic, rotating_phase
from .szego import PeriodicTail, Truncate, caratheodory_function, schur_function, szego_polynomials
from .transfer import BranchTracker, discriminant, tilde_block, transfer_block
from .predictor import compute_l, periodic_bands, predict_from_l, predict_p1, predict_p2, torus_convergence_check
from .diagonalization import detect_sign_constants, eigen_frame, lambda_plus_minus, perturbation_matrix
from .approximants import ac_density, approximant_spec, entropy_integral, product_diagnostics, weyl_solution
from .cmv import build_cmv, compare_densities, density_estimate, spectral_measure

__version__ = "0.1.0"
