"""Orthogonal polynomials with convergent recurrence coefficients.

Overflow-safe evaluation, transfer matrices and their hyperbolic eigen-data,
the normalized eigenbasis iteration that separates atoms from regular points
outside the essential support, and the closed-form effect of adding point
masses on the recurrence coefficients.
"""
from .coeff_model import (CoefficientSequence, NevaiLimit, chebyshev, essential_support,
                          from_arrays, from_spec, is_outside_support, legendre,
                          total_variation)
from .errors import DomainError
from .scaled import ScaledReal
from .poly_eval import EvalTrace, eval_monic, eval_orthonormal, kappa, mass_at
from .transfer import (EigenStep, ScaledMat2, eigen_step, hyperbolic_onset, limit_eigen,
                       step_matrix, transfer_product)
from .asymptotics import (AsymptoticTrajectory, Classification, Verdict, classify,
                          normalized_iteration, predict_pn)
from .pointmass import (PerturbationResult, PointMassSpec, add_points, perturb,
                        perturb_monic_at, verify_limits)
from .oracle import DiscreteMeasure, gauss_discretization, stieltjes, with_atoms

__version__ = "0.1.0"
