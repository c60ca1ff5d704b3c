"""Generalized double and triple operator integrals for matrices with Jordan structure."""

from .bounds import (
    BoundReport,
    gdoi_lower_bound,
    gdoi_upper_bound,
    gtoi_upper_bound,
    holder_constants,
    holder_upper_bound,
    lipschitz_bounds,
    reverse_triangle_lower,
)
from .doi import compose, doi_hermitian, doi_variant_post, doi_variant_pre, gdoi, gdoi_split, gtoi, gtoi_split
from .errors import GdoiError, InputError, PreconditionError
from .funcalc import (
    Poly2,
    Polynomial,
    const2,
    divided_diff_1,
    divided_diff_2,
    eval_matrix_fn1,
    eval_matrix_fn2,
    parse_fn1,
    parse_fn2,
    pi1,
    pi2,
    power,
)
from .perturb import (
    continuity_probe,
    divergence_triple,
    mu_extra_term,
    perturbation_commutator,
    perturbation_difference,
    predict_nilpotency,
    splitting_check,
    telescope_residual,
)
from .randmat import EnsembleSpec, monte_carlo_tail, sample_pair, tail_bound_rhs
from .spectral import JordanStructureSpec, SpectralDecomposition, decompose, diagonal_decomposition, split_pn, synthesize, validate
