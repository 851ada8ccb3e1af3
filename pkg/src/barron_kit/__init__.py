"""Barron functions represented as signed measures on the parameter sphere."""
from .calculus1d import (
    Profile1D,
    compose_profile,
    measure_to_profile,
    norm_1d,
    profile_to_measure,
    reconstruct,
    slice_1d,
)
from .constructions import (
    DecayRecipe,
    DecayRecipeError,
    euclidean_norm,
    gaussian_decay,
    higher_decay,
    partial_norm,
    solve_decay_kernel,
    square_fn,
)
from .evaluation import asymptotic_profile, bounded_part, directional_derivative, evaluate
from .meanfield import FlowState, RiskSpec, flow, grad, indexed_view, risk
from .measure import (
    BarronFunction,
    MeasureError,
    Neuron,
    SphereMeasure,
    from_neurons,
    homogeneous_reduce,
    linear_part,
    load_measure,
    odd_even_split,
    save_measure,
    to_neurons,
    total_variation,
)
from .sampling import (
    DataDistribution,
    digit_deinterleave,
    digit_interleave,
    equalize,
    inverse_cdf_sample,
    l2_error,
    sample_network,
)
from .singular import Stratum, singular_report, stratify, stratify_density

__version__ = "0.1.0"
