"""Sticky HDP-HMM with radial-basis-function autoregressive emissions.

A library for segmentation and few-shot classification of non-stationary
time series: nonlinear autoregressive states defined by prototype basis
centers, a hierarchical Dirichlet process prior over the switching dynamics,
and a blocked Gibbs sampler tying them together.
"""

from .classify import (
    ClassifierConfig,
    ClassificationResult,
    ClassModel,
    SplitProtocol,
    choose_held_out_subjects,
    classify_segment,
    classify_window,
    evaluate_segments,
    run_split_sweep,
    threshold_sweep,
    train_class_model,
)
from .data import EegDataset, emit_eeg_csv, ingest_uci_eeg, synthetic_two_class_dataset
from .emissions import (
    EmissionHyperprior,
    LinearArEmission,
    PrototypeSet,
    RbfEmission,
    SufficientStats,
    TimeSeries,
    accumulate_stats,
    build_lagged_matrix,
    feature_vector,
    init_centers_from_prototypes,
    linear_feature_map,
    log_likelihood,
    log_likelihood_table,
    predict_mean,
    predict_means,
    resample_centers,
    sample_posterior_emission,
    solve_weights_map,
)
from .errors import (
    DegenerateInputError,
    DimensionError,
    DivergenceError,
    GenerationError,
    InsufficientDataError,
    InvalidParameterError,
    NumericalError,
    RbfHmmError,
    SchemaError,
    SingularityError,
)
from .hmm import (
    ChainState,
    EmissionTemplate,
    FitResult,
    GibbsConfig,
    MessageTable,
    StickyHdpPrior,
    backward_messages,
    count_transitions,
    fit,
    forward_sample_states,
    gibbs_sweep,
    init_chain_state,
    joint_log_likelihood,
    marginal_log_likelihood,
    occupied_states,
    sample_beta,
    sample_transition_rows,
)
from .kernels import (
    BasisFunction,
    CompositeKernelParams,
    GaussianDecay,
    InverseWishartParams,
    MatrixNormalParams,
    PolyharmonicSpline,
    ar_psd,
    basis_activation,
    composite_kernel_value,
    distance,
    pairwise_distances,
    sample_dirichlet,
    sample_inverse_wishart,
    sample_matrix_normal,
)
from .metrics import (
    SpectralFeatures,
    StateMatch,
    balanced_accuracy,
    confidence_histogram,
    feature_density,
    matched_state_accuracy,
    spectral_features,
    transition_mse,
)
from .synth import (
    SynthOutput,
    SynthSpec,
    default_synth_spec,
    default_transition_matrix,
    sample_ground_truth_emissions,
    simulate,
)

__version__ = "0.1.0"
