"""Nishimori-temperature estimation and Bethe-Hessian spectral classification."""

__version__ = "0.1.0"

from .classify import (
    ClassificationResult,
    baseline_mean_field,
    baseline_signed_laplacian,
    baseline_spinglass_bh,
    belief_propagation,
    classify,
    classify_nishimori,
    kmeans_1d,
    overlap,
    shift_edge_weights,
)
from .graphs import (
    Empirical,
    FeatureDataset,
    Gaussian,
    LabeledInstance,
    PlusMinusJ,
    WeightedGraph,
    analytic_beta_n,
    balanced_labels,
    generate_er,
    generate_powerlaw,
    gaussian_mixture_features,
    plant_labels,
    read_edgelist,
    read_features,
    read_labels,
    sample_weights,
    sparsify_kernel,
    write_edgelist,
    write_labels,
)
from .nishimori import (
    NishimoriEstimate,
    analytic_beta_f,
    analytic_beta_sg,
    courant_fischer_root,
    estimate_beta_f,
    estimate_beta_nishimori,
    estimate_beta_sg,
    gaussian_j0_for_ratio,
    model_mean,
)
from .spectral import (
    EigenPair,
    SpectrumReport,
    bethe_hessian,
    bethe_hessian_generic,
    build_m0,
    build_m_of_lambda,
    f_matrix,
    full_spectrum_b,
    largest_eigpair,
    m0_eigenvalues_from_w,
    mean_field_hessian,
    nonbacktracking,
    regularized_laplacian,
    signed_bethe_hessian,
    signed_laplacian,
    smallest_eigpair,
    watanabe_fukumizu_residual,
)
