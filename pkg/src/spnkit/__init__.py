"""Tree-structured sum-product networks: signatures, models, distances,
a simplex-net compression codec, and an enumeration-based learner."""

from .errors import (
    BitstreamError,
    CapExceeded,
    DegenerateSample,
    DimensionError,
    EmptyCandidateSet,
    InsufficientSamples,
    LayoutError,
    LeafEncodeFailure,
    ModelError,
    NumericalError,
    ScopeError,
    SignatureSyntaxError,
    SimplexError,
    SizeError,
    SpnError,
    StructureError,
    SupportError,
    WeightError,
)
from .signature import (
    Leaf,
    Product,
    Scope,
    SignatureNode,
    StructureStats,
    Sum,
    iter_leaves,
    iter_sum_nodes,
    parse_signature,
    render_signature,
    replace_weights,
    same_structure,
    structure_stats,
)
from .model import (
    Categorical,
    Gaussian,
    LabeledSample,
    SampleBatch,
    SpnModel,
    density,
    load_model,
    log_density_batch,
    model_from_dict,
    model_to_dict,
    models_equal,
    negligible_leaves,
    path_weight,
    sample,
    sample_batch,
    save_model,
)
from .metrics import (
    SimilarityReport,
    product_l1_check,
    similarity,
    tv_bound_similar,
    tv_exact,
    tv_gaussian_1d,
    tv_monte_carlo,
)
from .codec import (
    CompressedMessage,
    CompressionBudget,
    GaussianCodecConfig,
    LeafClassSpec,
    MessageLayout,
    build_layout,
    compression_budget,
    leaf_decode_categorical,
    leaf_decode_gaussian,
    leaf_encode_categorical,
    leaf_encode_gaussian,
    message_from_bytes,
    message_to_bytes,
    payload_from_bytes,
    quantize_simplex,
    spn_decode,
    spn_encode,
)
from .learner import (
    CandidateSet,
    LearnResult,
    ScalingConfig,
    StructureSpec,
    enumerate_candidates,
    pac_learn,
    scaling_experiment,
    select_min_distance,
    theoretical_sample_size,
    write_rows_csv,
)

__version__ = "0.1.0"
