"""dnc-lab: a numerical laboratory for deep-network layer recursions.

The package evaluates hidden-state recursions N_{n+1} = act(W_{n+1} N_n +
b_{n+1}) — optionally with pooling or banded-Toeplitz (convolutional)
weights on growing widths — and verifies, on reproducible generated
families, that every computed quantity obeys its theoretical counterpart:
the a-priori state-norm bound, the three-term deviation bound between
depths, the limit bound with certified constants, and the convergence
conditions that govern them.

Determinism is load-bearing everywhere: reductions are sequential sums,
layer parameters come from per-index seeded streams, and studies produce
byte-identical reports for any thread count.
"""

from .activations import (
    ACTIVATION_NAMES,
    Activation,
    elu,
    empirical_lipschitz,
    identity,
    leaky_relu,
    make_activation,
    prelu,
    relu,
    selu,
    sigmoid,
    tanh,
)
from .analysis import (
    BoundContext,
    ConditionVerdict,
    Domain,
    LimitConstants,
    RateFit,
    SamplerSpec,
    Trajectory,
    apriori_bound,
    check_condition,
    check_mask_conditions,
    cumulative_products,
    derive_limit_constants,
    deviation_bound,
    empirical_sup_deviation,
    fit_exponential_rate,
    limit_bound,
    state_deviation,
    tail_product_sums,
    weighted_tail_sums,
)
from .config import CONFIG_SCHEMA, ConfigError, Experiment, load_config, parse_config
from .corpus import Instance, control_instances, corpus_instances
from .generators import (
    BuiltNetwork,
    GenSpec,
    MaskSpec,
    build,
    build_masks,
    rescale_to_norm,
)
from .linalg import (
    INF,
    ONE,
    TWO,
    BandedToeplitz,
    EventuallyConstSeq,
    PNorm,
    apply_banded,
    as_matrix,
    as_vector,
    constant_padded_toeplitz,
    extend_vector,
    induced_norm,
    matvec,
    norm_upper_bound,
    seq_sum,
    toeplitz_from_mask,
    toeplitz_norms,
    vector_norm,
    zero_pad_matrix,
    zero_pad_vector,
)
from .network import (
    CONSTANT_PAD,
    PLAIN,
    ZERO_PAD,
    Conv,
    LayerSeq,
    MaskSeq,
    NetworkKind,
    Plain,
    Pooled,
    cnn_layer_seq,
    eval_extended,
    eval_extended_trajectory,
    eval_network,
    eval_trajectory,
    network_lipschitz_bound,
    pool_of,
)
from .pooling import PoolingOp, average_pooling, max_pooling, no_pooling, pool_lipschitz
from .report import (
    REPORT_SCHEMA,
    TABLE_SCHEMA,
    render_report,
    render_table,
    report_payload,
    strip_generated_at,
)
from .study import (
    DepthPlan,
    StateRow,
    StudyResult,
    StudyRow,
    build_trajectories,
    convergence_study,
)

__version__ = "0.1.0"
