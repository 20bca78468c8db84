"""Session-based collective matrix factorization for implicit feedback.

Builds a session-based SPPMI item-item matrix from timestamped interaction
logs and factorizes it jointly with the binarized user-item matrix, next to
weighted-MF and user-history (cofactor) baselines, with a top-k ranking
evaluation harness.
"""

from .config import ExperimentConfig, load_config
from .cooc import (
    CoocCounts,
    Session,
    SppmiMatrix,
    count_session_cooc,
    count_user_cooc,
    pmi_matrix,
    read_sppmi_tsv,
    segment_sessions,
    sessions_from_log,
    sppmi_matrix,
    write_sppmi_tsv,
)
from .data import (
    Event,
    InteractionLog,
    SparseBinaryMatrix,
    SplitPair,
    Vocab,
    binarize,
    build_vocab,
    split_holdout,
)
from .errors import ConfigError, DataError
from .evaluation import (
    EvalReport,
    evaluate_model,
    map_at_k,
    ndcg_at_k,
    precision_at_k,
    recall_at_k,
    heldout_truth_sets,
    write_metrics_csv,
)
from .factorization import (
    FactorModel,
    Hyperparams,
    TrainReport,
    init_factors,
    joint_grad,
    joint_loss,
    joint_train,
    predict_score,
    recommend_topk,
    wmf_loss,
    wmf_train,
)
from .ingest import FormatSpec, parse_events, write_canonical_tsv
from .kernels import active_backend, available_backends
from .modelio import load_model, save_model
from .pipeline import run_experiment

__version__ = "0.1.0"
