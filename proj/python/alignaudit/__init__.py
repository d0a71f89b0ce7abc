"""Cross-cultural value alignment audits."""

from ._alignaudit import (
    DATA_DIR,
    AlignAuditError,
    cohens_kappa,
    emd_ordinal,
    jensen_shannon,
    kl_divergence,
    relative_gain,
    relative_gain_cell,
    run_command,
    train_and_evaluate,
    two_sample_t,
    verify_report,
    wilcoxon_signed_rank,
)

__all__ = [
    "DATA_DIR",
    "AlignAuditError",
    "cohens_kappa",
    "emd_ordinal",
    "jensen_shannon",
    "kl_divergence",
    "relative_gain",
    "relative_gain_cell",
    "run_command",
    "train_and_evaluate",
    "two_sample_t",
    "verify_report",
    "wilcoxon_signed_rank",
]
