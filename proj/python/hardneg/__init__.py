from ._hardneg import (
    HardnegError,
    audit_file,
    bootstrap_win_rate,
    categorize,
    dpo_loss,
    fleiss_kappa,
    neg_log_sigmoid,
    pair_stats,
    word_levenshtein,
    word_tokens,
)

__all__ = [
    "HardnegError",
    "audit_file",
    "bootstrap_win_rate",
    "categorize",
    "dpo_loss",
    "fleiss_kappa",
    "neg_log_sigmoid",
    "pair_stats",
    "word_levenshtein",
    "word_tokens",
]
