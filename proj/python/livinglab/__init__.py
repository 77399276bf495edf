"""Python access to the living-lab evaluation core."""

from ._core import (
    DomainError,
    ctr,
    default_weights,
    evaluate,
    judge,
    nreward,
    outcome,
    parse_run,
    read_run,
    reward,
    spearman,
    team_draft_interleave,
    wilcoxon,
)

__all__ = [
    "DomainError",
    "ctr",
    "default_weights",
    "evaluate",
    "judge",
    "nreward",
    "outcome",
    "parse_run",
    "read_run",
    "reward",
    "spearman",
    "team_draft_interleave",
    "wilcoxon",
]
