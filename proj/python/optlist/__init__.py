"""Python surface for the optlist native core.

Exposes task sampling/instantiation, optimizer sampling, single-run training
curves, and the greedy list learner. The CLI (`optlist` binary) remains the
tool for full sweeps and experiment protocols.
"""

from optlist._core import (  # noqa: F401
    Batch,
    Task,
    brute_force_select,
    fixed_twod_tasks,
    greedy_select,
    log_uniform,
    normalize_curve,
    optimizer_families,
    reject_task,
    sample_optimizer,
    sample_task_config,
    task_families,
    train_and_record,
)

__all__ = [
    "Batch",
    "Task",
    "brute_force_select",
    "fixed_twod_tasks",
    "greedy_select",
    "log_uniform",
    "normalize_curve",
    "optimizer_families",
    "reject_task",
    "sample_optimizer",
    "sample_task_config",
    "task_families",
    "train_and_record",
]
