"""Loss-gated training: threshold, meta-predictor and the three-stage trainer."""

from ._core import (
    Example,
    ForwardResult,
    LossgateError,
    NaiveBayesModel,
    TargetModel,
    ThresholdState,
    TrainerConfig,
    UsageError,
    agot,
    backward,
    config_keys,
    energy_co2,
    evaluate,
    forward,
    generate_toy,
    gradient,
    hash64,
    load_dataset,
    make_label,
    parse_dataset,
    run,
    run_random_skip,
    sweep_csv,
    t_norm,
    tokenize,
    total_time,
    vectorize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
