"""Temporal knowledge-edit benchmark construction and evaluation."""

from ._editbench import (
    ConfigError,
    EditbenchError,
    IngestError,
    IntegrityError,
    Memory,
    SchemaError,
    diff,
    filter_triplets,
    judge_answer,
    load_timestep,
    mhop_tuples,
    normalize,
    run_pipeline,
    validate_qa,
    write_fixture,
)

__all__ = [
    "ConfigError",
    "EditbenchError",
    "IngestError",
    "IntegrityError",
    "Memory",
    "SchemaError",
    "diff",
    "filter_triplets",
    "judge_answer",
    "load_timestep",
    "mhop_tuples",
    "normalize",
    "run_pipeline",
    "validate_qa",
    "write_fixture",
]
