"""Synthetic event-log benchmark for failure prediction pipelines."""
from .classification import SETTINGS, WindowSpec, build_dataset, settings_preset
from .config import ExperimentConfig
from .evaluation import EvalOutcome, PeriodSpec, PredictionTrace, score
from .generator import GeneratorSpec, generate, preset
from .logmodel import EventLog, ingest_csv, split_episodes, split_train_test, write_csv
from .results import ResultsTable, report
from .runner import run_experiment

__version__ = "0.1.0"

__all__ = [
    "SETTINGS", "WindowSpec", "build_dataset", "settings_preset", "ExperimentConfig",
    "EvalOutcome", "PeriodSpec", "PredictionTrace", "score", "GeneratorSpec", "generate",
    "preset", "EventLog", "ingest_csv", "split_episodes", "split_train_test", "write_csv",
    "ResultsTable", "report", "run_experiment",
]
