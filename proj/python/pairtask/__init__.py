"""Python bindings for the pairwise multi-task classifier."""
import json
import os
from pathlib import Path

_packaged_data = Path(__file__).with_name("data")
if _packaged_data.is_dir():
    os.environ.setdefault("PAIRTASK_DATA_DIR", str(_packaged_data))

from . import _core  # noqa: E402
from ._core import (  # noqa: E402
    ConfigError,
    DataError,
    Error,
    Registry,
    TrainingError,
    confusion_matrix,
    default_registry_path,
    macro_f1,
    normalize_text,
    per_class_f1,
    sample_negative,
    select_threshold,
    upsample_factors,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "Predictor",
    "Registry",
    "TrainingError",
    "cli",
    "confusion_matrix",
    "default_registry_path",
    "load_registry",
    "macro_f1",
    "normalize_text",
    "per_class_f1",
    "run_pipeline",
    "sample_negative",
    "select_threshold",
    "upsample_factors",
    "write_synthetic_corpus",
]


def load_registry(path=None):
    return Registry.load(str(path) if path else _core.default_registry_path())


def write_synthetic_corpus(out_dir, **spec):
    """Writes registry.json and records.jsonl; returns the record count."""
    return _core.write_synthetic_corpus(json.dumps(spec), str(out_dir))


def run_pipeline(config, seeds=None, output_dir=None):
    """Trains and evaluates every seed of a run config; returns a summary dict."""
    return json.loads(_core.run_pipeline(str(config), seeds, str(output_dir) if output_dir else None))


class Predictor:
    def __init__(self, checkpoint_dir):
        self._impl = _core.Predictor(str(checkpoint_dir))

    @property
    def tasks(self):
        return self._impl.tasks()

    @property
    def thresholds(self):
        return self._impl.thresholds()

    def predict(self, text, task, threshold=None):
        return json.loads(self._impl.predict(text, task, threshold))


def cli(*args):
    """Runs a pairtask subcommand in-process; returns (exit code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
