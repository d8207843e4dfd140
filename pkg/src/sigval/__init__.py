"""Statistical validation of discrete equity-recommendation panels."""

__version__ = "0.1.0"

from .errors import ComputationError, InputError, SigvalError
from .panel import SignalClass, SignalPanel, load_panel, save_panel
from .mc import McConfig, McResult, run_mc
from .nnls import AttributionTable, attribute_panel, lawson_hanson
from .store import EmbeddingStore, read_store, write_store
from .synth import SynthSpec, generate_synthetic_cohort

__all__ = [
    "ComputationError", "InputError", "SigvalError",
    "SignalClass", "SignalPanel", "load_panel", "save_panel",
    "McConfig", "McResult", "run_mc",
    "AttributionTable", "attribute_panel", "lawson_hanson",
    "EmbeddingStore", "read_store", "write_store",
    "SynthSpec", "generate_synthetic_cohort",
]
