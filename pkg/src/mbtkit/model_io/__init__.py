"""Model front ends (GraphML subset, textual DSL), flattening, validation and label inventory."""

from .bundle import ModelBundle, flatten, load_bundle, load_model
from .dsl import parse_dsl
from .graphml import parse_graphml, parse_graphml_models
from .inventory import (
    Finding,
    LabelInventory,
    ValidationReport,
    extract_labels,
    model_hash,
    reachable,
    validate,
)

__all__ = [
    "Finding", "LabelInventory", "ModelBundle", "ValidationReport", "extract_labels", "flatten",
    "load_bundle", "load_model", "model_hash", "parse_dsl", "parse_graphml",
    "parse_graphml_models", "reachable", "validate",
]
