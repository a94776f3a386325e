"""Checkpoint interop: framework state_dicts -> MFDW, plus golden fixtures."""

from .convert import ConversionError, ConversionReport, convert, convert_state
from .fixtures import FixtureError, emit_fixtures, read_tensor, write_tensor
from .namemap import (
    NameMapError,
    canonical_manifest,
    default_namemap,
    load_namemap,
    save_namemap,
    validate_namemap,
)
from .reference import ReferenceModel, build_seeded_model, seeded_state

__version__ = "0.1.0"

__all__ = [
    "ConversionError",
    "ConversionReport",
    "FixtureError",
    "NameMapError",
    "ReferenceModel",
    "build_seeded_model",
    "canonical_manifest",
    "convert",
    "convert_state",
    "default_namemap",
    "emit_fixtures",
    "load_namemap",
    "read_tensor",
    "save_namemap",
    "seeded_state",
    "validate_namemap",
    "write_tensor",
]
