"""Media-side adapter: frame feature extraction and pixel-space interpolation.

Bridges real frames to the verification engine through its two wire
contracts — the frame-feature JSONL schema and the interpolator subprocess
protocol — without importing the engine itself.
"""

from .extract import (
    ExtractorConfig,
    ModelUnavailableError,
    extract,
    extract_features,
    load_frames,
)
from .records import (
    REQUIRED_FIELDS,
    decode_rle,
    encode_rle,
    make_record,
    read_jsonl,
    validate_record,
    write_jsonl,
)

__all__ = [
    "ExtractorConfig",
    "ModelUnavailableError",
    "extract",
    "extract_features",
    "load_frames",
    "REQUIRED_FIELDS",
    "decode_rle",
    "encode_rle",
    "make_record",
    "read_jsonl",
    "validate_record",
    "write_jsonl",
]
