"""The feature-record wire format.

This package talks to the verification engine exclusively through files and
pipes, so the schema is spelled out here rather than imported: one JSON
object per frame with the fields below, masks as zero-first run lengths in
row-major order.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "REQUIRED_FIELDS",
    "encode_rle",
    "decode_rle",
    "make_record",
    "validate_record",
    "write_jsonl",
    "read_jsonl",
]

REQUIRED_FIELDS = ("frame", "clip", "clip_fg", "clip_bg", "lpips_feat", "hist", "mask", "props")
_ALL_FIELDS = frozenset(REQUIRED_FIELDS) | {"image_path"}


def encode_rle(dense: np.ndarray) -> list[int]:
    """Row-major run lengths, counting zeros first."""
    flat = np.asarray(dense, dtype=bool).ravel()
    runs: list[int] = []
    value = False
    n = flat.size
    i = 0
    while i < n:
        j = i
        while j < n and flat[j] == value:
            j += 1
        runs.append(j - i)
        value = not value
        i = j
    if not runs:
        runs = [0]
    return runs


def decode_rle(height: int, width: int, rle: Sequence[int]) -> np.ndarray:
    cells = np.empty(height * width, dtype=bool)
    value = False
    at = 0
    for length in rle:
        cells[at : at + length] = value
        at += length
        value = not value
    if at != height * width:
        raise ValueError(f"run lengths cover {at} cells, mask is {height}x{width}")
    return cells.reshape(height, width)


def make_record(
    frame: int,
    *,
    clip: np.ndarray,
    clip_fg: np.ndarray,
    clip_bg: np.ndarray,
    lpips_feat: np.ndarray,
    hist: np.ndarray,
    mask: np.ndarray,
    props: dict[str, float],
    image_path: str | None = None,
) -> dict:
    record = {
        "frame": int(frame),
        "clip": [float(x) for x in clip],
        "clip_fg": [float(x) for x in clip_fg],
        "clip_bg": [float(x) for x in clip_bg],
        "lpips_feat": [float(x) for x in lpips_feat],
        "hist": [float(x) for x in hist],
        "mask": {
            "h": int(mask.shape[0]),
            "w": int(mask.shape[1]),
            "rle": encode_rle(mask),
        },
        "props": {str(k): float(v) for k, v in props.items()},
    }
    if image_path is not None:
        record["image_path"] = str(image_path)
    validate_record(record)
    return record


def _require_floats(record: dict, key: str) -> None:
    values = record[key]
    if not isinstance(values, list) or not values:
        raise ValueError(f"{key!r} must be a non-empty array of numbers")
    for x in values:
        if not isinstance(x, (int, float)) or isinstance(x, bool) or not math.isfinite(x):
            raise ValueError(f"{key!r} holds a non-finite or non-numeric entry: {x!r}")


def validate_record(record: dict) -> None:
    """Raise ValueError unless `record` conforms to the frame schema."""
    if not isinstance(record, dict):
        raise ValueError(f"frame record must be an object, got {type(record).__name__}")
    missing = [k for k in REQUIRED_FIELDS if k not in record]
    if missing:
        raise ValueError(f"frame record is missing fields: {missing}")
    unknown = sorted(set(record) - _ALL_FIELDS)
    if unknown:
        raise ValueError(f"unknown frame record fields: {unknown}")
    if not isinstance(record["frame"], int) or isinstance(record["frame"], bool) or record["frame"] < 0:
        raise ValueError(f"'frame' must be a non-negative integer, got {record['frame']!r}")
    for key in ("clip", "clip_fg", "clip_bg", "lpips_feat", "hist"):
        _require_floats(record, key)
    mask = record["mask"]
    if not isinstance(mask, dict) or set(mask) != {"h", "w", "rle"}:
        raise ValueError("'mask' must be an object with exactly h, w, rle")
    h, w, rle = mask["h"], mask["w"], mask["rle"]
    if not (isinstance(h, int) and isinstance(w, int)) or h < 1 or w < 1:
        raise ValueError(f"mask dimensions must be positive integers, got {h!r}x{w!r}")
    if (
        not isinstance(rle, list)
        or not rle
        or any(not isinstance(r, int) or isinstance(r, bool) or r < 0 for r in rle)
    ):
        raise ValueError("mask 'rle' must be a non-empty array of non-negative integers")
    if sum(rle) != h * w:
        raise ValueError(f"mask run lengths sum to {sum(rle)}, expected {h * w}")
    props = record["props"]
    if not isinstance(props, dict) or not props:
        raise ValueError("'props' must be a non-empty object")
    for name, value in props.items():
        if not isinstance(name, str):
            raise ValueError(f"prop names must be strings, got {name!r}")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0.0 <= value <= 1.0:
            raise ValueError(f"prop {name!r} confidence must lie in [0, 1], got {value!r}")
    if "image_path" in record and not isinstance(record["image_path"], str):
        raise ValueError("'image_path' must be a string when present")


def write_jsonl(records: Sequence[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{Path(path).name} line {line_number}: {exc}") from exc
            validate_record(record)
            records.append(record)
    return records
