"""Frame feature records, run-length masks, and the JSONL wire format."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "SchemaError",
    "BinaryMask",
    "FrameRecord",
    "TransitionFeatures",
    "load_video",
    "save_video",
]

HIST_SUM_TOLERANCE = 1e-6
UNIT_NORM_WARN_TOLERANCE = 1e-3

_REQUIRED_KEYS = ("frame", "clip", "clip_fg", "clip_bg", "lpips_feat", "hist", "mask", "props")
_OPTIONAL_KEYS = ("image_path",)


class SchemaError(ValueError):
    """A feature file or record violates the wire schema."""


def _context(msg: str, frame: int | None) -> str:
    if frame is None:
        return msg
    return f"frame {frame}: {msg}"


def _float_vector(values, name: str, frame: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise SchemaError(_context(f"field '{name}' must be a non-empty flat vector", frame))
    if not np.all(np.isfinite(arr)):
        raise SchemaError(_context(f"field '{name}' contains non-finite values", frame))
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BinaryMask:
    """Binary mask as row-major run lengths, alternating values starting with zeros.

    The first run counts zeros, so a mask that starts with ones begins with a
    zero-length run. Run lengths must sum to height * width.
    """

    height: int
    width: int
    rle: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "rle", tuple(int(r) for r in self.rle))
        if self.height < 0 or self.width < 0:
            raise SchemaError("mask dimensions must be non-negative")
        if any(r < 0 for r in self.rle):
            raise SchemaError("mask run lengths must be non-negative")
        total = sum(self.rle)
        if total != self.height * self.width:
            raise SchemaError(
                f"mask run lengths sum to {total}, expected {self.height * self.width}"
            )

    @classmethod
    def from_dense(cls, dense) -> "BinaryMask":
        """Encode a 2-D 0/1 array into run-length form."""
        arr = np.asarray(dense)
        if arr.ndim != 2:
            raise SchemaError("dense mask must be 2-D")
        flat = arr.reshape(-1)
        if flat.size and not np.isin(flat, (0, 1)).all():
            raise SchemaError("dense mask must be 0/1 valued")
        runs: list[int] = []
        value = 0
        pos = 0
        flat = flat.astype(np.int64)
        while pos < flat.size:
            run_end = pos
            while run_end < flat.size and flat[run_end] == value:
                run_end += 1
            runs.append(run_end - pos)
            pos = run_end
            value = 1 - value
        if not runs:
            runs = [0]
        return cls(int(arr.shape[0]), int(arr.shape[1]), tuple(runs))

    def decode(self) -> np.ndarray:
        """Expand to a dense {0,1} matrix of shape (height, width)."""
        values = np.arange(len(self.rle)) % 2
        flat = np.repeat(values, self.rle)
        return flat.reshape(self.height, self.width).astype(np.uint8)

    def area(self) -> int:
        """Number of one-valued cells."""
        return int(sum(self.rle[1::2]))

    def runs(self) -> Iterable[tuple[int, int]]:
        """Yield (length, value) pairs, skipping zero-length runs."""
        value = 0
        for length in self.rle:
            if length:
                yield length, value
            value = 1 - value

    def to_json_dict(self) -> dict:
        return {"h": self.height, "w": self.width, "rle": list(self.rle)}

    @classmethod
    def from_json_dict(cls, obj, frame: int | None = None) -> "BinaryMask":
        if not isinstance(obj, dict) or set(obj) != {"h", "w", "rle"}:
            raise SchemaError(_context("field 'mask' must be {h, w, rle}", frame))
        try:
            return cls(int(obj["h"]), int(obj["w"]), tuple(obj["rle"]))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise SchemaError(_context(str(exc), frame)) from None
            raise SchemaError(_context("field 'mask' is malformed", frame)) from exc


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """All per-frame features consumed by the verification engine.

    Vectors are stored as read-only numpy arrays and treated as immutable.
    """

    frame_index: int
    clip_embedding: np.ndarray
    fg_embedding: np.ndarray
    bg_embedding: np.ndarray
    lpips_features: np.ndarray
    histogram: np.ndarray
    mask: BinaryMask
    prop_confidences: Mapping[str, float] = field(default_factory=dict)
    image_path: str | None = None

    def __post_init__(self):
        if int(self.frame_index) != self.frame_index or self.frame_index < 0:
            raise SchemaError(f"frame_index must be a non-negative integer, got {self.frame_index!r}")
        object.__setattr__(self, "frame_index", int(self.frame_index))
        fi = self.frame_index
        object.__setattr__(self, "clip_embedding", _float_vector(self.clip_embedding, "clip", fi))
        object.__setattr__(self, "fg_embedding", _float_vector(self.fg_embedding, "clip_fg", fi))
        object.__setattr__(self, "bg_embedding", _float_vector(self.bg_embedding, "clip_bg", fi))
        object.__setattr__(self, "lpips_features", _float_vector(self.lpips_features, "lpips_feat", fi))
        hist = _float_vector(self.histogram, "hist", fi)
        if np.any(hist < 0):
            raise SchemaError(_context("field 'hist' has negative entries", fi))
        if abs(float(hist.sum()) - 1.0) > HIST_SUM_TOLERANCE:
            raise SchemaError(
                _context(f"field 'hist' sums to {float(hist.sum())!r}, expected 1 within {HIST_SUM_TOLERANCE}", fi)
            )
        object.__setattr__(self, "histogram", hist)
        if not isinstance(self.mask, BinaryMask):
            raise SchemaError(_context("field 'mask' must be a BinaryMask", fi))
        props = dict(sorted(self.prop_confidences.items()))
        for name, conf in props.items():
            if not isinstance(name, str) or not name:
                raise SchemaError(_context("prop names must be non-empty strings", fi))
            conf = float(conf)
            if not np.isfinite(conf) or conf < 0.0 or conf > 1.0:
                raise SchemaError(_context(f"prop '{name}' confidence {conf!r} outside [0, 1]", fi))
            props[name] = conf
        object.__setattr__(self, "prop_confidences", MappingProxyType(props))
        if self.image_path is not None and not isinstance(self.image_path, str):
            raise SchemaError(_context("field 'image_path' must be a string or null", fi))

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameRecord):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and np.array_equal(self.clip_embedding, other.clip_embedding)
            and np.array_equal(self.fg_embedding, other.fg_embedding)
            and np.array_equal(self.bg_embedding, other.bg_embedding)
            and np.array_equal(self.lpips_features, other.lpips_features)
            and np.array_equal(self.histogram, other.histogram)
            and self.mask == other.mask
            and dict(self.prop_confidences) == dict(other.prop_confidences)
            and self.image_path == other.image_path
        )

    def with_frame_index(self, frame_index: int) -> "FrameRecord":
        return replace(self, frame_index=frame_index)

    def replace_features(self, **changes) -> "FrameRecord":
        """Copy with some feature fields swapped out; the index stays put."""
        if "frame_index" in changes:
            raise ValueError("use with_frame_index to renumber a frame")
        return replace(self, **changes)

    def to_json_dict(self) -> dict:
        obj = {
            "frame": self.frame_index,
            "clip": [float(x) for x in self.clip_embedding],
            "clip_fg": [float(x) for x in self.fg_embedding],
            "clip_bg": [float(x) for x in self.bg_embedding],
            "lpips_feat": [float(x) for x in self.lpips_features],
            "hist": [float(x) for x in self.histogram],
            "mask": self.mask.to_json_dict(),
            "props": {k: float(v) for k, v in self.prop_confidences.items()},
        }
        if self.image_path is not None:
            obj["image_path"] = self.image_path
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict, line: int | None = None) -> "FrameRecord":
        keys = set(obj)
        missing = [k for k in _REQUIRED_KEYS if k not in keys]
        unknown = sorted(keys - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS))
        where = "record" if line is None else f"line {line}"
        if missing:
            raise SchemaError(f"{where}: missing required fields {missing}")
        if unknown:
            raise SchemaError(f"{where}: unknown fields {unknown}")
        frame = obj["frame"]
        if not isinstance(frame, int) or isinstance(frame, bool):
            raise SchemaError(f"{where}: field 'frame' must be an integer")
        props = obj["props"]
        if not isinstance(props, dict):
            raise SchemaError(f"frame {frame}: field 'props' must be an object")
        return cls(
            frame_index=frame,
            clip_embedding=obj["clip"],
            fg_embedding=obj["clip_fg"],
            bg_embedding=obj["clip_bg"],
            lpips_features=obj["lpips_feat"],
            histogram=obj["hist"],
            mask=BinaryMask.from_json_dict(obj["mask"], frame),
            prop_confidences=props,
            image_path=obj.get("image_path"),
        )


@dataclass(frozen=True)
class TransitionFeatures:
    """The four per-transition consistency measurements.

    ``s_lpips_inverted`` is derived as ``-d_lpips`` so that every metric shares
    the same orientation (larger means more consistent).
    """

    s_cos: float
    s_hist: float
    s_iou: float
    d_lpips: float

    def __post_init__(self):
        for name in ("s_cos", "s_hist", "s_iou", "d_lpips"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not -1.0 <= self.s_cos <= 1.0:
            raise ValueError(f"s_cos {self.s_cos!r} outside [-1, 1]")
        if not -1.0 <= self.s_hist <= 1.0:
            raise ValueError(f"s_hist {self.s_hist!r} outside [-1, 1]")
        if not 0.0 <= self.s_iou <= 1.0:
            raise ValueError(f"s_iou {self.s_iou!r} outside [0, 1]")
        if self.d_lpips < 0.0:
            raise ValueError(f"d_lpips {self.d_lpips!r} must be >= 0")

    @property
    def s_lpips_inverted(self) -> float:
        return -self.d_lpips

    def as_vector(self) -> np.ndarray:
        """Metric values in canonical order: cos, hist, iou, inverted lpips."""
        return np.array([self.s_cos, self.s_hist, self.s_iou, -self.d_lpips], dtype=float)


def load_video(path) -> list[FrameRecord]:
    """Read a feature JSONL file and validate it as one coherent video.

    Records are sorted by frame index, which must cover 0..T-1 with no
    duplicates or gaps. Vector lengths, mask dimensions, and prop name sets
    must agree across frames. A clip embedding whose norm deviates from 1 by
    more than 1e-3 triggers a warning but not an error.
    """
    records: list[FrameRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                raise SchemaError(f"line {lineno}: blank line in feature file")
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"line {lineno}: expected a JSON object")
            records.append(FrameRecord.from_json_dict(obj, line=lineno))
    if not records:
        raise SchemaError(f"{path}: no frame records found")

    records.sort(key=lambda rec: rec.frame_index)
    seen: set[int] = set()
    for rec in records:
        if rec.frame_index in seen:
            raise SchemaError(f"duplicate frame {rec.frame_index}")
        seen.add(rec.frame_index)
    for expected, rec in enumerate(records):
        if rec.frame_index != expected:
            raise SchemaError(f"missing frame {expected}")

    first = records[0]
    shapes = {
        "clip": first.clip_embedding.size,
        "clip_fg": first.fg_embedding.size,
        "clip_bg": first.bg_embedding.size,
        "lpips_feat": first.lpips_features.size,
        "hist": first.histogram.size,
    }
    mask_dims = (first.mask.height, first.mask.width)
    prop_names = set(first.prop_confidences)
    for rec in records[1:]:
        sizes = {
            "clip": rec.clip_embedding.size,
            "clip_fg": rec.fg_embedding.size,
            "clip_bg": rec.bg_embedding.size,
            "lpips_feat": rec.lpips_features.size,
            "hist": rec.histogram.size,
        }
        for name, size in sizes.items():
            if size != shapes[name]:
                raise SchemaError(
                    f"frame {rec.frame_index}: field '{name}' length {size} differs from frame 0 length {shapes[name]}"
                )
        if (rec.mask.height, rec.mask.width) != mask_dims:
            raise SchemaError(
                f"frame {rec.frame_index}: mask dimensions {(rec.mask.height, rec.mask.width)} differ from frame 0 {mask_dims}"
            )
        if set(rec.prop_confidences) != prop_names:
            raise SchemaError(
                f"frame {rec.frame_index}: prop names {sorted(rec.prop_confidences)} differ from frame 0 {sorted(prop_names)}"
            )

    off_unit = [
        rec.frame_index
        for rec in records
        if abs(float(np.linalg.norm(rec.clip_embedding)) - 1.0) > UNIT_NORM_WARN_TOLERANCE
    ]
    if off_unit:
        warnings.warn(
            f"clip embedding norm deviates from 1 by more than {UNIT_NORM_WARN_TOLERANCE} "
            f"on {len(off_unit)} frame(s), first at frame {off_unit[0]}",
            stacklevel=2,
        )
    return records


def save_video(records: Sequence[FrameRecord], path) -> None:
    """Write records as one compact JSON object per line, in frame order."""
    ordered = sorted(records, key=lambda rec: rec.frame_index)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in ordered:
            fh.write(json.dumps(rec.to_json_dict(), separators=(",", ":")))
            fh.write("\n")
