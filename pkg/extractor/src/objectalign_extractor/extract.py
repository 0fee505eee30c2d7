"""Feature extraction from real frames.

The "mock" model produces deterministic pseudo-features by seeding a
generator from a hash of the pixel content, so the whole cross-process
pipeline is testable with no model weights and no network. Color histograms,
foreground masks, and the proposition confidence are computed from the
actual pixels either way. Named neural backends (clip/lpips/sam variants)
are accepted as configuration but require weights this adapter does not
ship, so selecting one raises.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageSequence, UnidentifiedImageError

from .records import make_record, write_jsonl

__all__ = ["ExtractorConfig", "ModelUnavailableError", "extract", "extract_features", "load_frames", "main"]

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp")


class ModelUnavailableError(RuntimeError):
    """A named neural backend was requested but no weights are bundled."""


@dataclass(frozen=True)
class ExtractorConfig:
    """Where to read frames, which extractor to run, and feature shapes."""

    source: str
    out: str
    model: str = "mock"
    bins: str = "3x16"
    clip_dim: int = 32
    region_dim: int = 16
    lpips_dim: int = 24
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        channels, bins = _parse_bins(self.bins)
        object.__setattr__(self, "_channels", channels)
        object.__setattr__(self, "_bins_per_channel", bins)
        for name in ("clip_dim", "region_dim", "lpips_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def channels(self) -> int:
        return self._channels

    @property
    def bins_per_channel(self) -> int:
        return self._bins_per_channel


def _parse_bins(spec: str) -> tuple[int, int]:
    parts = spec.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"bin spec must look like '3x16' (channels x bins), got {spec!r}")
    try:
        channels, bins = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"bin spec must look like '3x16' (channels x bins), got {spec!r}") from None
    if channels not in (1, 3):
        raise ValueError(f"histogram channels must be 1 (luminance) or 3 (RGB), got {channels}")
    if bins < 1 or 256 % bins != 0:
        raise ValueError(f"bins per channel must divide 256, got {bins}")
    return channels, bins


def load_frames(source) -> list[tuple[str, np.ndarray]]:
    """(name, HxWx3 uint8) pairs from an image directory or a multi-frame file."""
    path = Path(source)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not files:
            raise ValueError(f"no image files found under {path}")
        return [(str(p), _read_image(p)) for p in files]
    if path.is_file():
        try:
            with Image.open(path) as im:
                frames = [
                    (f"{path}#{i}", np.asarray(page.convert("RGB"), dtype=np.uint8))
                    for i, page in enumerate(ImageSequence.Iterator(im))
                ]
        except UnidentifiedImageError as exc:
            raise ValueError(f"{path} is not a readable image or clip: {exc}") from exc
        return frames
    raise ValueError(f"input {path} does not exist")


def _read_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ValueError(f"unreadable frame {path}: {exc}") from exc


def _hash_rng(seed: int, salt: str, payload: bytes) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{salt}:".encode() + payload).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def _luminance(pixels: np.ndarray) -> np.ndarray:
    r, g, b = pixels[..., 0], pixels[..., 1], pixels[..., 2]
    return 0.299 * r + 0.587 * g + 0.114 * b


def subject_mask(pixels: np.ndarray) -> np.ndarray:
    """Mock segmentation: pixels brighter than the frame's median luminance."""
    luma = _luminance(pixels.astype(np.float64))
    return luma > np.median(luma)


def channel_histogram(pixels: np.ndarray, channels: int, bins: int) -> np.ndarray:
    """Concatenated per-channel intensity histogram, L1-normalized overall."""
    width = 256 // bins
    if channels == 1:
        data = np.clip(np.rint(_luminance(pixels.astype(np.float64))), 0, 255).astype(np.uint8)
        planes = [data]
    else:
        planes = [pixels[..., c] for c in range(3)]
    counts = np.concatenate(
        [np.bincount((plane.ravel() // width), minlength=bins)[:bins] for plane in planes]
    ).astype(np.float64)
    return counts / counts.sum()


def extract_features(pixels: np.ndarray, frame_index: int, cfg: ExtractorConfig, image_path=None) -> dict:
    """One schema-conforming record from one RGB frame."""
    mask = subject_mask(pixels)

    clip_rng = _hash_rng(cfg.seed, "clip", pixels.tobytes())
    clip = clip_rng.normal(size=cfg.clip_dim)
    clip /= np.linalg.norm(clip)

    fg_pixels = pixels.copy()
    fg_pixels[~mask] = 0
    bg_pixels = pixels.copy()
    bg_pixels[mask] = 0
    clip_fg = 0.25 * _hash_rng(cfg.seed, "fg", fg_pixels.tobytes()).normal(size=cfg.region_dim)
    clip_bg = 0.25 * _hash_rng(cfg.seed, "bg", bg_pixels.tobytes()).normal(size=cfg.region_dim)

    lpips_feat = 0.5 * _hash_rng(cfg.seed, "lpips", pixels.tobytes()).normal(size=cfg.lpips_dim)
    hist = channel_histogram(pixels, cfg.channels, cfg.bins_per_channel)
    props = {"subject_present": float(mask.mean())}

    return make_record(
        frame_index,
        clip=clip,
        clip_fg=clip_fg,
        clip_bg=clip_bg,
        lpips_feat=lpips_feat,
        hist=hist,
        mask=mask,
        props=props,
        image_path=image_path,
    )


def extract(cfg: ExtractorConfig) -> list[dict]:
    """Extract every frame of cfg.source and write cfg.out; returns the records."""
    if cfg.model != "mock":
        raise ModelUnavailableError(
            f"model {cfg.model!r} needs pretrained weights this adapter does not bundle; "
            "only 'mock' runs self-contained"
        )
    frames = load_frames(cfg.source)
    records = [
        extract_features(pixels, index, cfg, image_path=name)
        for index, (name, pixels) in enumerate(frames)
    ]
    write_jsonl(records, cfg.out)
    return records


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="objectalign-extract",
        description="Extract a frame-feature JSONL stream from images.",
    )
    parser.add_argument("--input", required=True, help="image directory or multi-frame image file")
    parser.add_argument("--out", required=True, help="output JSONL path")
    parser.add_argument("--model", default="mock", help="mock (default) or a neural backend name")
    parser.add_argument("--bins", default="3x16", help="histogram spec, channels x bins (default 3x16)")
    parser.add_argument("--seed", type=int, default=0, help="seed for mock pseudo-features")
    parser.add_argument("--device", default="cpu", help="device hint for neural backends")
    args = parser.parse_args(argv)
    try:
        cfg = ExtractorConfig(
            source=args.input,
            out=args.out,
            model=args.model,
            bins=args.bins,
            seed=args.seed,
            device=args.device,
        )
        records = extract(cfg)
    except (ValueError, ModelUnavailableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"extracted {len(records)} frames -> {args.out}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
