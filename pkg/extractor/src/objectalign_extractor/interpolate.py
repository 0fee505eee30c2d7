"""Interpolation server: one JSON request on stdin, one response on stdout.

Request: {"anchor_prev": <record>, "anchor_next": <record>, "count": k,
"depth": g}. When both anchors carry an image_path the server works in pixel
space: g rounds of recursive midpoint averaging between the two anchor
images yield 2^g - 1 candidates, of which the k frames at positions
ceil(m * 2^g / (k+1)) (m = 1..k) are kept, written out as PNGs, and
re-extracted into feature records. Without images it falls back to the same
feature-space blending the engine's built-in interpolator uses. Any invalid
request or unreadable image exits nonzero with a message on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .extract import ExtractorConfig, _read_image, extract_features
from .records import validate_record

__all__ = ["serve", "main"]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def _parse_request(raw: str) -> tuple[dict, dict, int, int]:
    try:
        request = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"request is not valid JSON: {exc}") from exc
    _require(isinstance(request, dict), "request must be a JSON object")
    missing = [k for k in ("anchor_prev", "anchor_next", "count", "depth") if k not in request]
    _require(not missing, f"request is missing fields: {missing}")
    prev, nxt = request["anchor_prev"], request["anchor_next"]
    validate_record(prev)
    validate_record(nxt)
    count, depth = request["count"], request["depth"]
    _require(isinstance(count, int) and not isinstance(count, bool) and count >= 1,
             f"'count' must be a positive integer, got {count!r}")
    _require(isinstance(depth, int) and not isinstance(depth, bool) and depth >= 1,
             f"'depth' must be a positive integer, got {depth!r}")
    _require(count <= 2 ** depth - 1,
             f"depth {depth} yields at most {2 ** depth - 1} frames, {count} requested")
    for key in ("clip", "clip_fg", "clip_bg", "lpips_feat", "hist"):
        _require(len(prev[key]) == len(nxt[key]), f"anchors disagree on {key!r} length")
    _require(set(prev["props"]) == set(nxt["props"]), "anchors disagree on proposition names")
    return prev, nxt, count, depth


def _kept_positions(count: int, depth: int) -> list[int]:
    """1-based positions (of 2^depth - 1 candidates) kept for k outputs."""
    total = 2 ** depth
    return [math.ceil(m * total / (count + 1)) for m in range(1, count + 1)]


def _midpoint_tower(a: np.ndarray, b: np.ndarray, depth: int) -> list[np.ndarray]:
    """All 2^depth - 1 intermediates of recursive midpoint averaging."""
    sequence = [a.astype(np.float64), b.astype(np.float64)]
    for _ in range(depth):
        refined = [sequence[0]]
        for left, right in zip(sequence, sequence[1:]):
            refined.append((left + right) / 2.0)
            refined.append(right)
        sequence = refined
    return sequence[1:-1]


def _pixel_frames(prev: dict, nxt: dict, count: int, depth: int, args) -> list[dict]:
    image_a = _read_image(Path(prev["image_path"]))
    image_b = _read_image(Path(nxt["image_path"]))
    _require(
        image_a.shape == image_b.shape,
        f"anchor images differ in shape: {image_a.shape} vs {image_b.shape}",
    )
    out_dir = Path(args.frames_out) if args.frames_out else Path(prev["image_path"]).parent
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg = ExtractorConfig(
        source=".",
        out=".",
        bins=args.bins,
        clip_dim=len(prev["clip"]),
        region_dim=len(prev["clip_fg"]),
        lpips_dim=len(prev["lpips_feat"]),
        seed=args.seed,
    )
    expected_bins = cfg.channels * cfg.bins_per_channel
    _require(
        len(prev["hist"]) == expected_bins,
        f"anchor histogram has {len(prev['hist'])} bins, --bins {args.bins} implies {expected_bins}",
    )

    candidates = _midpoint_tower(image_a, image_b, depth)
    records = []
    for j, position in enumerate(_kept_positions(count, depth)):
        pixels = np.rint(candidates[position - 1]).astype(np.uint8)
        index = prev["frame"] + 1 + j
        path = out_dir / f"repair_{index:05d}.png"
        Image.fromarray(pixels).save(path)
        records.append(extract_features(pixels, index, cfg, image_path=str(path)))
    return records


def _blend(a, b, t):
    return [(1.0 - t) * x + t * y for x, y in zip(a, b)]


def _feature_frames(prev: dict, nxt: dict, count: int) -> list[dict]:
    records = []
    for j in range(count):
        t = (j + 1) / (count + 1)
        clip = np.array(_blend(prev["clip"], nxt["clip"], t))
        norm = np.linalg.norm(clip)
        _require(
            norm > 1e-12,
            f"blending frames {prev['frame']} and {nxt['frame']} at t={t:g} "
            "gives a zero-norm clip embedding",
        )
        hist = np.array(_blend(prev["hist"], nxt["hist"], t))
        total = hist.sum()
        _require(total > 0.0, "blended histogram has zero mass")
        source = prev if t <= 0.5 else nxt
        records.append(
            {
                "frame": prev["frame"] + 1 + j,
                "clip": [float(x) for x in clip / norm],
                "clip_fg": _blend(prev["clip_fg"], nxt["clip_fg"], t),
                "clip_bg": _blend(prev["clip_bg"], nxt["clip_bg"], t),
                "lpips_feat": _blend(prev["lpips_feat"], nxt["lpips_feat"], t),
                "hist": [float(x) for x in hist / total],
                "mask": json.loads(json.dumps(source["mask"])),
                "props": {
                    name: (1.0 - t) * prev["props"][name] + t * nxt["props"][name]
                    for name in prev["props"]
                },
            }
        )
    return records


def serve(raw_request: str, args) -> str:
    prev, nxt, count, depth = _parse_request(raw_request)
    pixel_mode = bool(prev.get("image_path")) and bool(nxt.get("image_path"))
    if pixel_mode:
        frames = _pixel_frames(prev, nxt, count, depth, args)
    else:
        frames = _feature_frames(prev, nxt, count)
    for frame in frames:
        validate_record(frame)
    return json.dumps({"frames": frames})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="objectalign-interpolate",
        description="Serve one frame-interpolation request (stdin -> stdout).",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for mock feature re-extraction")
    parser.add_argument("--bins", default="3x16", help="histogram spec for re-extraction (default 3x16)")
    parser.add_argument("--frames-out", default=None,
                        help="directory for synthesized frames (default: beside anchor_prev)")
    args = parser.parse_args(argv)
    try:
        response = serve(sys.stdin.read(), args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(response)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
