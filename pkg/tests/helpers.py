"""Shared builders for test fixtures."""

import numpy as np

from objectalign import BinaryMask, FrameRecord


def unit(values):
    arr = np.asarray(values, dtype=float)
    return arr / np.linalg.norm(arr)


def square_mask(h=8, w=8, top=2, left=2, size=4):
    dense = np.zeros((h, w), dtype=int)
    dense[top : top + size, left : left + size] = 1
    return BinaryMask.from_dense(dense)


def empty_mask(h=8, w=8):
    return BinaryMask.from_dense(np.zeros((h, w), dtype=int))


def make_frame(index=0, **overrides):
    fields = dict(
        frame_index=index,
        clip_embedding=unit([1.0, 2.0, 3.0, 4.0]),
        fg_embedding=np.array([0.1, 0.2, 0.3, 0.4]),
        bg_embedding=np.array([-0.1, 0.0, 0.1, 0.2]),
        lpips_features=np.array([1.0, 0.5, -0.5, 0.25, 0.0]),
        histogram=np.full(8, 0.125),
        mask=square_mask(),
        prop_confidences={"subject_present": 0.9},
        image_path=None,
    )
    fields.update(overrides)
    return FrameRecord(**fields)


def constant_video(n, **overrides):
    """n identical frames (indices differ)."""
    return [make_frame(i, **overrides) for i in range(n)]
