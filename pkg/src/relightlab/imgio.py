"""PNG load/save and resize helpers shared across the pipeline.

All in-memory images are float32 numpy arrays in [0, 1]: RGB images are
(H, W, 3), masks are (H, W). Files are 8-bit PNG.
"""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Quantize a [0,1] float image to uint8 with round-half-to-even."""
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(img: np.ndarray) -> np.ndarray:
    return img.astype(np.float32) / 255.0


def save_png(path: str | os.PathLike, img: np.ndarray) -> None:
    """Write a float [0,1] image (RGB or grayscale) as 8-bit PNG."""
    Image.fromarray(to_uint8(img)).save(path, format="PNG")


def load_png(path: str | os.PathLike) -> np.ndarray:
    """Read a PNG as float32 in [0,1]. RGB files give (H, W, 3), grayscale (H, W)."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16"):
            arr = np.asarray(im.convert("L"))
        else:
            arr = np.asarray(im.convert("RGB"))
    return from_uint8(arr)


def encode_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(to_uint8(img)).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes, mode: str = "RGB") -> np.ndarray:
    """Decode PNG bytes to float32 [0,1]. mode 'RGB' -> (H,W,3), 'L' -> (H,W)."""
    with Image.open(io.BytesIO(data)) as im:
        arr = np.asarray(im.convert(mode))
    return from_uint8(arr)


def resize_bilinear(img: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resize to (height, width) with bilinear interpolation.

    Accepts (H, W, 3) or (H, W) float images; returns the same kind.
    """
    h, w = size
    if img.ndim == 2:
        pil = Image.fromarray(img.astype(np.float32), mode="F")
        out = pil.resize((w, h), Image.BILINEAR)
        return np.asarray(out, dtype=np.float32)
    chans = [
        np.asarray(
            Image.fromarray(img[..., c].astype(np.float32), mode="F").resize(
                (w, h), Image.BILINEAR
            ),
            dtype=np.float32,
        )
        for c in range(img.shape[2])
    ]
    return np.clip(np.stack(chans, axis=-1), 0.0, 1.0)
