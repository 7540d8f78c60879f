"""Per-dimension 8-bit scalar quantization of embedding vectors.

Each dimension is mapped affinely onto the 256 signed int8 codes. The
range is fitted from a sample of indexed vectors, clipped at a symmetric
quantile to shrug off outliers: offset = clipped min, scale =
(clipped max - clipped min) / 255. A degenerate dimension (max == min)
gets the smallest positive normal float as scale, so all its codes are
equal and round-trip exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TINY = float(np.finfo(np.float32).tiny)


@dataclass(frozen=True)
class QuantizationParams:
    offset: np.ndarray  # float32, per dimension
    scale: np.ndarray  # float32, per dimension, > 0
    clip_quantile: float = 0.99

    def __post_init__(self) -> None:
        if self.offset.shape != self.scale.shape:
            raise ValueError("offset/scale shape mismatch")
        if not (0.5 < self.clip_quantile <= 1.0):
            raise ValueError("clip_quantile must be in (0.5, 1]")
        if np.any(self.scale <= 0):
            raise ValueError("scale must be positive")

    @property
    def dim(self) -> int:
        return int(self.offset.shape[0])


def fit_quantization(sample: np.ndarray, clip_quantile: float = 0.99) -> QuantizationParams:
    """Fit per-dimension affine params from a (n, dim) sample of vectors."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim != 2 or sample.shape[0] < 1:
        raise ValueError("sample must be a non-empty (n, dim) array")
    if not (0.5 < clip_quantile <= 1.0):
        raise ValueError("clip_quantile must be in (0.5, 1]")
    hi = np.quantile(sample, clip_quantile, axis=0)
    lo = np.quantile(sample, 1.0 - clip_quantile, axis=0)
    scale = (hi - lo) / 255.0
    scale = np.where(scale > 0.0, scale, _TINY)
    return QuantizationParams(
        offset=lo.astype(np.float32),
        scale=scale.astype(np.float32),
        clip_quantile=clip_quantile,
    )


def quantize(vectors: np.ndarray, params: QuantizationParams) -> np.ndarray:
    """Map float vectors to int8 codes. Accepts (dim,) or (n, dim)."""
    v = np.asarray(vectors, dtype=np.float32)
    hi = params.offset + params.scale * 255.0
    clipped = np.clip(v, params.offset, hi)
    steps = np.rint((clipped - params.offset) / params.scale)
    steps = np.clip(steps, 0.0, 255.0)
    return (steps - 128.0).astype(np.int8)


def dequantize(codes: np.ndarray, params: QuantizationParams) -> np.ndarray:
    """Reconstruct float32 vectors from int8 codes."""
    steps = codes.astype(np.float32) + 128.0
    return steps * params.scale + params.offset
