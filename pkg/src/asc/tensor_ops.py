"""Dense float32 kernels for the encoder forward pass and similarity probe.

Storage is float32 throughout; every reduction (matmul accumulators, dot
products, norms, row statistics) runs in float64 so that averages over
large token counts do not drift.
"""

import numpy as np

from .errors import ShapeError

# tanh-approximation coefficient, sqrt(2/pi) truncated to this exact value
# so outputs are reproducible across implementations.
GELU_COEF = 0.7978845608

# Vectors with a smaller 2-norm are treated as direction-free: cosine
# against anything is defined as 0 instead of dividing by ~0.
NORM_EPS = 1e-12


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with float64 accumulation, stored as float32."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
    return (a.astype(np.float64) @ b.astype(np.float64)).astype(np.float32)


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with per-row max subtraction for stability."""
    if x.ndim != 2:
        raise ShapeError(f"softmax_rows: expected 2-D input, got shape {x.shape}")
    shifted = x.astype(np.float64)
    shifted -= shifted.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return (expd / expd.sum(axis=1, keepdims=True)).astype(np.float32)


def layernorm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
              eps: float = 1e-12) -> np.ndarray:
    """Normalize each row to zero mean / unit population variance, then scale and shift."""
    if x.ndim != 2 or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeError(
            f"layernorm: x {x.shape} incompatible with gamma {gamma.shape}, beta {beta.shape}"
        )
    x64 = x.astype(np.float64)
    mean = x64.mean(axis=1, keepdims=True)
    var = x64.var(axis=1, keepdims=True)
    normed = (x64 - mean) / np.sqrt(var + eps)
    return (normed * gamma.astype(np.float64) + beta.astype(np.float64)).astype(np.float32)


def gelu(x: np.ndarray) -> np.ndarray:
    """Elementwise GELU, tanh approximation."""
    x64 = x.astype(np.float64)
    inner = GELU_COEF * (x64 + 0.044715 * x64 ** 3)
    return (0.5 * x64 * (1.0 + np.tanh(inner))).astype(np.float32)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped into [-1, 1].

    Returns 0.0 when either norm is below NORM_EPS, so a dead vector
    registers as maximally dissimilar instead of raising.
    """
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"cosine: incompatible shapes {u.shape} and {v.shape}")
    u64 = u.astype(np.float64)
    v64 = v.astype(np.float64)
    norm_u = np.sqrt(np.dot(u64, u64))
    norm_v = np.sqrt(np.dot(v64, v64))
    if norm_u < NORM_EPS or norm_v < NORM_EPS:
        return 0.0
    value = np.dot(u64, v64) / (norm_u * norm_v)
    return float(min(1.0, max(-1.0, value)))
