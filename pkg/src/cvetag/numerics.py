"""Numeric kernels shared by the taggers.

All arrays are 64-bit numpy arrays. Randomness goes through PCG64
(``numpy.random.Generator``) so that every seeded run reproduces
bit-for-bit across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_LEARNING_RATE = 0.01
DEFAULT_CLIP_THRESHOLD = 5.0
DEFAULT_EMBEDDING_DIM = 100
DEFAULT_HIDDEN_SIZE = 100
DEFAULT_DROPOUT = 0.5


def default_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the single RNG family used everywhere."""
    return np.random.Generator(np.random.PCG64(seed))


def log_sum_exp(a, axis=None):
    """ln(sum(exp(a))) with the max subtracted first so huge inputs never overflow.

    With ``axis=None`` reduces the whole array to a scalar; otherwise reduces
    along the given axis.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        raise ValueError("log_sum_exp of an empty array")
    if axis is None:
        m = np.max(a)
        return float(m + np.log(np.sum(np.exp(a - m))))
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def sigmoid(x):
    """Elementwise logistic function, stable on both tails."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def tanh(x):
    """Elementwise hyperbolic tangent."""
    out = np.tanh(np.asarray(x, dtype=np.float64))
    if out.ndim == 0:
        return float(out)
    return out


def init_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform init in [-r, r] with r = sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ValueError("init_matrix needs rows, cols >= 1")
    r = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-r, r, size=(rows, cols))


def global_grad_norm(grads) -> float:
    """L2 norm over the concatenation of every gradient array."""
    total = 0.0
    for g in grads:
        total += float(np.sum(np.asarray(g) ** 2))
    return float(np.sqrt(total))


@dataclass(frozen=True)
class ClippedSgd:
    """Plain SGD with a global gradient-norm cap applied before the update."""

    learning_rate: float = DEFAULT_LEARNING_RATE
    clip_threshold: float = DEFAULT_CLIP_THRESHOLD

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.clip_threshold <= 0:
            raise ValueError("clip_threshold must be positive")

    def step(self, params, grads) -> float:
        """Update ``params`` in place from ``grads``; returns the pre-clip norm.

        ``params`` and ``grads`` are parallel sequences of arrays with
        matching shapes. If the global L2 norm of the gradients exceeds
        ``clip_threshold`` they are all rescaled by ``clip_threshold / norm``.
        """
        params = list(params)
        grads = list(grads)
        if len(params) != len(grads):
            raise ValueError("params and grads differ in length")
        for p, g in zip(params, grads):
            if np.shape(p) != np.shape(g):
                raise ValueError(f"shape mismatch: {np.shape(p)} vs {np.shape(g)}")
        norm = global_grad_norm(grads)
        scale = self.learning_rate
        if norm > self.clip_threshold:
            scale *= self.clip_threshold / norm
        for p, g in zip(params, grads):
            p -= scale * np.asarray(g)
        return norm


def clipped_sgd_step(params, grads, state: ClippedSgd) -> float:
    """Function form of :meth:`ClippedSgd.step`."""
    return state.step(params, grads)


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)


@dataclass
class GradCheckEntry:
    """Worst finite-difference discrepancy for one parameter block."""

    name: str
    max_rel_error: float
    worst_index: tuple
    passed: bool


@dataclass
class GradCheckReport:
    entries: list

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def max_rel_error(self) -> float:
        return max(e.max_rel_error for e in self.entries)


def finite_diff_check(loss_fn, params, analytic, epsilon: float = 1e-5,
                      tolerance: float = 1e-6) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``params`` maps block names to arrays that ``loss_fn`` reads by
    reference: each element is perturbed in place by +/- ``epsilon``,
    ``loss_fn()`` re-evaluated, and the original value restored.
    ``analytic`` maps the same names to the hand-derived gradients.
    The relative error is |a - n| / max(|a|, |n|, 1e-8).
    """
    entries = []
    for name, p in params.items():
        a = np.asarray(analytic[name], dtype=np.float64)
        p = np.asarray(p)
        if a.shape != p.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        worst = 0.0
        worst_idx = ()
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + epsilon
            up = loss_fn()
            p[idx] = orig - epsilon
            down = loss_fn()
            p[idx] = orig
            numeric = (up - down) / (2.0 * epsilon)
            err = relative_error(float(a[idx]), numeric)
            if err > worst:
                worst, worst_idx = err, idx
        entries.append(GradCheckEntry(name, worst, worst_idx, worst <= tolerance))
    return GradCheckReport(entries)
