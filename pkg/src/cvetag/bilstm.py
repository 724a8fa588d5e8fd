"""Coupled-gate LSTM cell, bidirectional unrolling, and its exact BPTT.

The cell has no separate forget gate: the memory update is
``c_t = (1 - i_t) * c_prev + i_t * tanh(...)`` with diagonal peephole
connections from the memory cell into the input and output gates. Both
the forward pass and the hand-derived backward pass treat the peephole
and coupled-gate paths exactly; correctness is pinned by the
finite-difference suites in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import init_matrix, sigmoid

_BLOCK_NAMES = ("w_xi", "w_hi", "w_ci", "b_i",
                "w_xc", "w_hc", "b_c",
                "w_xo", "w_ho", "w_co", "b_o")


@dataclass
class LstmCellParams:
    """Gate weights for one direction.

    ``w_x*`` are H x d, ``w_h*`` are H x H, peepholes ``w_ci``/``w_co``
    are length-H vectors (diagonal), biases are length H.
    """

    w_xi: np.ndarray
    w_hi: np.ndarray
    w_ci: np.ndarray
    b_i: np.ndarray
    w_xc: np.ndarray
    w_hc: np.ndarray
    b_c: np.ndarray
    w_xo: np.ndarray
    w_ho: np.ndarray
    w_co: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        h, d = self.w_xi.shape
        expected = {"w_xi": (h, d), "w_hi": (h, h), "w_ci": (h,), "b_i": (h,),
                    "w_xc": (h, d), "w_hc": (h, h), "b_c": (h,),
                    "w_xo": (h, d), "w_ho": (h, h), "w_co": (h,), "b_o": (h,)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, "
                                 f"expected {shape}")

    @property
    def hidden_size(self) -> int:
        return self.w_xi.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_xi.shape[1]

    @classmethod
    def init(cls, input_dim: int, hidden_size: int,
             rng: np.random.Generator) -> "LstmCellParams":
        def mat(rows, cols):
            return init_matrix(rows, cols, rng)
        return cls(
            w_xi=mat(hidden_size, input_dim), w_hi=mat(hidden_size, hidden_size),
            w_ci=np.zeros(hidden_size), b_i=np.zeros(hidden_size),
            w_xc=mat(hidden_size, input_dim), w_hc=mat(hidden_size, hidden_size),
            b_c=np.zeros(hidden_size),
            w_xo=mat(hidden_size, input_dim), w_ho=mat(hidden_size, hidden_size),
            w_co=np.zeros(hidden_size), b_o=np.zeros(hidden_size),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden_size: int) -> "LstmCellParams":
        return cls(
            w_xi=np.zeros((hidden_size, input_dim)),
            w_hi=np.zeros((hidden_size, hidden_size)),
            w_ci=np.zeros(hidden_size), b_i=np.zeros(hidden_size),
            w_xc=np.zeros((hidden_size, input_dim)),
            w_hc=np.zeros((hidden_size, hidden_size)),
            b_c=np.zeros(hidden_size),
            w_xo=np.zeros((hidden_size, input_dim)),
            w_ho=np.zeros((hidden_size, hidden_size)),
            w_co=np.zeros(hidden_size), b_o=np.zeros(hidden_size),
        )

    def blocks(self) -> dict:
        """Parameter arrays in a fixed, documented order."""
        return {name: getattr(self, name) for name in _BLOCK_NAMES}


@dataclass
class BiLstmParams:
    forward: LstmCellParams
    backward: LstmCellParams

    def __post_init__(self):
        if (self.forward.hidden_size != self.backward.hidden_size
                or self.forward.input_dim != self.backward.input_dim):
            raise ValueError("forward and backward cells must share d and H")

    @property
    def hidden_size(self) -> int:
        return self.forward.hidden_size

    @classmethod
    def init(cls, input_dim: int, hidden_size: int,
             rng: np.random.Generator) -> "BiLstmParams":
        return cls(LstmCellParams.init(input_dim, hidden_size, rng),
                   LstmCellParams.init(input_dim, hidden_size, rng))

    def blocks(self) -> dict:
        out = {}
        for name, arr in self.forward.blocks().items():
            out[f"fwd.{name}"] = arr
        for name, arr in self.backward.blocks().items():
            out[f"bwd.{name}"] = arr
        return out


@dataclass
class StepTrace:
    """Activations cached by one cell step for the backward pass."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    g: np.ndarray       # candidate tanh output
    c: np.ndarray
    o: np.ndarray
    tanh_c: np.ndarray


def lstm_cell_forward(params: LstmCellParams, x, h_prev, c_prev):
    """One step of the coupled-gate cell; returns (h, c, trace)."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if x.shape != (params.input_dim,) or h_prev.shape != (params.hidden_size,) \
            or c_prev.shape != (params.hidden_size,):
        raise ValueError("input/state shapes do not match the cell")
    i = sigmoid(params.w_xi @ x + params.w_hi @ h_prev
                + params.w_ci * c_prev + params.b_i)
    g = np.tanh(params.w_xc @ x + params.w_hc @ h_prev + params.b_c)
    c = (1.0 - i) * c_prev + i * g
    o = sigmoid(params.w_xo @ x + params.w_ho @ h_prev
                + params.w_co * c + params.b_o)
    tanh_c = np.tanh(c)
    h = o * tanh_c
    return h, c, StepTrace(x, h_prev, c_prev, i, g, c, o, tanh_c)


def lstm_sequence_forward(params: LstmCellParams, xs, h0=None, c0=None):
    """Left fold of the cell over ``xs``; returns (hs, traces)."""
    xs = list(xs)
    if not xs:
        raise ValueError("empty input sequence")
    h = np.zeros(params.hidden_size) if h0 is None else np.asarray(h0, dtype=np.float64)
    c = np.zeros(params.hidden_size) if c0 is None else np.asarray(c0, dtype=np.float64)
    hs, traces = [], []
    for x in xs:
        h, c, trace = lstm_cell_forward(params, x, h, c)
        hs.append(h)
        traces.append(trace)
    return hs, traces


@dataclass
class BiLstmTrace:
    forward: list   # StepTrace per position, left to right
    backward: list  # StepTrace per step of the reversed run


def bilstm_forward(params: BiLstmParams, xs):
    """Concatenated left and right contexts per position.

    The backward cell reads the sequence in reverse order; its outputs are
    re-reversed so output[t] = [left_context_t; right_context_t].
    Returns (outputs, trace).
    """
    xs = list(xs)
    fwd_hs, fwd_traces = lstm_sequence_forward(params.forward, xs)
    bwd_hs, bwd_traces = lstm_sequence_forward(params.backward, xs[::-1])
    bwd_hs = bwd_hs[::-1]
    outputs = [np.concatenate([f, b]) for f, b in zip(fwd_hs, bwd_hs)]
    return outputs, BiLstmTrace(fwd_traces, bwd_traces)


def _cell_backward(params: LstmCellParams, traces, grad_hs):
    """BPTT through one direction; grad_hs aligned with the run order."""
    if len(traces) != len(grad_hs):
        raise ValueError(f"{len(traces)} traces vs {len(grad_hs)} gradients")
    h, d = params.hidden_size, params.input_dim
    g = LstmCellParams.zeros(d, h)
    grad_xs = [None] * len(traces)
    dh_rec = np.zeros(h)
    dc_rec = np.zeros(h)
    for t in range(len(traces) - 1, -1, -1):
        tr = traces[t]
        dh = grad_hs[t] + dh_rec
        do = dh * tr.tanh_c
        da_o = do * tr.o * (1.0 - tr.o)
        # c_t feeds h_t through tanh, the output-gate peephole, and c_{t+1}.
        dc = dh * tr.o * (1.0 - tr.tanh_c ** 2) + params.w_co * da_o + dc_rec
        di = dc * (tr.g - tr.c_prev)
        da_i = di * tr.i * (1.0 - tr.i)
        da_g = dc * tr.i * (1.0 - tr.g ** 2)

        g.w_xi += np.outer(da_i, tr.x)
        g.w_hi += np.outer(da_i, tr.h_prev)
        g.w_ci += da_i * tr.c_prev
        g.b_i += da_i
        g.w_xc += np.outer(da_g, tr.x)
        g.w_hc += np.outer(da_g, tr.h_prev)
        g.b_c += da_g
        g.w_xo += np.outer(da_o, tr.x)
        g.w_ho += np.outer(da_o, tr.h_prev)
        g.w_co += da_o * tr.c
        g.b_o += da_o

        grad_xs[t] = params.w_xi.T @ da_i + params.w_xc.T @ da_g \
            + params.w_xo.T @ da_o
        dh_rec = params.w_hi.T @ da_i + params.w_hc.T @ da_g \
            + params.w_ho.T @ da_o
        dc_rec = dc * (1.0 - tr.i) + params.w_ci * da_i
    return g, grad_xs


def bptt_backward(params: BiLstmParams, trace: BiLstmTrace, grad_hs):
    """Gradients of a loss whose per-position h-gradients are ``grad_hs``.

    ``grad_hs`` holds one 2H vector per position (forward half first).
    Returns (BiLstmParams-shaped gradients, per-position input gradients).
    """
    grad_hs = [np.asarray(v, dtype=np.float64) for v in grad_hs]
    h = params.hidden_size
    n = len(grad_hs)
    if len(trace.forward) != n or len(trace.backward) != n:
        raise ValueError("trace length does not match gradient length")
    fwd_grads, fwd_dxs = _cell_backward(params.forward, trace.forward,
                                        [v[:h] for v in grad_hs])
    bwd_grads, bwd_dxs = _cell_backward(params.backward, trace.backward,
                                        [v[h:] for v in grad_hs][::-1])
    bwd_dxs = bwd_dxs[::-1]
    grad_xs = [f + b for f, b in zip(fwd_dxs, bwd_dxs)]
    return BiLstmParams(fwd_grads, bwd_grads), grad_xs
