"""
Lock-step gradient tracking with quantized links.

One round, for every node ``i`` at once (all reads are from round ``k``)::

    x_i <- x_i + sum_j a_ij (h(x_j) - h(x_i)) - alpha * y_i
    w_i <- grad f_i(x_i new) - grad f_i(x_i old)
    y_i <- y_i + sum_j b_ij (h(y_j) - h(y_i)) + w_i

Trackers start at zero and the cached "old" gradient starts at zero too, so
after the first round ``sum_i y_i = sum_i grad f_i(x_i)`` holds exactly (in
real arithmetic) for every later round, whatever the link map, as long as
the weights are balanced.
"""

from __future__ import annotations

import io
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphnet import Topology, WeightedDigraph, laplacian, spectrum
from .quantize import LinkNonlinearity, _log_levels, apply

log = logging.getLogger(__name__)

__all__ = [
    "DivergenceError",
    "SwarmState",
    "TraceRow",
    "ExperimentTrace",
    "step_size_bound",
    "init_state",
    "iterate",
    "gap_and_residuals",
    "run",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("k", "gap", "consensus_err", "tracking_residual", "alpha", "epoch")
DIVERGENCE_LIMIT = 1e12
GAP_FLOOR = -1e-12


class DivergenceError(RuntimeError):
    """State left the finite range; carries the partial trace."""

    def __init__(self, message, k, node, coord, trace=None):
        super().__init__(message)
        self.k, self.node, self.coord = k, node, coord
        self.trace = trace


@dataclass
class SwarmState:
    k: int
    X: np.ndarray
    Y: np.ndarray
    G_prev: np.ndarray

    def copy(self) -> "SwarmState":
        return SwarmState(self.k, self.X.copy(), self.Y.copy(), self.G_prev.copy())


@dataclass(frozen=True)
class TraceRow:
    k: int
    gap: float
    consensus_err: float
    tracking_residual: float
    alpha: float
    epoch: int


@dataclass
class ExperimentTrace:
    rows: list = field(default_factory=list)
    alpha: float = float("nan")
    alpha_bar: float = float("nan")
    F_star: float = 0.0
    oracle_grad_norm: float = 0.0
    oracle_converged: bool = True
    iterations: int = 0
    stop_reason: str = "budget"
    max_conservation_err: float = 0.0
    max_tracking_err: float = 0.0
    clamped: int = 0
    negative_gap: bool = False
    elapsed: float = 0.0
    x_bar: np.ndarray | None = None
    final_state: SwarmState | None = None
    meta: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def k(self):
        return self.column("k")

    @property
    def gap(self):
        return self.column("gap")

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap

    def header_lines(self):
        lines = [
            f"Fstar={self.F_star:.17g}",
            f"grad_norm={self.oracle_grad_norm:.17g}",
            f"oracle_converged={int(self.oracle_converged)}",
            f"alpha={self.alpha:.17g}",
            f"alpha_bar={self.alpha_bar:.17g}",
        ]
        lines += [f"{k}={v}" for k, v in sorted(self.meta.items())]
        return lines

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        for line in self.header_lines():
            buf.write(f"# {line}\n")
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.rows:
            buf.write(
                f"{r.k},{r.gap:.17g},{r.consensus_err:.17g},"
                f"{r.tracking_residual:.17g},{r.alpha:.17g},{r.epoch}\n"
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "ExperimentTrace":
        header, rows = {}, []
        lines = Path(path).read_text().splitlines()
        body = [l for l in lines if not l.startswith("#")]
        for l in lines:
            if l.startswith("#") and "=" in l:
                key, _, val = l[1:].strip().partition("=")
                header[key] = val
        if not body or tuple(body[0].split(",")) != CSV_COLUMNS:
            raise ValueError(f"{path}: trace header must be {','.join(CSV_COLUMNS)}")
        for l in body[1:]:
            k, gap, ce, tr, alpha, epoch = l.split(",")
            rows.append(TraceRow(int(k), float(gap), float(ce), float(tr), float(alpha), int(epoch)))
        tr = cls(rows=rows)
        tr.F_star = float(header.pop("Fstar", 0.0))
        tr.oracle_grad_norm = float(header.pop("grad_norm", 0.0))
        tr.oracle_converged = header.pop("oracle_converged", "1") == "1"
        tr.alpha = float(header.pop("alpha", "nan"))
        tr.alpha_bar = float(header.pop("alpha_bar", "nan"))
        tr.meta = header
        tr.iterations = rows[-1].k if rows else 0
        return tr

    def summary(self) -> str:
        lines = [
            f"final_gap       {self.final_gap:.6e}" if self.rows else "final_gap       n/a",
            f"iterations      {self.iterations}",
            f"stop_reason     {self.stop_reason}",
            f"alpha           {self.alpha:.6e}",
            f"alpha_bar       {self.alpha_bar:.6e}",
            f"F_star          {self.F_star:.12e}",
            f"max_conserv_err {self.max_conservation_err:.3e}",
            f"max_track_err   {self.max_tracking_err:.3e}",
        ]
        if not self.oracle_converged:
            lines.append("WARNING         oracle did not converge; gaps are relative to its best iterate")
        if self.negative_gap:
            lines.append(f"WARNING         gap fell below {GAP_FLOOR:g} and was floored")
        if self.clamped:
            lines.append(f"clamped         {self.clamped} log-quantizer exponents clamped")
        return "\n".join(lines)


def step_size_bound(lambda2A: float, lambda2B: float, L: float, K_upper: float) -> float:
    """Admissible step size ``min(lambda2A, lambda2B) / (L * K_upper)``."""
    for name, v in (("lambda2A", lambda2A), ("lambda2B", lambda2B), ("L", L), ("K_upper", K_upper)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return min(lambda2A, lambda2B) / (L * K_upper)


def init_state(n: int, dim: int, seed=None, X0=None) -> SwarmState:
    """Random standard-normal estimates, zero trackers, zero gradient cache."""
    if X0 is None:
        X0 = np.random.default_rng(seed).standard_normal((n, dim))
    X0 = np.array(X0, dtype=float).reshape(n, dim)
    return SwarmState(0, X0, np.zeros((n, dim)), np.zeros((n, dim)))


def _as_laplacian(g):
    return laplacian(g) if isinstance(g, WeightedDigraph) else np.asarray(g, dtype=float)


def _check_finite(state, trace=None):
    for name, M in (("x", state.X), ("y", state.Y)):
        bad = ~np.isfinite(M) | (np.abs(M) > DIVERGENCE_LIMIT)
        if bad.any():
            node, coord = (int(v) for v in np.argwhere(bad)[0])
            raise DivergenceError(
                f"divergence at iteration {state.k}: {name}[{node}][{coord}] = {M[node, coord]!r}",
                state.k, node, coord, trace,
            )


def iterate(state: SwarmState, alpha: float, costs, graph_a, graph_b=None,
            nl: LinkNonlinearity = LinkNonlinearity()) -> SwarmState:
    """One synchronous round; returns a new state and leaves ``state`` untouched."""
    LA = _as_laplacian(graph_a)
    LB = LA if graph_b is None else _as_laplacian(graph_b)
    hX = apply(nl, state.X)
    hY = apply(nl, state.Y)
    X = state.X + LA @ hX - alpha * state.Y
    G = costs.grads(X)
    Y = state.Y + LB @ hY + (G - state.G_prev)
    new = SwarmState(state.k + 1, X, Y, G)
    _check_finite(new)
    return new


def gap_and_residuals(state: SwarmState, costs, F_star: float = 0.0) -> dict:
    """Optimality gap at the node average, consensus error and tracking residual."""
    x_bar = state.X.mean(axis=0)
    raw = costs.global_value(x_bar) - F_star
    floored = raw < GAP_FLOOR
    G = costs.grads(state.X)
    return {
        "gap": max(raw, GAP_FLOOR),
        "gap_floored": floored,
        "consensus_err": float(np.linalg.norm(state.X - x_bar, axis=1).max()),
        "tracking_residual": float(np.linalg.norm(state.Y.sum(axis=0) - G.sum(axis=0))),
        "x_bar": x_bar,
    }


class _LaplacianCache:
    def __init__(self, net):
        self.net = net
        self.epoch = None
        self.L = None

    def at(self, k):
        if isinstance(self.net, Topology):
            e = self.net.epoch(k)
            if e != self.epoch:
                self.epoch, self.L = e, laplacian(self.net.at(k))
            return self.L, e
        if self.L is None:
            self.L, self.epoch = _as_laplacian(self.net), 0
        return self.L, 0

    def lambda2(self, samples):
        if isinstance(self.net, Topology):
            return self.net.min_lambda2(samples)
        return spectrum(_as_laplacian(self.net)).lambda2_real_abs


def run(costs, network, nl: LinkNonlinearity = LinkNonlinearity(), iterations: int = 1000, *,
        alpha: float | None = None, safety: float = 0.5, seed=0, stride: int = 10,
        gap_tol: float | None = None, F_star: float = 0.0, b_network=None, X0=None,
        lambda2_samples: int = 16, strict: bool = False) -> ExperimentTrace:
    """Run gradient tracking and record a trace every ``stride`` iterations.

    ``network`` (and optionally ``b_network`` for the tracker weights) is a
    static :class:`WeightedDigraph`, a dense Laplacian, or a switching
    :class:`Topology`. Without an explicit ``alpha`` the step is ``safety``
    times the admissible bound, using the smallest algebraic connectivity
    over ``lambda2_samples`` realized topologies.

    The run stops at ``iterations`` or at the first recorded row whose gap is
    below ``gap_tol``. Sum conservation and the tracking identity are checked
    every round; their worst relative errors land in the trace, and with
    ``strict=True`` a violation above 1e-9 raises ``AssertionError``.
    """
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    cache_a = _LaplacianCache(network)
    cache_b = cache_a if b_network is None else _LaplacianCache(b_network)
    lam_a = cache_a.lambda2(lambda2_samples)
    lam_b = lam_a if b_network is None else cache_b.lambda2(lambda2_samples)
    alpha_bar = step_size_bound(lam_a, lam_b, costs.L, nl.K_upper)
    if alpha is None:
        if not 0 < safety <= 1:
            raise ValueError("safety factor must lie in (0, 1]")
        alpha = safety * alpha_bar
        if alpha >= alpha_bar:
            alpha = np.nextafter(alpha_bar, 0)
    trace = ExperimentTrace(alpha=alpha, alpha_bar=alpha_bar, F_star=F_star)
    state = init_state(costs.n, costs.dim, seed, X0)
    t0 = time.perf_counter()

    def record(st, epoch):
        m = gap_and_residuals(st, costs, F_star)
        trace.negative_gap |= m["gap_floored"]
        trace.rows.append(TraceRow(st.k, m["gap"], m["consensus_err"], m["tracking_residual"], alpha, epoch))
        trace.x_bar = m["x_bar"]
        return m["gap"]

    _, epoch = cache_a.at(0)
    gap = record(state, epoch)
    count_clamps = nl.kind == "log"
    while state.k < iterations and not (gap_tol is not None and gap < gap_tol):
        LA, epoch = cache_a.at(state.k)
        LB = LA if b_network is None else cache_b.at(state.k)[0]
        if count_clamps:
            trace.clamped += _log_levels(state.X, nl.rho)[1] + _log_levels(state.Y, nl.rho)[1]
        try:
            new = iterate(state, alpha, costs, LA, LB, nl)
        except DivergenceError as exc:
            trace.iterations = state.k
            trace.stop_reason = "diverged"
            exc.trace = trace
            raise
        sx_old, sx_new, sy = state.X.sum(axis=0), new.X.sum(axis=0), state.Y.sum(axis=0)
        cons = np.linalg.norm(sx_new - sx_old + alpha * sy)
        cons /= max(1.0, np.linalg.norm(state.X), np.linalg.norm(new.X))
        track = np.linalg.norm(new.Y.sum(axis=0) - new.G_prev.sum(axis=0))
        track /= max(1.0, np.linalg.norm(new.G_prev))
        trace.max_conservation_err = max(trace.max_conservation_err, cons)
        trace.max_tracking_err = max(trace.max_tracking_err, track)
        if strict and (cons > 1e-9 or track > 1e-9):
            raise AssertionError(
                f"invariant violated at iteration {new.k}: conservation {cons:.3e}, tracking {track:.3e}"
            )
        state = new
        if state.k % stride == 0 or state.k == iterations:
            gap = record(state, cache_a.at(state.k)[1])
    trace.iterations = state.k
    if gap_tol is not None and gap < gap_tol:
        trace.stop_reason = "tolerance"
    trace.elapsed = time.perf_counter() - t0
    trace.final_state = state
    return trace
