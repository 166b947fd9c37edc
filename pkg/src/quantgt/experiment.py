"""
Experiment configuration files and the single-run driver.

A config is an INI file with one section per concern::

    [experiment]
    name = academic_exponential_logq
    iterations = 20000
    stride = 10
    seed = 1

    [cost]
    model = academic
    n = 16
    seed = 3

    [graph]
    kind = exponential

    [schedule]
    period = 100
    mode = reweight
    seed = 5

    [nonlinearity]
    kind = log
    rho = 1/128

    [step]
    alpha = auto
    safety = 0.5

Every key is optional except ``experiment.name``; defaults are listed in
:data:`DEFAULTS`. Relative paths resolve against the config file's folder.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .costs import AcademicCost, LogisticCost, academic_generate
from .dataio import find_mnist, load_idx, select_and_partition
from .engine import DivergenceError, ExperimentTrace, run
from .graphnet import GraphSpec, SwitchingSchedule, Topology
from .oracle import solve_centralized
from .quantize import LinkNonlinearity, parse_nonlinearity
from .report import svg_chart

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "build", "run_experiment", "OUTPUT_ENV", "MNIST_ENV"]

OUTPUT_ENV = "QUANTGT_OUTPUT_DIR"
MNIST_ENV = "MNIST_DIR"

DEFAULTS = {
    "experiment": {"iterations": "20000", "stride": "10", "seed": "0", "gap_tol": "", "output_dir": "results"},
    "cost": {"model": "academic", "n": "16", "m": "1", "amplitude": "10", "seed": "0",
             "data_dir": "", "digits": "0,1", "total": "2000", "lam": "0.01", "partition_seed": "0"},
    "graph": {"kind": "exponential", "p": "0.3", "radius": "0.45", "scale": "0.5", "seed": "0",
              "b_graph": "same"},
    "schedule": {"period": "none", "mode": "reweight", "seed": "0"},
    "nonlinearity": {"kind": "none", "rho": "1"},
    "step": {"alpha": "auto", "safety": "0.5"},
}


class ConfigError(ValueError):
    """Invalid experiment config; ``errors`` lists one ``section.key: message`` per problem."""

    def __init__(self, errors, path=None):
        self.errors = list(errors)
        where = f"{path}: " if path else ""
        super().__init__(where + "invalid config\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    iterations: int
    stride: int
    seed: int
    gap_tol: float | None
    output_dir: Path
    cost_model: str
    n: int
    m: int
    amplitude: float
    cost_seed: int
    data_dir: Path | None
    digits: tuple
    total: int
    lam: float
    partition_seed: int
    graph: GraphSpec
    b_graph: str
    schedule: SwitchingSchedule
    nonlinearity: LinkNonlinearity
    alpha: float | None
    safety: float
    source: Path | None = field(default=None, compare=False)


class _Reader:
    """Typed field access that collects errors instead of stopping at the first."""

    def __init__(self, parser):
        self.parser = parser
        self.errors = []

    def raw(self, section, key):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return DEFAULTS.get(section, {}).get(key, "")

    def get(self, section, key, convert, check=None, message=""):
        text = self.raw(section, key)
        try:
            value = convert(text)
        except (ValueError, ZeroDivisionError) as exc:
            self.errors.append(f"{section}.{key}: cannot parse {text!r} ({exc})")
            return None
        if check is not None and value is not None and not check(value):
            self.errors.append(f"{section}.{key}: {message} (got {text!r})")
            return None
        return value


def _number(text):
    return float(Fraction(text)) if "/" in text else float(text)


def _optional(convert):
    def inner(text):
        return None if text.lower() in ("", "none", "auto") else convert(text)
    return inner


def _digits(text):
    parts = [int(t) for t in text.replace(" ", "").split(",")]
    if len(parts) != 2:
        raise ValueError("need exactly two digits")
    return tuple(parts)


def load_config(path) -> ExperimentConfig:
    """Parse and fully validate a config file; raises :class:`ConfigError` listing every bad field."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"], path) from exc
    errors = []
    for section in parser.sections():
        if section not in DEFAULTS:
            errors.append(f"{section}: unknown section")
            continue
        for key in parser.options(section):
            if key not in DEFAULTS[section] and not (section == "experiment" and key == "name"):
                errors.append(f"{section}.{key}: unknown key")
    r = _Reader(parser)
    r.errors = errors
    base = path.parent

    name = r.raw("experiment", "name")
    if not name or any(c in name for c in "/\\"):
        r.errors.append("experiment.name: required, and must be a plain file stem")
    iterations = r.get("experiment", "iterations", int, lambda v: v >= 1, "must be a positive integer")
    stride = r.get("experiment", "stride", int, lambda v: v >= 1, "must be a positive integer")
    seed = r.get("experiment", "seed", int, lambda v: v >= 0, "must be a nonnegative integer")
    gap_tol = r.get("experiment", "gap_tol", _optional(_number), lambda v: v > 0, "must be positive")
    out_text = os.environ.get(OUTPUT_ENV) or r.raw("experiment", "output_dir")
    output_dir = Path(out_text) if Path(out_text).is_absolute() else base / out_text

    model = r.get("cost", "model", str, lambda v: v in ("academic", "mnist"), "must be academic or mnist")
    n = r.get("cost", "n", int, lambda v: v >= 2, "need at least two nodes")
    m = r.get("cost", "m", int, lambda v: v >= 1, "must be a positive integer")
    amplitude = r.get("cost", "amplitude", _number, lambda v: v > 0.1, "must exceed the 0.1 dead-band")
    cost_seed = r.get("cost", "seed", int, lambda v: v >= 0, "must be a nonnegative integer")
    digits = r.get("cost", "digits", _digits, lambda v: v[0] != v[1] and all(0 <= d <= 9 for d in v),
                   "must be two distinct digits 0-9")
    total = r.get("cost", "total", int, lambda v: v >= 1, "must be a positive integer")
    lam = r.get("cost", "lam", _number, lambda v: v >= 0, "must be nonnegative")
    partition_seed = r.get("cost", "partition_seed", int, lambda v: v >= 0, "must be a nonnegative integer")
    data_dir = None
    if model == "mnist":
        text = os.environ.get(MNIST_ENV) or r.raw("cost", "data_dir")
        if not text:
            r.errors.append(f"cost.data_dir: required for mnist (or set ${MNIST_ENV})")
        else:
            data_dir = Path(text) if Path(text).is_absolute() else base / text
        if total is not None and n is not None and total % n:
            r.errors.append(f"cost.total: {total} is not divisible by n={n}")

    kind = r.get("graph", "kind", str, lambda v: v in ("exponential", "geometric", "er", "complete"),
                 "must be exponential, geometric, er or complete")
    p = r.get("graph", "p", _number, lambda v: 0 < v <= 1, "must lie in (0, 1]")
    radius = r.get("graph", "radius", _number, lambda v: 0 < v <= 2**0.5, "must lie in (0, sqrt 2]")
    scale = r.get("graph", "scale", _number, lambda v: 0 < v < 1, "must lie in (0, 1)")
    graph_seed = r.get("graph", "seed", int, lambda v: v >= 0, "must be a nonnegative integer")
    b_graph = r.get("graph", "b_graph", str, lambda v: v in ("same", "independent"), "must be same or independent")
    if kind == "exponential" and n is not None and n & (n - 1):
        r.errors.append(f"graph.kind: exponential graphs need n a power of two (n={n})")

    period = r.get("schedule", "period", _optional(int), lambda v: v >= 1, "must be a positive integer or none")
    mode = r.get("schedule", "mode", str, lambda v: v in ("reweight", "resample"), "must be reweight or resample")
    sched_seed = r.get("schedule", "seed", int, lambda v: v >= 0, "must be a nonnegative integer")
    if b_graph == "independent" and period is None:
        r.errors.append("graph.b_graph: independent tracker weights need a switching schedule")

    nl_kind = r.raw("nonlinearity", "kind")
    rho = r.get("nonlinearity", "rho", _number, lambda v: v > 0, "must be positive")
    nl = None
    if rho is not None:
        try:
            nl = parse_nonlinearity(nl_kind, rho)
        except ValueError as exc:
            r.errors.append(f"nonlinearity.kind: {exc}")

    alpha = r.get("step", "alpha", _optional(_number), lambda v: v > 0, "must be positive or auto")
    safety = r.get("step", "safety", _number, lambda v: 0 < v <= 1, "must lie in (0, 1]")

    if r.errors:
        raise ConfigError(r.errors, path)
    return ExperimentConfig(
        name=name, iterations=iterations, stride=stride, seed=seed, gap_tol=gap_tol, output_dir=output_dir,
        cost_model=model, n=n, m=m, amplitude=amplitude, cost_seed=cost_seed, data_dir=data_dir,
        digits=digits, total=total, lam=lam, partition_seed=partition_seed,
        graph=GraphSpec(kind, n, p=p, radius=radius, seed=graph_seed, scale=scale), b_graph=b_graph,
        schedule=SwitchingSchedule(period, mode, sched_seed), nonlinearity=nl, alpha=alpha, safety=safety,
        source=path,
    )


def build(cfg: ExperimentConfig):
    """Assemble ``(costs, network, b_network)`` for a config."""
    if cfg.cost_model == "academic":
        costs = AcademicCost(academic_generate(cfg.n, cfg.m, seed=cfg.cost_seed, amplitude=cfg.amplitude))
    else:
        ds = load_idx(*find_mnist(cfg.data_dir))
        data = select_and_partition(ds, cfg.digits, cfg.total, cfg.n, seed=cfg.partition_seed, lam=cfg.lam)
        costs = LogisticCost(data)
    network = Topology(cfg.graph, cfg.schedule)
    b_network = None
    if cfg.b_graph == "independent":
        s = cfg.schedule
        b_network = Topology(cfg.graph, SwitchingSchedule(s.period, s.mode, s.seed + 1))
    return costs, network, b_network


def run_experiment(cfg, write: bool = True) -> ExperimentTrace:
    """Run one config (a path or an :class:`ExperimentConfig`) and write ``<name>.csv`` and ``<name>.svg``.

    On divergence the partial trace is still written before the error propagates.
    """
    if not isinstance(cfg, ExperimentConfig):
        cfg = load_config(cfg)
    costs, network, b_network = build(cfg)
    oracle = solve_centralized(costs)
    meta = {"name": cfg.name, "nonlinearity": str(cfg.nonlinearity), "graph": cfg.graph.kind}
    try:
        trace = run(costs, network, cfg.nonlinearity, cfg.iterations, alpha=cfg.alpha, safety=cfg.safety,
                    seed=cfg.seed, stride=cfg.stride, gap_tol=cfg.gap_tol, F_star=oracle.F_star,
                    b_network=b_network)
    except DivergenceError as exc:
        if write and exc.trace is not None and exc.trace.rows:
            _finish(exc.trace, oracle, meta, cfg)
        raise
    _finish(trace, oracle, meta, cfg, write)
    return trace


def _finish(trace, oracle, meta, cfg, write=True):
    trace.F_star = oracle.F_star
    trace.oracle_grad_norm = oracle.grad_norm
    trace.oracle_converged = oracle.converged
    trace.meta.update(meta)
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        trace.to_csv(cfg.output_dir / f"{cfg.name}.csv")
        svg = svg_chart([(cfg.name, trace.k, trace.gap)], title=f"{cfg.name}: optimality gap")
        (cfg.output_dir / f"{cfg.name}.svg").write_text(svg)
