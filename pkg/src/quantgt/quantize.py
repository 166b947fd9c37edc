"""
Link nonlinearities applied elementwise to transmitted vectors.

Rounding is half-away-from-zero everywhere so every map is exactly odd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinkNonlinearity",
    "QuantizationError",
    "quantize_log",
    "quantize_uniform",
    "apply",
    "sector_bounds",
    "parse_nonlinearity",
]

KINDS = ("log", "uniform", "none")

# largest |round(log|z| / rho)| we allow before exp overflows or underflows
_LOG_MAX = math.log(np.finfo(float).max)
_LOG_MIN = math.log(np.finfo(float).smallest_subnormal)


class QuantizationError(ValueError):
    pass


def _round_half_away(t):
    return np.sign(t) * np.floor(np.abs(t) + 0.5)


def _check_rho(rho):
    if not (rho > 0 and math.isfinite(rho)):
        raise QuantizationError(f"quantization level must be positive and finite, got {rho}")


def _log_levels(z, rho):
    """Quantized values and a count of clamped entries."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise QuantizationError("cannot quantize non-finite values")
    out = np.zeros_like(z)
    nz = z != 0
    t = np.log(np.abs(z[nz])) / rho
    r = _round_half_away(t)
    hi = math.floor(_LOG_MAX / rho)
    lo = math.ceil(_LOG_MIN / rho)
    clamped = int(np.count_nonzero((r > hi) | (r < lo)))
    r = np.clip(r, lo, hi)
    out[nz] = np.sign(z[nz]) * np.exp(rho * r)
    return out, clamped


def quantize_log(z, rho: float):
    """Logarithmic quantizer ``sgn(z) * exp(rho * round(log|z| / rho))``, with ``q(0) = 0``.

    Works on scalars and arrays. The relative error is at most ``exp(rho/2) - 1``.
    """
    _check_rho(rho)
    out, _ = _log_levels(z, rho)
    return float(out) if np.ndim(out) == 0 else out


def quantize_uniform(z, rho: float):
    """Uniform quantizer ``rho * round(z / rho)``; absolute error at most ``rho / 2``."""
    _check_rho(rho)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise QuantizationError("cannot quantize non-finite values")
    out = rho * _round_half_away(z / rho)
    out = out + 0.0  # turn -0.0 into 0.0
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LinkNonlinearity:
    """Elementwise link map: ``kind`` is ``"log"``, ``"uniform"`` or ``"none"`` (identity)."""

    kind: str = "none"
    rho: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise QuantizationError(f"unknown nonlinearity {self.kind!r}; expected one of {KINDS}")
        if self.kind != "none":
            _check_rho(self.rho)

    @property
    def sector(self):
        return sector_bounds(self)

    @property
    def K_upper(self) -> float:
        """Upper sector constant for step-size sizing; uniform has none and uses 1."""
        b = sector_bounds(self)
        return 1.0 if b is None else b[1]

    def __call__(self, v):
        return apply(self, v)

    def __str__(self):
        return "none" if self.kind == "none" else f"{self.kind}(rho={self.rho:g})"


def apply(nl: LinkNonlinearity, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if nl.kind == "none":
        if not np.all(np.isfinite(v)):
            raise QuantizationError("cannot transmit non-finite values")
        return v
    if nl.kind == "log":
        return _log_levels(v, nl.rho)[0]
    return np.asarray(quantize_uniform(v, nl.rho))


def sector_bounds(nl: LinkNonlinearity):
    """``(K_lower, K_upper)`` with ``K_lower <= h(z)/z <= K_upper``, or None if not sector-bound."""
    if nl.kind == "none":
        return (1.0, 1.0)
    if nl.kind == "log":
        return (math.exp(-nl.rho / 2), math.exp(nl.rho / 2))
    return None


def parse_nonlinearity(kind: str, rho=None) -> LinkNonlinearity:
    """Build from config strings ``log``, ``uniform`` or ``none``."""
    kind = kind.strip().lower()
    if kind in ("identity", "linear"):
        kind = "none"
    if kind == "none":
        return LinkNonlinearity("none")
    if rho is None:
        raise QuantizationError(f"nonlinearity {kind!r} needs a quantization level rho")
    return LinkNonlinearity(kind, float(rho))
