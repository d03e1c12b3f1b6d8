"""Truncation layers and the weak-to-strong upgrades with constants 10C and 58C.

``C`` is the hypothesis constant: the smallest value for which both the weak
``L^{q,inf}_omega`` bound and the ``L^1`` average bound hold for ``u`` and for
every truncation used by the layer argument.  It is measured, not assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lattice import GridFunction, gradient_norm
from .norms import fsum, lp_norm, tl_seminorm, weak_lp_norm
from .weights import ConfigError, ExponentConfig


def truncate(v: GridFunction, t: float) -> GridFunction:
    """``0`` where ``v <= t``, ``v - t`` where ``t < v < 2t``, ``t`` where ``v >= 2t``."""
    if not t > 0:
        raise ValueError("truncation level must be positive")
    x = v.samples
    if np.any(x < 0):
        raise ValueError("truncation needs a nonnegative function")
    out = np.where(x <= t, 0.0, np.where(x < 2 * t, x - t, t))
    return v.with_samples(out)


@dataclass(frozen=True)
class TruncationLayers:
    lam: float
    levels: dict[int, float]  # k -> lambda_k = 2^k lambda, k >= -1
    E: dict[int, np.ndarray]  # {v > lambda_k}
    A: dict[int, np.ndarray]  # {lambda_{k-1} < v <= lambda_k}, k >= 0

    @property
    def top(self) -> int:
        return max(self.levels)


def layer_cascade(v: GridFunction, lam: float) -> TruncationLayers:
    """Levels ``k = -1, 0, 1, ...`` up to the first empty ``E_k``."""
    if not lam > 0:
        raise ValueError("base level must be positive")
    x = v.samples
    levels, E, A = {}, {}, {}
    k = -1
    while True:
        lk = math.ldexp(lam, k)
        levels[k] = lk
        E[k] = x > lk
        if k >= 0:
            A[k] = E[k - 1] & ~E[k]
        if not E[k].any():
            break
        k += 1
    return TruncationLayers(lam, levels, E, A)


class WeakStrongResult(NamedTuple):
    strong_value: float
    bound: float
    passed: bool
    c_weak: float


def _osc(u: GridFunction) -> GridFunction:
    return u.with_samples(u.samples - u.samples.mean())


def cascade_truncations(u: GridFunction) -> list[GridFunction]:
    """``v_{lambda_{k-1}}`` for ``k >= 1`` with ``v = |u - <u>_Q|`` and ``lambda = <v>_Q``."""
    v = u.with_samples(np.abs(u.samples - u.samples.mean()))
    lam = fsum(v.samples) / v.samples.size
    if lam == 0:
        return []
    layers = layer_cascade(v, lam)
    return [truncate(v, layers.levels[k - 1]) for k in range(1, layers.top + 2)]


def _hypothesis_ratio(w: GridFunction, omega: GridFunction, q: float, rhs: float) -> float:
    """Larger of the two hypothesis ratios for one function ``w``."""
    dev = _osc(w)
    weak = weak_lp_norm(dev, omega, q)
    l1 = fsum(np.abs(dev.samples)) * w.cell_volume
    scale = (fsum(omega.samples ** q) * w.cell_volume) ** (1.0 / q) / w.cube.volume
    lhs = max(weak, scale * l1)
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def measure_weak_constant(u, omega, sigma, cfg: ExponentConfig, energy) -> float:
    """Max hypothesis ratio over ``u`` and its cascade truncations for the given right-hand side."""
    funcs = [u] + cascade_truncations(u)
    return max(_hypothesis_ratio(w, omega, cfg.q, energy(w)) for w in funcs)


def weak_to_strong_classic(
    u: GridFunction,
    omega: GridFunction,
    sigma: GridFunction,
    cfg: ExponentConfig,
    c_weak: float | None = None,
    grad: GridFunction | None = None,
) -> WeakStrongResult:
    """``||u - <u>_Q||_{L^q_omega} <= 10 C ||grad u||_{L^p_sigma}``."""
    p, q = cfg.p, cfg.q

    def energy(w):
        g = grad if (grad is not None and w is u) else gradient_norm(w)
        return lp_norm(g, sigma, p)

    strong = lp_norm(_osc(u), omega, q)
    if c_weak is None:
        c_weak = measure_weak_constant(u, omega, sigma, cfg, energy)
    bound = 10.0 * c_weak * energy(u)
    return WeakStrongResult(strong, bound, strong <= bound, c_weak)


def weak_to_strong_fractional(
    u: GridFunction,
    omega: GridFunction,
    sigma: GridFunction,
    cfg: ExponentConfig,
    c_weak: float | None = None,
    quadrature: str = "auto",
) -> WeakStrongResult:
    """``||u - <u>_Q||_{L^q_omega} <= 58 C [u]_{F^{s,sigma}_{p,r}}`` (needs ``r <= p``)."""
    if cfg.r > cfg.p:
        raise ConfigError(f"requires r ≤ p, got r={cfg.r}, p={cfg.p}")

    def energy(w):
        return tl_seminorm(w, sigma, cfg, quadrature).value

    strong = lp_norm(_osc(u), omega, cfg.q)
    if c_weak is None:
        c_weak = measure_weak_constant(u, omega, sigma, cfg, energy)
    bound = 58.0 * c_weak * energy(u)
    return WeakStrongResult(strong, bound, strong <= bound, c_weak)
