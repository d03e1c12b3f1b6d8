"""Exponent bookkeeping and Muckenhoupt characteristics over dyadic families.

Every characteristic here is a supremum over the dyadic subcubes of ``Q`` of
generation ``0..depth``.  That is a lower bound for the supremum over all
cubes, which is why reports carry ``lower_bound_flag=True``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import (
    Cube,
    DyadicIndex,
    GridFunction,
    block_max,
    block_mean,
    cell_centers,
    check_same_grid,
    expand_blocks,
)

INF = math.inf


class ConfigError(ValueError):
    """An exponent constraint is violated; the message names the constraint."""


class WeightDomainError(ValueError):
    pass


class SearchFailure(RuntimeError):
    pass


def conj(p: float) -> float:
    """Hoelder conjugate ``p'``; ``1' = inf``."""
    if p == 1:
        return INF
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class ExponentConfig:
    d: int = 1
    p: float = 2.0
    q: float = 2.0
    r: float = 2.0
    s: float = 0.5
    alpha: float = 0.0
    u: float = 1.0
    p0: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigError(f"requires d in {{1, 2}}, got d={self.d}")
        if not 1 <= self.p < INF:
            raise ConfigError(f"requires 1 ≤ p < ∞, got p={self.p}")
        if not self.p <= self.q:
            raise ConfigError(f"requires p ≤ q, got p={self.p}, q={self.q}")
        if not self.q < INF:
            raise ConfigError("requires q < ∞")
        if not 1 <= self.r < INF:
            raise ConfigError(f"requires 1 ≤ r < ∞, got r={self.r}")
        if not 0 < self.s < 1:
            raise ConfigError(f"requires 0 < s < 1, got s={self.s}")
        if not self.alpha >= 0:
            raise ConfigError(f"requires alpha ≥ 0, got alpha={self.alpha}")
        if not self.u >= 1:
            raise ConfigError(f"requires u ≥ 1, got u={self.u}")
        if not 1 <= self.p0 <= self.p:
            raise ConfigError(f"requires 1 ≤ p0 ≤ p, got p0={self.p0}, p={self.p}")

    def replace(self, **changes) -> "ExponentConfig":
        fields = {k: getattr(self, k) for k in ("d", "p", "q", "r", "s", "alpha", "u", "p0")}
        fields.update(changes)
        return ExponentConfig(**fields)

    @property
    def p_prime(self) -> float:
        return conj(self.p)

    @property
    def q_prime(self) -> float:
        return conj(self.q)

    @property
    def p1(self) -> float:
        """Exponent with ``1/p1 = 1 + 1/p - 1/p0`` (equals ``p`` when ``p0 = 1``)."""
        return 1.0 / (1.0 + 1.0 / self.p - 1.0 / self.p0)

    @property
    def gap(self) -> float:
        return 1.0 / self.p - 1.0 / self.q

    @property
    def beta(self) -> float:
        return self.alpha + self.gap

    @property
    def gamma(self) -> float:
        return min(self.q, self.r)

    def alpha_bound(self, p_eff: float | None = None) -> float:
        p_eff = self.p if p_eff is None else p_eff
        return 1.0 / self.q + inv(conj(p_eff))

    def eps_gradient(self) -> float:
        return 1.0 / self.d - self.gap - self.alpha

    def eps_fractional(self) -> float:
        return self.s / self.d - self.gap - self.alpha

    def eps_embedding(self) -> float:
        return (1.0 - self.s) / self.d - self.gap - self.alpha

    def require_alpha(self, p_eff: float | None = None) -> None:
        bound = self.alpha_bound(p_eff)
        if not self.alpha < bound:
            name = "p1" if p_eff is not None else "p"
            raise ConfigError(f"requires alpha < 1/q + 1/{name}' = {bound:.6g}, got alpha={self.alpha}")
        if not self.beta < 1:
            raise ConfigError(f"requires beta = alpha + 1/p - 1/q < 1, got {self.beta:.6g}")


@dataclass(frozen=True)
class CharacteristicReport:
    value: float
    attaining_cube: DyadicIndex
    family_depth: int
    lower_bound_flag: bool = True


def _require_positive(*ws: GridFunction) -> None:
    for w in ws:
        if not np.all(w.samples > 0):
            raise WeightDomainError("weights must be strictly positive on every cell")


def _check_depth(f: GridFunction, depth: int | None) -> int:
    if depth is None:
        return f.max_gen
    if not 0 <= depth <= f.max_gen:
        raise ValueError(f"depth must lie in [0, {f.max_gen}], got {depth}")
    return depth


def _argmax_report(per_gen: list[np.ndarray], depth: int) -> CharacteristicReport:
    best, where = -INF, DyadicIndex(0, (0,) * per_gen[0].ndim)
    for j, vals in enumerate(per_gen):
        k = int(np.argmax(vals))
        v = float(vals.flat[k])
        if v > best:
            best = v
            where = DyadicIndex(j, np.unravel_index(k, vals.shape))
    return CharacteristicReport(best, where, depth, True)


def power_means(values: np.ndarray, p: float, j: int) -> np.ndarray:
    """``<values>_{p,R}`` for every generation-``j`` block (``p = inf`` gives the max)."""
    a = np.abs(values)
    top = block_max(a, j)
    if math.isinf(p):
        return top
    # divide by the block max first so large p cannot overflow
    scale = expand_blocks(np.where(top > 0, top, 1.0), a.shape[0])
    return top * block_mean((a / scale) ** p, j) ** (1.0 / p)


def apq_alpha(
    omega: GridFunction,
    sigma: GridFunction,
    cfg: ExponentConfig,
    depth: int | None = None,
    *,
    p: float | None = None,
    q: float | None = None,
    alpha: float | None = None,
) -> CharacteristicReport:
    """``max_R |R|^alpha <omega>_{q,R} <sigma^-1>_{p',R}`` over dyadic ``R``.

    ``p``, ``q``, ``alpha`` override the config values, which is how the
    rescaled characteristics (``p1`` in place of ``p``, ``(p/t, q/t, alpha*t)``)
    are evaluated.
    """
    check_same_grid(omega, sigma)
    _require_positive(omega, sigma)
    depth = _check_depth(omega, depth)
    p = cfg.p if p is None else p
    q = cfg.q if q is None else q
    alpha = cfg.alpha if alpha is None else alpha
    pp = conj(p)
    L, d = omega.cube.side, omega.dim
    inv_sigma = 1.0 / sigma.samples
    per_gen = []
    for j in range(depth + 1):
        vol = (L / (1 << j)) ** d
        per_gen.append(vol ** alpha * power_means(omega.samples, q, j) * power_means(inv_sigma, pp, j))
    return _argmax_report(per_gen, depth)


def ainfty(w: GridFunction, depth: int | None = None) -> CharacteristicReport:
    """``A_inf`` characteristic through the localized dyadic maximal function."""
    _require_positive(w)
    depth = _check_depth(w, depth)
    means = [block_mean(w.samples, k) for k in range(depth + 1)]
    k_fine = 1 << depth
    # running[j] = max over generations j..depth of the block means, on the depth grid
    running = expand_blocks(means[depth], k_fine)
    per_gen = [None] * (depth + 1)
    for j in range(depth, -1, -1):
        running = np.maximum(running, expand_blocks(means[j], k_fine))
        per_gen[j] = block_mean(running, j) / means[j]
    return _argmax_report(per_gen, depth)


def au_characteristic(w: GridFunction, u: float, depth: int | None = None) -> CharacteristicReport:
    """``max_R <w>_R <w^-1>_{1/(u-1),R}``; ``u = 1`` uses ``max_R w^-1``."""
    if not u >= 1:
        raise ConfigError(f"requires u ≥ 1, got u={u}")
    _require_positive(w)
    depth = _check_depth(w, depth)
    winv = 1.0 / w.samples
    per_gen = []
    for j in range(depth + 1):
        avg = block_mean(w.samples, j)
        if u == 1:
            dual = block_max(winv, j)
        else:
            dual = block_mean(winv ** (1.0 / (u - 1.0)), j) ** (u - 1.0)
        per_gen.append(avg * dual)
    return _argmax_report(per_gen, depth)


@dataclass(frozen=True)
class ReverseHolderResult:
    beta: float
    s_star: float
    certificate: tuple[float, float]


RH_CAP = 8.0
RH_TOL = 1e-3


def reverse_holder_beta(
    omega: GridFunction,
    sigma: GridFunction,
    cfg: ExponentConfig,
    depth: int | None = None,
    cap: float = RH_CAP,
    tol: float = RH_TOL,
) -> ReverseHolderResult:
    """Trade the endpoint ``alpha = 1/q + 1/p'`` for a smaller ``beta``.

    Bisects for the largest ``s`` in ``(1, cap]`` with
    ``<omega>_{qs,Q} <= 2 <omega>_{q,Q}`` and returns
    ``beta = 1/(q s) + 1/p'`` together with the pair
    ``([omega,sigma]_beta, 2 |Q|^(beta-alpha) [omega,sigma]_alpha)``.
    """
    _require_positive(omega, sigma)
    depth = _check_depth(omega, depth)
    q = cfg.q
    vals = omega.samples

    def ratio(s: float) -> float:
        return float(np.mean(vals ** (q * s)) ** (1.0 / (q * s)) / np.mean(vals ** q) ** (1.0 / q))

    if ratio(cap) <= 2.0:
        s_star = cap
    else:
        lo, hi = 1.0, cap
        if ratio(lo + tol) > 2.0:
            raise SearchFailure("no reverse-Hoelder exponent s > 1 found; weight too singular for the grid")
        lo = lo + tol
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if ratio(mid) <= 2.0:
                lo = mid
            else:
                hi = mid
        s_star = lo
    alpha = 1.0 / q + inv(cfg.p_prime)
    beta = 1.0 / (q * s_star) + inv(cfg.p_prime)
    at_beta = apq_alpha(omega, sigma, cfg, depth, alpha=beta).value
    at_alpha = apq_alpha(omega, sigma, cfg, depth, alpha=alpha).value
    bound = 2.0 * omega.cube.volume ** (beta - alpha) * at_alpha
    return ReverseHolderResult(beta, s_star, (at_beta, bound))


def power_weight(cube: Cube, n: int, center, exponent: float) -> GridFunction:
    """``|x - center|^exponent`` sampled at cell centers without infinite samples.

    In 1D the cells touching ``center`` get the exact cell average; in 2D the
    distance is floored at a quarter cell.
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    h = cube.side / n
    xs = cell_centers(cube, n)
    if cube.dim == 1:
        x, c = xs[0], center[0]
        if exponent < 0:
            if exponent <= -1:
                raise WeightDomainError("1D power weight exponent must exceed -1")
            with np.errstate(divide="ignore"):
                vals = np.abs(x - c) ** exponent
            a, b = x - 0.5 * h, x + 0.5 * h
            touching = (a <= c + 1e-15) & (b >= c - 1e-15)

            def F(t):
                return np.sign(t) * np.abs(t) ** (exponent + 1) / (exponent + 1)

            vals = np.where(touching, (F(b - c) - F(a - c)) / h, vals)
        else:
            vals = np.abs(x - c) ** exponent
        return GridFunction(cube, n, vals)
    dist = np.sqrt(sum((xi - ci) ** 2 for xi, ci in zip(xs, center)))
    dist = np.maximum(dist, 0.25 * h)
    return GridFunction(cube, n, dist ** exponent)


def step_weight(cube: Cube, n: int, left: float, right: float) -> GridFunction:
    """Two-level weight split across the first coordinate at the cube's midpoint."""
    x = cell_centers(cube, n)[0]
    mid = cube.center[0]
    return GridFunction(cube, n, np.where(x < mid, left, right))
