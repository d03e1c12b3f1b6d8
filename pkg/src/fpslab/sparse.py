"""Sparse families, the two stopping-time constructions and pointwise domination checks.

Both constructions select, inside a member ``R``, the maximal dyadic ``S`` below
``R`` whose average of a nonnegative stopping field exceeds ``4`` times the
average over ``R``.  Since the selected cubes are disjoint, each field can claim
at most a quarter of ``R``, which leaves the witness ``E_R = R \\ children`` at
least half of ``R`` in cell counts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import (
    Cube,
    DyadicIndex,
    GridFunction,
    block_mean,
    cell_window,
    cells_of,
    dilate,
    expand_blocks,
)
from .norms import fsum, local_quotients, lp_norm, weak_lp_norm
from .weights import ConfigError, ExponentConfig, ainfty, apq_alpha, conj

THRESHOLD = 4.0


@dataclass
class SparseMember:
    index: DyadicIndex
    witness: np.ndarray  # boolean mask over the whole n**d grid
    stats: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.witness.sum())


@dataclass
class SparseFamily:
    members: list[SparseMember]
    n: int
    d: int
    threshold: float = THRESHOLD

    def __len__(self):
        return len(self.members)

    def indices(self) -> list[DyadicIndex]:
        return [m.index for m in self.members]

    def to_json(self) -> dict:
        out = []
        for m in self.members:
            flat = np.flatnonzero(m.witness.ravel())
            out.append(
                {
                    "generation": m.index.generation,
                    "coords": list(m.index.coords),
                    "witness_cell_ranges": _runs(flat),
                }
            )
        return {"n": self.n, "d": self.d, "threshold": self.threshold, "members": out}

    @classmethod
    def from_json(cls, doc: dict | str) -> "SparseFamily":
        if isinstance(doc, str):
            doc = json.loads(doc)
        n, d = int(doc["n"]), int(doc["d"])
        members = []
        for item in doc["members"]:
            mask = np.zeros(n ** d, dtype=bool)
            for a, b in item["witness_cell_ranges"]:
                mask[a:b] = True
            members.append(SparseMember(DyadicIndex(item["generation"], item["coords"]), mask.reshape((n,) * d)))
        return cls(members, n, d, float(doc.get("threshold", THRESHOLD)))


def _runs(flat: np.ndarray) -> list[list[int]]:
    """Half-open ``[start, stop)`` runs of consecutive flat cell indices."""
    if flat.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(flat) != 1)
    starts = np.concatenate(([flat[0]], flat[breaks + 1]))
    stops = np.concatenate((flat[breaks] + 1, [flat[-1] + 1]))
    return [[int(a), int(b)] for a, b in zip(starts, stops)]


def full_witness_family(indices, n: int, d: int) -> SparseFamily:
    """Family whose witnesses are the whole cubes (used for hand-built examples)."""
    return SparseFamily([SparseMember(i, cells_of(i, n)) for i in indices], n, d)


def sparsity_check(S: SparseFamily) -> tuple[bool, float]:
    """Disjoint witnesses and ``|E_R| >= |R|/2``, both in integer cell counts."""
    if not S.members:
        return True, 1.0
    shape = (S.n,) * S.d
    claimed = np.zeros(shape, dtype=np.int64)
    ok = True
    min_ratio = math.inf
    for m in S.members:
        cells = (S.n >> m.index.generation) ** S.d
        inside = cells_of(m.index, S.n)
        if np.any(m.witness & ~inside):
            ok = False
        size = m.size
        min_ratio = min(min_ratio, size / cells)
        if 2 * size < cells:
            ok = False
        claimed += m.witness
    if claimed.max() > 1:
        ok = False
    return ok, float(min_ratio)


# --- stopping time ------------------------------------------------------------


def _stopping_children(fields: list[np.ndarray], R: DyadicIndex, max_gen: int) -> list[DyadicIndex]:
    """Maximal strict dyadic subcubes of ``R`` where some field average exceeds 4x its ``R`` average.

    ``fields`` are sampled on the cells of ``R`` only.
    """
    depth = max_gen - R.generation
    if depth <= 0:
        return []
    m = fields[0].shape[0]
    d = fields[0].ndim
    tops = [float(np.mean(g)) for g in fields]
    covered = np.zeros((1,) * d, dtype=bool)
    out = []
    for k in range(1, depth + 1):
        if (1 << k) > m:
            break
        hit = np.zeros(((1 << k),) * d, dtype=bool)
        for g, top in zip(fields, tops):
            hit |= block_mean(g, k) > THRESHOLD * top
        covered = expand_blocks(covered, 1 << k)
        new = hit & ~covered
        for loc in zip(*np.nonzero(new)):
            coords = tuple((c << k) + int(l) for c, l in zip(R.coords, loc))
            out.append(DyadicIndex(R.generation + k, coords))
        covered = covered | hit
    return out


def _grow(f: GridFunction, max_gen: int, fields_for) -> SparseFamily:
    if max_gen > f.max_gen:
        raise ValueError(f"max_gen {max_gen} exceeds the grid depth {f.max_gen}")
    d, n = f.dim, f.n
    members = []
    stack = [DyadicIndex.root(d)]
    while stack:
        R = stack.pop()
        fields, stats = fields_for(R)
        kids = _stopping_children(fields, R, max_gen)
        witness = cells_of(R, n)
        for S in kids:
            witness[S.cell_slices(n)] = False
        members.append(SparseMember(R, witness, stats))
        stack.extend(reversed(kids))
    members.sort(key=lambda m: m.index)
    return SparseFamily(members, n, d)


def _oscillation_field(f: GridFunction, R: DyadicIndex) -> np.ndarray:
    vals = f.samples[R.cell_slices(f.n)]
    return np.abs(vals - vals.mean())


def oscillation_sparse(f: GridFunction, Q: Cube | None = None, max_gen: int | None = None) -> SparseFamily:
    """Single-condition stopping on ``<|f - <f>_R|>_S > 4 <|f - <f>_R|>_R``."""
    _check_root(f, Q)
    max_gen = f.max_gen if max_gen is None else max_gen

    def fields_for(R):
        osc = _oscillation_field(f, R)
        return [osc], {"osc": float(osc.mean())}

    return _grow(f, max_gen, fields_for)


def _check_root(f: GridFunction, Q: Cube | None) -> None:
    if Q is not None and Q != f.cube:
        raise ValueError("the stopping construction runs on the grid cube of f")


def quotient_on(f: GridFunction, R: DyadicIndex, cfg: ExponentConfig, gamma: float = 3.0, quadrature: str = "auto"):
    """``f_{gamma R}^{s,r}`` on the cells of ``R`` (reflected outside ``Q``)."""
    Rc = R.cube(f.cube)
    return local_quotients(
        f, dilate(Rc, gamma), Rc, s=cfg.s, r=cfg.r, reflect=True, quadrature=quadrature
    )


def fractional_sparse(
    f: GridFunction,
    Q: Cube | None,
    cfg: ExponentConfig,
    max_gen: int | None = None,
    quadrature: str = "auto",
) -> SparseFamily:
    """Two-condition stopping: ``<f_{3R}^{s,r}>_S > 4 <f_{3R}^{s,r}>_R`` or the oscillation condition."""
    _check_root(f, Q)
    max_gen = f.max_gen if max_gen is None else max_gen

    def fields_for(R):
        quot = quotient_on(f, R, cfg, quadrature=quadrature)
        osc = _oscillation_field(f, R)
        return [quot, osc], {"quot": float(quot.mean()), "osc": float(osc.mean())}

    return _grow(f, max_gen, fields_for)


# --- operators ----------------------------------------------------------------


def sparse_operator(S: SparseFamily, f: GridFunction, r: float, beta: float) -> GridFunction:
    """``(sum_R (|R|^beta <|f|>_R)^r 1_R)^(1/r)``."""
    if not r > 0:
        raise ConfigError("requires r > 0")
    n, Q = f.n, f.cube
    acc = np.zeros_like(f.samples, dtype=float)
    absf = np.abs(f.samples)
    for m in S.members:
        sl = m.index.cell_slices(n)
        vol = m.index.cube(Q).volume
        acc[sl] += (vol ** beta * absf[sl].mean()) ** r
    return f.with_samples(acc ** (1.0 / r))


def fractional_maximal(f: GridFunction, Q: Cube | None = None, beta: float = 0.0, max_gen: int | None = None) -> GridFunction:
    """``max_R |R|^beta <|f|>_R`` over dyadic ``R`` containing each cell."""
    _check_root(f, Q)
    max_gen = f.max_gen if max_gen is None else max_gen
    absf = np.abs(f.samples)
    out = np.zeros_like(absf, dtype=float)
    for j in range(max_gen + 1):
        vol = (f.cube.side / (1 << j)) ** f.dim
        out = np.maximum(out, expand_blocks(vol ** beta * block_mean(absf, j), f.n))
    return f.with_samples(out)


# --- domination ---------------------------------------------------------------


@dataclass
class DominationReport:
    max_required_constant: float
    per_cell_ratios: GridFunction
    family: SparseFamily | None


def _ratios(target: np.ndarray, dom: np.ndarray) -> np.ndarray:
    """``target / dom`` with ``0/0 = 1`` and ``x/0 = inf``."""
    out = np.ones_like(target, dtype=float)
    pos = dom > 0
    out[pos] = target[pos] / dom[pos]
    out[(~pos) & (target > 0)] = math.inf
    return out


def _report(f: GridFunction, target, dom, family) -> DominationReport:
    ratios = _ratios(np.asarray(target, dtype=float), np.asarray(dom, dtype=float))
    return DominationReport(float(ratios.max()), f.with_samples(ratios), family)


def verify_oscillation_domination(f: GridFunction, Q: Cube | None, S: SparseFamily) -> DominationReport:
    _check_root(f, Q)
    target = np.abs(f.samples - f.samples.mean())
    dom = np.zeros_like(target)
    for m in S.members:
        osc = m.stats.get("osc")
        if osc is None:
            osc = float(_oscillation_field(f, m.index).mean())
        dom[m.index.cell_slices(f.n)] += osc
    return _report(f, target, dom, S)


def verify_fractional_domination(
    f: GridFunction,
    Q: Cube | None,
    cfg: ExponentConfig,
    S: SparseFamily,
    quadrature: str = "auto",
) -> DominationReport:
    """Ratio of ``f_Q^{s,r}`` to ``sum_R (<f_{3R}^{s,r}>_R + <|f-<f>_R|>_R / (s^(1+1/r) l(R)^s)) 1_R``."""
    _check_root(f, Q)
    s, r = cfg.s, cfg.r
    target = local_quotients(f, f.cube, s=s, r=r, quadrature=quadrature)
    factor = s ** (-1.0 - 1.0 / r)
    dom = np.zeros_like(target)
    for m in S.members:
        quot = m.stats.get("quot")
        if quot is None:
            quot = float(quotient_on(f, m.index, cfg, quadrature=quadrature).mean())
        osc = m.stats.get("osc")
        if osc is None:
            osc = float(_oscillation_field(f, m.index).mean())
        side = m.index.cube(f.cube).side
        dom[m.index.cell_slices(f.n)] += quot + factor * osc / side ** s
    return _report(f, target, dom, S)


def verify_subcritical_tl_domination(
    f: GridFunction,
    Q: Cube | None,
    cfg: ExponentConfig,
    max_gen: int | None = None,
    quadrature: str = "auto",
) -> DominationReport:
    """Ratio of ``f_Q^{s,r}`` to the two full dyadic sums with ``l(R)^(-sr)`` weights."""
    _check_root(f, Q)
    max_gen = f.max_gen if max_gen is None else max_gen
    s, r, n = cfg.s, cfg.r, f.n
    target = local_quotients(f, f.cube, s=s, r=r, quadrature=quadrature)
    first = np.zeros_like(target)
    second = np.zeros_like(target)
    vals = f.samples
    for j in range(max_gen + 1):
        side = f.cube.side / (1 << j)
        w = side ** (-s * r)
        means = expand_blocks(block_mean(vals, j), n)
        first += w * np.abs(vals - means) ** r
        # <|f - <f>_{3R}|>_{r,3R} per generation-j cube R, via the reflected window
        osc3 = np.empty(((1 << j),) * f.dim)
        for idx in np.ndindex(*osc3.shape):
            R = DyadicIndex(j, idx).cube(f.cube)
            win = cell_window(f, dilate(R, 3.0), reflect=True)
            osc3[idx] = np.mean(np.abs(win - win.mean()) ** r)
        second += w * expand_blocks(osc3, n)
    dom = first ** (1.0 / r) + second ** (1.0 / r)
    return _report(f, target, dom, None)


def sparse_bound_ratio(
    S: SparseFamily,
    f: GridFunction,
    omega: GridFunction,
    sigma: GridFunction,
    cfg: ExponentConfig,
    mode: str = "strong",
) -> float:
    """Measured constant of the sparse operator bound ``L^p_sigma -> L^q_omega`` (or weak ``L^{q,inf}``)."""
    p, q, r = cfg.p, cfg.q, cfg.r
    cfg.require_alpha()
    beta = cfg.beta
    Aop = sparse_operator(S, f, r, beta)
    char = apq_alpha(omega, sigma, cfg).value
    pp = conj(p)
    if mode == "strong":
        if not p > 1:
            raise ConfigError("strong-type bound requires p > 1")
        a_sig = ainfty(sigma.with_samples(sigma.samples ** (-pp))).value
        if p <= r:
            factor = a_sig ** (1.0 / q)
        else:
            a_om = ainfty(omega.with_samples(omega.samples ** q)).value
            e = 1.0 / r - 1.0 / p
            if p < q or beta == 0:
                factor = a_om ** e + a_sig ** (1.0 / q)
            else:
                factor = a_om ** e * a_sig ** (1.0 / q)
        lhs = lp_norm(Aop, omega, q)
    elif mode == "weak":
        a_om = ainfty(omega.with_samples(omega.samples ** q)).value
        if r == 1 < p and (p < q or beta == 0):
            factor = a_om ** (1.0 / pp)
        else:
            factor = a_om ** (1.0 / r)
        lhs = weak_lp_norm(Aop, omega, q)
    else:
        raise ValueError(f"mode must be 'strong' or 'weak', got {mode!r}")
    rhs = char * factor * lp_norm(f, sigma, p)
    if rhs == 0:
        return 1.0 if lhs == 0 else math.inf
    return lhs / rhs
