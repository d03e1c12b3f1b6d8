"""Dyadic cube geometry and grid functions sampled at cell centers.

A :class:`GridFunction` lives on a cube ``Q`` split into ``n**d`` equal cells
with ``n`` a power of two, so every dyadic subcube of generation at most
``log2(n)`` is an exact union of cells and its averages are plain cell means.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

_ALIGN_TOL = 1e-9


class AlignmentError(ValueError):
    """A cube does not line up with the cell grid of a grid function."""


@dataclass(frozen=True)
class Cube:
    origin: tuple[float, ...]
    side: float

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(a) for a in self.origin))
        if not self.side > 0:
            raise ValueError(f"cube side must be positive, got {self.side}")
        if self.dim not in (1, 2):
            raise ValueError(f"only d in {{1, 2}} is supported, got d={self.dim}")

    @classmethod
    def unit(cls, d: int = 1) -> "Cube":
        return cls((0.0,) * d, 1.0)

    @property
    def dim(self) -> int:
        return len(self.origin)

    @property
    def volume(self) -> float:
        return self.side ** self.dim

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(a + 0.5 * self.side for a in self.origin)

    def contains_cube(self, other: "Cube", tol: float = _ALIGN_TOL) -> bool:
        return all(
            b >= a - tol and b + other.side <= a + self.side + tol
            for a, b in zip(self.origin, other.origin)
        )

    def __repr__(self):
        box = " x ".join(f"[{a:g}, {a + self.side:g}]" for a in self.origin)
        return f"Cube({box})"


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """Address of the dyadic subcube of generation ``generation`` at ``coords``."""

    generation: int
    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if self.generation < 0:
            raise ValueError("generation must be nonnegative")
        k = 1 << self.generation
        if any(c < 0 or c >= k for c in self.coords):
            raise ValueError(f"coords {self.coords} out of range for generation {self.generation}")

    @classmethod
    def root(cls, d: int) -> "DyadicIndex":
        return cls(0, (0,) * d)

    def parent(self) -> "DyadicIndex":
        if self.generation == 0:
            raise ValueError("the root cube has no parent")
        return DyadicIndex(self.generation - 1, tuple(c >> 1 for c in self.coords))

    def children(self) -> list["DyadicIndex"]:
        d = len(self.coords)
        out = []
        for bits in np.ndindex(*(2,) * d):
            out.append(DyadicIndex(self.generation + 1, tuple(2 * c + b for c, b in zip(self.coords, bits))))
        return out

    def is_ancestor_of(self, other: "DyadicIndex") -> bool:
        """True when ``other`` lies inside this cube (including equality)."""
        shift = other.generation - self.generation
        if shift < 0:
            return False
        return all((c >> shift) == a for a, c in zip(self.coords, other.coords))

    def cube(self, Q: Cube) -> Cube:
        side = Q.side / (1 << self.generation)
        return Cube(tuple(a + c * side for a, c in zip(Q.origin, self.coords)), side)

    def cell_slices(self, n: int) -> tuple[slice, ...]:
        m = n >> self.generation
        if m == 0:
            raise AlignmentError(f"generation {self.generation} is finer than the grid (n={n})")
        return tuple(slice(c * m, (c + 1) * m) for c in self.coords)


def dyadic_cubes(Q: Cube, max_gen: int) -> list[tuple[DyadicIndex, Cube]]:
    """All dyadic subcubes of ``Q`` of generations ``0..max_gen``, coarse to fine."""
    if max_gen < 0:
        raise ValueError("max_gen must be nonnegative")
    out = []
    for j in range(max_gen + 1):
        for coords in np.ndindex(*(1 << j,) * Q.dim):
            idx = DyadicIndex(j, coords)
            out.append((idx, idx.cube(Q)))
    return out


def iter_generation(d: int, j: int) -> Iterator[DyadicIndex]:
    for coords in np.ndindex(*(1 << j,) * d):
        yield DyadicIndex(j, coords)


def dilate(R: Cube, gamma: float) -> Cube:
    if not gamma > 0:
        raise ValueError("dilation factor must be positive")
    side = gamma * R.side
    return Cube(tuple(c - 0.5 * side for c in R.center), side)


def reflect_point(Q: Cube, x) -> np.ndarray:
    """Map ``x`` into ``Q`` through the even, ``2*side``-periodic reflection.

    Works on a single point (length-d) or an array of points with the last axis
    of length d.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(Q.origin, dtype=float)
    L = Q.side
    y = np.mod(x - a, 2.0 * L)
    return a + L - np.abs(y - L)


def reflect_index(idx, n: int) -> np.ndarray:
    """Cell-index version of :func:`reflect_point` for a grid with ``n`` cells per side."""
    m = np.mod(np.asarray(idx), 2 * n)
    return np.where(m < n, m, 2 * n - 1 - m)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridFunction:
    cube: Cube
    n: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not _is_power_of_two(self.n):
            raise ValueError(f"cells per side must be a power of two, got {self.n}")
        arr = np.asarray(self.samples, dtype=float)
        expected = (self.n,) * self.cube.dim
        if arr.shape != expected:
            if arr.size == self.n ** self.cube.dim:
                arr = arr.reshape(expected)
            else:
                raise ValueError(f"expected {expected} samples, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_callable(cls, func: Callable[..., np.ndarray], cube: Cube, n: int) -> "GridFunction":
        """Sample ``func(x1, ..., xd)`` at the cell centers (arrays, ``ij`` indexing)."""
        vals = func(*cell_centers(cube, n))
        vals = np.broadcast_to(np.asarray(vals, dtype=float), (n,) * cube.dim)
        return cls(cube, n, np.array(vals))

    @classmethod
    def constant(cls, c: float, cube: Cube, n: int) -> "GridFunction":
        return cls(cube, n, np.full((n,) * cube.dim, float(c)))

    @property
    def dim(self) -> int:
        return self.cube.dim

    @property
    def h(self) -> float:
        return self.cube.side / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def max_gen(self) -> int:
        return int(round(math.log2(self.n)))

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(self.cube, self.n, samples)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.n == other.n and self.cube == other.cube

    def __repr__(self):
        return f"GridFunction({self.cube!r}, n={self.n})"


def check_same_grid(*fs: GridFunction) -> None:
    first = fs[0]
    for g in fs[1:]:
        if not first.same_grid(g):
            raise ValueError(f"grid mismatch: {first!r} vs {g!r}")


def cell_centers(cube: Cube, n: int) -> list[np.ndarray]:
    h = cube.side / n
    axes = [a + h * (np.arange(n) + 0.5) for a in cube.origin]
    return list(np.meshgrid(*axes, indexing="ij"))


def block_mean(values: np.ndarray, j: int) -> np.ndarray:
    """Means of ``values`` over the generation-``j`` dyadic blocks."""
    n = values.shape[0]
    k = 1 << j
    if k > n:
        raise AlignmentError(f"generation {j} is finer than the grid (n={n})")
    m = n // k
    if values.ndim == 1:
        return values.reshape(k, m).mean(axis=1)
    return values.reshape(k, m, k, m).mean(axis=(1, 3))


def block_max(values: np.ndarray, j: int) -> np.ndarray:
    n = values.shape[0]
    k = 1 << j
    m = n // k
    if values.ndim == 1:
        return values.reshape(k, m).max(axis=1)
    return values.reshape(k, m, k, m).max(axis=(1, 3))


def expand_blocks(block_values: np.ndarray, n: int) -> np.ndarray:
    """Broadcast one value per generation-j block back to the ``n``-cell grid."""
    k = block_values.shape[0]
    m = n // k
    out = block_values
    for ax in range(block_values.ndim):
        out = np.repeat(out, m, axis=ax)
    return out


def cell_window(f: GridFunction, R: Cube, reflect: bool = False) -> np.ndarray:
    """Samples of ``f`` on the cells making up the aligned cube ``R``.

    ``R`` may stick out of ``f.cube`` (e.g. a dilate ``3R``) when ``reflect`` is
    set; those cells are read from the even reflection of ``f``.
    """
    start, count = aligned_cells(f, R)
    inside = all(s >= 0 and s + count <= f.n for s in start)
    if not inside and not reflect:
        raise AlignmentError(f"{R!r} leaves {f.cube!r}; pass reflect=True to use the reflected extension")
    if inside:
        return f.samples[tuple(slice(s, s + count) for s in start)]
    idx = [reflect_index(s + np.arange(count), f.n) for s in start]
    return f.samples[np.ix_(*idx)]


def aligned_cells(f: GridFunction, R: Cube) -> tuple[tuple[int, ...], int]:
    """Integer start cell per axis and cells per side of ``R`` on ``f``'s grid."""
    if R.dim != f.dim:
        raise ValueError("dimension mismatch")
    h = f.h
    count_f = R.side / h
    count = int(round(count_f))
    if count < 1 or abs(count_f - count) > _ALIGN_TOL * max(1.0, count_f):
        raise AlignmentError(f"{R!r} is not a whole number of cells of size {h:g}")
    start = []
    for a, b in zip(f.cube.origin, R.origin):
        s_f = (b - a) / h
        s = int(round(s_f))
        if abs(s_f - s) > _ALIGN_TOL * max(1.0, abs(s_f)):
            raise AlignmentError(f"{R!r} is not aligned with the cell grid of {f!r}")
        start.append(s)
    return tuple(start), count


def average(f: GridFunction, R: Cube, p: float | None = None, reflect: bool = False) -> float:
    """Average of ``f`` over ``R``.

    ``p=None`` gives the signed mean; otherwise ``(mean |f|^p)^(1/p)``, with
    ``p=inf`` returning the largest ``|f|`` on ``R``.
    """
    block = cell_window(f, R, reflect=reflect)
    if p is None:
        return float(block.mean())
    return power_mean(block, p)


def power_mean(values: np.ndarray, p: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    if p <= 0:
        raise ValueError("exponent must be positive")
    top = float(a.max()) if a.size else 0.0
    if top == 0:
        return 0.0
    return top * float(np.mean((a / top) ** p) ** (1.0 / p))


def gradient(f: GridFunction) -> list[GridFunction]:
    """Finite-difference partial derivatives: central inside, one-sided at the boundary."""
    if f.n < 2:
        raise ValueError("need at least two cells per side for a gradient")
    parts = np.gradient(f.samples, f.h, edge_order=1)
    if f.dim == 1:
        parts = [parts]
    return [f.with_samples(g) for g in parts]


def gradient_norm(f: GridFunction) -> GridFunction:
    parts = gradient(f)
    sq = sum(g.samples ** 2 for g in parts)
    return f.with_samples(np.sqrt(sq))


def restrict(f: GridFunction, idx: DyadicIndex) -> GridFunction:
    """The samples of ``f`` on a dyadic subcube, as a grid function on that cube."""
    sub = f.samples[idx.cell_slices(f.n)]
    return GridFunction(idx.cube(f.cube), sub.shape[0], np.array(sub))


def cells_of(idx: DyadicIndex, n: int) -> np.ndarray:
    """Boolean mask of the cells inside a dyadic cube."""
    d = len(idx.coords)
    mask = np.zeros((n,) * d, dtype=bool)
    mask[idx.cell_slices(n)] = True
    return mask


def ancestors_within(idx: DyadicIndex, top: DyadicIndex) -> Sequence[DyadicIndex]:
    """Chain ``idx, parent(idx), ..., top``; ``top`` must contain ``idx``."""
    if not top.is_ancestor_of(idx):
        raise ValueError(f"{top} does not contain {idx}")
    chain = [idx]
    while chain[-1].generation > top.generation:
        chain.append(chain[-1].parent())
    return chain
