"""Uniform lattices on twisted tori and sign-aware finite differences.

A field sampled on the grid carries an antipodal parity: ``EVEN`` fields are
plain periodic, ``ODD`` fields flip sign when a stencil wraps across an axis
whose twist exponent is 1, i.e. ``f(x + L_i e_i) = (-1)**(a_i * p) f(x)``.

Values are stored component-first with shape ``(m, N_1, ..., N_dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EVEN = 0
ODD = 1

MIN_NODES = 8

_PARITY_NAMES = {EVEN: "even", ODD: "odd"}


def parity_name(p: int) -> str:
    return _PARITY_NAMES[p]


def parse_parity(token: str | int) -> int:
    if token in (EVEN, ODD):
        return int(token)
    for k, v in _PARITY_NAMES.items():
        if token == v:
            return k
    raise ValueError(f"unknown parity {token!r}; expected 'even' or 'odd'")


@dataclass(frozen=True)
class TorusGrid:
    """Lattice on ``Q = prod [0, L_i]`` with face identification up to ``(-1)**a_i``."""

    dim: int
    sizes: tuple[int, ...]
    lengths: tuple[float, ...]
    parities: tuple[int, ...]

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.sizes))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def h_min(self) -> float:
        return min(self.spacings)

    @property
    def h_max(self) -> float:
        return max(self.spacings)

    def coords(self, axis: int) -> np.ndarray:
        return np.arange(self.sizes[axis]) * self.spacings[axis]

    def mesh(self) -> list[np.ndarray]:
        """Node coordinates as ``dim`` arrays of shape ``sizes`` (ij indexing)."""
        return np.meshgrid(*(self.coords(i) for i in range(self.dim)), indexing="ij")

    def wrap_sign(self, axis: int, parity: int) -> float:
        return -1.0 if (self.parities[axis] and parity) else 1.0

    def refined(self, factor: int = 2) -> "TorusGrid":
        return new_grid(self.dim, [n * factor for n in self.sizes], self.lengths, self.parities)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "sizes": list(self.sizes),
            "lengths": list(self.lengths),
            "parities": list(self.parities),
        }


def new_grid(
    dim: int,
    sizes: Sequence[int],
    lengths: Sequence[float] | None = None,
    parities: Sequence[int] | None = None,
) -> TorusGrid:
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    lengths = [1.0] * dim if lengths is None else list(lengths)
    parities = [0] * dim if parities is None else list(parities)
    sizes = list(sizes)
    if not (len(sizes) == len(lengths) == len(parities) == dim):
        raise ValueError("sizes, lengths and parities must each have dim entries")
    for n in sizes:
        if int(n) != n or n < MIN_NODES:
            raise ValueError(f"grid sizes must be integers >= {MIN_NODES}, got {sizes}")
    for L in lengths:
        if not L > 0:
            raise ValueError(f"periods must be positive, got {lengths}")
    for a in parities:
        if a not in (0, 1):
            raise ValueError(f"twist parities must be 0 or 1, got {parities}")
    return TorusGrid(
        dim,
        tuple(int(n) for n in sizes),
        tuple(float(L) for L in lengths),
        tuple(int(a) for a in parities),
    )


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: TorusGrid
    values: np.ndarray
    parity: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == self.grid.dim:
            values = values[np.newaxis]
        if values.shape[1:] != self.grid.sizes:
            raise ValueError(
                f"values shape {values.shape} does not match grid sizes {self.grid.sizes}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "parity", parse_parity(self.parity))

    @property
    def components(self) -> int:
        return self.values.shape[0]

    def component(self, k: int) -> "SampledField":
        return SampledField(self.grid, self.values[k : k + 1], self.parity)

    def scalar(self) -> np.ndarray:
        if self.components != 1:
            raise ValueError(f"expected a scalar field, got m={self.components}")
        return self.values[0]

    def __neg__(self) -> "SampledField":
        return SampledField(self.grid, -self.values, self.parity)

    def __mul__(self, other: "SampledField") -> "SampledField":
        # componentwise product (scalar fields broadcast); parity composes by XOR
        if not isinstance(other, SampledField):
            return SampledField(self.grid, self.values * other, self.parity)
        return SampledField(self.grid, self.values * other.values, self.parity ^ other.parity)

    def __add__(self, other: "SampledField") -> "SampledField":
        if other.parity != self.parity:
            raise ValueError("cannot add fields of different parity")
        return SampledField(self.grid, self.values + other.values, self.parity)

    def __sub__(self, other: "SampledField") -> "SampledField":
        return self + (-other)


def scalar_field(grid: TorusGrid, values: np.ndarray, parity: int) -> SampledField:
    return SampledField(grid, np.asarray(values, dtype=float)[np.newaxis], parity)


def dot(f: SampledField, g: SampledField) -> SampledField:
    """Pointwise inner product over components."""
    return scalar_field(f.grid, np.sum(f.values * g.values, axis=0), f.parity ^ g.parity)


# -- array level stencils ---------------------------------------------------


def shift(values: np.ndarray, grid: TorusGrid, parity: int, axis: int, offset: int) -> np.ndarray:
    """Neighbour samples ``f(j + offset)`` along ``axis`` with the twist sign applied.

    ``values`` has shape ``(m, *sizes)`` (or any leading batch axes).
    """
    if offset not in (1, -1):
        raise ValueError("offset must be +1 or -1")
    ax = values.ndim - grid.dim + axis
    out = np.roll(values, -offset, axis=ax)
    sign = grid.wrap_sign(axis, parity)
    if sign < 0:
        idx = [slice(None)] * values.ndim
        # the wrapped samples land on the last node (offset +1) or the first (offset -1)
        idx[ax] = -1 if offset == 1 else 0
        out[tuple(idx)] *= -1.0
    return out


def _central(values, grid, parity, axis):
    return (shift(values, grid, parity, axis, 1) - shift(values, grid, parity, axis, -1)) / (
        2.0 * grid.spacings[axis]
    )


def _second(values, grid, parity, axis):
    h = grid.spacings[axis]
    return (
        shift(values, grid, parity, axis, 1) - 2.0 * values + shift(values, grid, parity, axis, -1)
    ) / (h * h)


# -- field level operators --------------------------------------------------


def shift_sample(f: SampledField, node: Sequence[int], axis: int, offset: int) -> np.ndarray:
    """The ``m`` samples of the neighbour of ``node``, twist sign included."""
    g = f.grid
    if not 0 <= axis < g.dim:
        raise ValueError(f"axis {axis} out of range for dim {g.dim}")
    node = list(node)
    for i, j in enumerate(node):
        if not 0 <= j < g.sizes[i]:
            raise IndexError(f"node {node} outside grid {g.sizes}")
    j = node[axis] + offset
    sign = 1.0
    if j < 0 or j >= g.sizes[axis]:
        sign = g.wrap_sign(axis, f.parity)
        j %= g.sizes[axis]
    node[axis] = j
    return sign * f.values[(slice(None), *node)]


def diff_central(f: SampledField, axis: int) -> SampledField:
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    return SampledField(f.grid, _central(f.values, f.grid, f.parity, axis), f.parity)


def gradient(f: SampledField) -> np.ndarray:
    """Central-difference gradient, shape ``(dim, m, *sizes)``; parity equals ``f``'s."""
    return np.stack([_central(f.values, f.grid, f.parity, i) for i in range(f.grid.dim)])


def divergence(f: SampledField) -> SampledField:
    """Divergence of a ``dim``-vector field."""
    g = f.grid
    if f.components != g.dim:
        raise ValueError(f"divergence needs m == dim, got m={f.components}")
    out = sum(_central(f.values[i : i + 1], g, f.parity, i) for i in range(g.dim))
    return SampledField(g, out, f.parity)


def laplacian(f: SampledField) -> SampledField:
    g = f.grid
    out = sum(_second(f.values, g, f.parity, i) for i in range(g.dim))
    return SampledField(g, out, f.parity)


def hessian_frobenius_sq(f: SampledField) -> SampledField:
    """Pointwise ``sum_ij |d_i d_j f|^2``: compact stencil on the diagonal, nested central off it."""
    g = f.grid
    total = np.zeros(g.sizes)
    for i in range(g.dim):
        total += np.sum(_second(f.values, g, f.parity, i) ** 2, axis=0)
        di = _central(f.values, g, f.parity, i)
        for j in range(g.dim):
            if j != i:
                total += np.sum(_central(di, g, f.parity, j) ** 2, axis=0)
    return scalar_field(g, total, EVEN)


def integrate(f: SampledField, mask: np.ndarray | None = None) -> float:
    """Rectangle rule over Q, optionally restricted to ``mask``."""
    if f.parity != EVEN:
        raise ValueError("integrand has odd antipodal parity; it is not single-valued on Q")
    v = f.scalar()
    if mask is not None:
        v = np.where(mask, v, 0.0)
    return float(f.grid.cell_volume * np.sum(v))


def erode(mask: np.ndarray, grid: TorusGrid, steps: int = 1) -> np.ndarray:
    """Nodes whose whole ``steps``-wide axis stencil lies inside ``mask``."""
    out = np.asarray(mask, dtype=bool)
    for _ in range(steps):
        cur = out.copy()
        for ax in range(grid.dim):
            cur &= np.roll(out, 1, axis=ax) & np.roll(out, -1, axis=ax)
        out = cur
    return out


def lift_to_periodic(f: SampledField) -> SampledField:
    """Unfold twisted axes: the copy on ``[L_i, 2 L_i)`` carries the wrap sign.

    The result lives on a plain periodic grid with doubled twisted axes, so
    any stencil applied to it and restricted back to the first block must
    reproduce the twisted stencil.
    """
    g = f.grid
    values = f.values
    sizes, lengths = list(g.sizes), list(g.lengths)
    for i in range(g.dim):
        if g.parities[i]:
            ax = values.ndim - g.dim + i
            values = np.concatenate([values, g.wrap_sign(i, f.parity) * values], axis=ax)
            sizes[i] *= 2
            lengths[i] *= 2
    return SampledField(new_grid(g.dim, sizes, lengths, None), values, f.parity)
