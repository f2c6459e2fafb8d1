"""Finite-difference Dirichlet discretization of the n-particle Hamiltonian.

The n-particle configuration space (Z^d)^n restricted to a cube of ``m``
interior sites per axis is enumerated row-major over the ``n*d`` integer
coordinates, particle 1 slowest.  Site coordinate ``c`` sits at position
``h*(c + 1)``, so the Dirichlet zero boundary lies one spacing outside the
stored grid and is never represented.

    H = -Laplacian + U + V

with ``V(x) = sum_i V(x_i)`` and ``U(x) = sum_{i<j} U(|x_i - x_j|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from anderson_mp.errors import SizingError

DEFAULT_DIMENSION_CAP = 2_000_000

NORMS = ("max", "euclidean")


@dataclass(frozen=True)
class ModelParams:
    """Size of one finite-volume problem."""

    d: int
    n: int
    m: int
    h: float = 1.0

    def __post_init__(self):
        for name in ("d", "n", "m"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"h must be a positive finite spacing, got {self.h!r}")

    @property
    def axes(self) -> int:
        return self.n * self.d

    @property
    def dim(self) -> int:
        return self.m ** self.axes

    @property
    def side(self) -> float:
        return self.m * self.h

    @property
    def volume(self) -> float:
        return self.side ** self.axes

    @property
    def single_particle_sites(self) -> int:
        return self.m ** self.d


@dataclass(frozen=True)
class LatticeCube:
    params: ModelParams

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.params.m,) * self.params.axes

    @property
    def dim(self) -> int:
        return self.params.dim

    def index(self, coords) -> np.ndarray:
        """Flat index of coordinate tuples, shape ``(..., n*d)``."""
        coords = np.asarray(coords)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.shape)

    def coords(self, flat) -> np.ndarray:
        """Coordinate tuples for flat indices, shape ``(..., n*d)``."""
        return np.stack(np.unravel_index(np.asarray(flat), self.shape), axis=-1)

    def positions(self, flat) -> np.ndarray:
        return self.params.h * (self.coords(flat) + 1)

    @cached_property
    def particle_coords(self) -> np.ndarray:
        """Integer coordinates of every configuration, shape ``(dim, n, d)``."""
        p = self.params
        grid = np.stack(np.unravel_index(np.arange(p.dim), self.shape), axis=-1)
        return grid.reshape(p.dim, p.n, p.d)

    @cached_property
    def particle_sites(self) -> np.ndarray:
        """Single-particle flat site index of each particle, shape ``(dim, n)``."""
        p = self.params
        pc = self.particle_coords
        return np.ravel_multi_index(tuple(np.moveaxis(pc, -1, 0)), (p.m,) * p.d)


def make_grid(params: ModelParams, cap: int = DEFAULT_DIMENSION_CAP) -> LatticeCube:
    """Validate the problem size and return its lattice cube."""
    if params.dim > cap:
        raise SizingError(
            f"lattice dimension m^(n*d) = {params.m}^{params.axes} = {params.dim} "
            f"exceeds the dimension cap {cap}"
        )
    return LatticeCube(params)


@dataclass(frozen=True)
class InteractionKernel:
    """Non-negative pair interaction with an exact cutoff at ``r0``.

    ``kind`` is one of ``"hard_sphere"`` (``u0`` on ``r <= r0``),
    ``"yukawa"`` (softened, bounded: ``u0 * exp(-r/s) / (1 + r/s)`` on
    ``r <= r0``) or ``"table"`` (piecewise constant: ``table`` is a sequence
    of ``(r_upper, value)`` steps, ascending in ``r_upper``).  A range
    ``r0 == 0`` means an empty support, i.e. no interaction at all.
    """

    kind: str = "hard_sphere"
    u0: float = 1.0
    r0: float = 1.0
    screening: float = 1.0
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("hard_sphere", "yukawa", "table"):
            raise ValueError(f"unknown interaction kind {self.kind!r}")
        if not (self.u0 >= 0 and math.isfinite(self.u0)):
            raise ValueError(f"interaction amplitude u0 must be finite and >= 0, got {self.u0!r}")
        if not (self.r0 >= 0 and math.isfinite(self.r0)):
            raise ValueError(f"interaction range r0 must be finite and >= 0, got {self.r0!r}")
        if self.kind == "yukawa" and not self.screening > 0:
            raise ValueError("yukawa screening length must be positive")
        if self.kind == "table":
            table = tuple((float(r), float(v)) for r, v in self.table)
            if not table:
                raise ValueError("table kernel needs at least one (r_upper, value) step")
            rs = [r for r, _ in table]
            if any(b <= a for a, b in zip(rs, rs[1:])):
                raise ValueError("table breakpoints must be strictly ascending")
            if any(v < 0 or not math.isfinite(v) for _, v in table):
                raise ValueError("table values must be finite and >= 0")
            if rs[-1] > self.r0:
                raise ValueError("table breakpoints must not exceed r0")
            object.__setattr__(self, "table", table)

    @classmethod
    def none(cls) -> "InteractionKernel":
        return cls("hard_sphere", u0=0.0, r0=0.0)

    @property
    def vanishes(self) -> bool:
        return self.u0 == 0 or self.r0 == 0

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if self.vanishes:
            return out
        inside = r <= self.r0
        if self.kind == "hard_sphere":
            out[inside] = self.u0
        elif self.kind == "yukawa":
            x = r[inside] / self.screening
            out[inside] = self.u0 * np.exp(-x) / (1.0 + x)
        else:
            breaks = np.array([b for b, _ in self.table])
            values = np.array([v for _, v in self.table])
            slot = np.searchsorted(breaks, r, side="left")
            ok = inside & (slot < len(breaks))
            out[ok] = self.u0 * values[slot[ok]]
        return out


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Sparse symmetric matrix of a discretized operator plus its provenance."""

    matrix: sp.csr_matrix
    cube: LatticeCube | None = None
    includes_interaction: bool = False
    label: str = "hamiltonian"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __matmul__(self, other):
        return self.matrix @ other

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def build_laplacian(cube: LatticeCube) -> HamiltonianMatrix:
    """Dirichlet central-difference ``-Laplacian`` on the cube, scaled by 1/h^2.

    Diagonal entries are exactly ``2*n*d/h^2`` and every off-diagonal entry is
    exactly ``-1/h^2``; the matrix is the Kronecker sum of ``n*d`` copies of
    the 1-D tridiagonal stencil.
    """
    p = cube.params
    dim = p.dim
    inv_h2 = 1.0 / (p.h * p.h)
    flat = np.arange(dim)
    coords = np.unravel_index(flat, cube.shape)
    rows, cols = [], []
    stride = 1
    for axis in reversed(range(p.axes)):
        has_next = coords[axis] < p.m - 1
        src = flat[has_next]
        rows += [src, src + stride]
        cols += [src + stride, src]
        stride *= p.m
    rows.append(flat)
    cols.append(flat)
    n_off = sum(len(r) for r in rows[:-1])
    data = np.empty(n_off + dim)
    data[:n_off] = -inv_h2
    data[n_off:] = 2.0 * p.axes * inv_h2
    mat = sp.coo_matrix(
        (data, (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    mat.sort_indices()
    return HamiltonianMatrix(mat, cube, includes_interaction=False, label="laplacian")


def _field_values(cube: LatticeCube, field) -> np.ndarray:
    values = np.asarray(getattr(field, "values", field), dtype=float)
    expected = cube.params.single_particle_sites
    if values.shape != (expected,):
        raise ValueError(
            f"potential field has {values.size} values, expected m^d = {expected}"
        )
    return values


def build_potential_diagonal(cube: LatticeCube, field) -> np.ndarray:
    """Diagonal of the external potential, ``V(x_1) + ... + V(x_n)``.

    ``field`` is a :class:`~anderson_mp.disorder.PotentialField` or an array
    of ``m^d`` single-particle values.  Per-configuration terms are summed in
    sorted order so the result is exactly invariant under particle exchange.
    """
    values = _field_values(cube, field)
    terms = values[cube.particle_sites]
    terms.sort(axis=1)
    return terms.sum(axis=1)


def pair_distances(cube: LatticeCube, norm: str = "max") -> tuple[list[tuple[int, int]], np.ndarray]:
    """Physical distances for every particle pair, shape ``(pairs, dim)``."""
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
    p = cube.params
    pc = cube.particle_coords
    pairs = [(i, j) for i in range(p.n) for j in range(i + 1, p.n)]
    dist = np.empty((len(pairs), p.dim))
    for k, (i, j) in enumerate(pairs):
        diff = np.abs(pc[:, i, :] - pc[:, j, :])
        if norm == "max":
            dist[k] = p.h * diff.max(axis=1)
        else:
            dist[k] = p.h * np.sqrt((diff * diff).sum(axis=1))
    return pairs, dist


def build_interaction_diagonal(
    cube: LatticeCube, kernel: InteractionKernel, norm: str = "max"
) -> np.ndarray:
    """Diagonal of the pair interaction ``sum_{i<j} U(|x_i - x_j|)``."""
    p = cube.params
    if p.n < 2 or kernel.vanishes:
        return np.zeros(p.dim)
    _, dist = pair_distances(cube, norm)
    terms = kernel(dist)
    terms.sort(axis=0)
    return terms.sum(axis=0)


def assemble_hamiltonian(
    laplacian: HamiltonianMatrix,
    bv,
    bu=None,
    include_interaction: bool = True,
) -> HamiltonianMatrix:
    """``laplacian + diag(bv) + [include_interaction] * diag(bu)``.

    The diagonal is formed as ``(laplacian + bv) + bu`` so that wherever
    ``bu`` is zero the entry is bit-identical to the non-interacting one.
    """
    dim = laplacian.dim
    bv = np.asarray(bv, dtype=float)
    if bv.shape != (dim,):
        raise ValueError(f"potential diagonal has shape {bv.shape}, expected ({dim},)")
    if np.any(bv < 0):
        raise ValueError("potential diagonal must be non-negative")
    diag = laplacian.diagonal() + bv
    use_u = include_interaction and bu is not None
    if use_u:
        bu = np.asarray(bu, dtype=float)
        if bu.shape != (dim,):
            raise ValueError(f"interaction diagonal has shape {bu.shape}, expected ({dim},)")
        if np.any(bu < 0):
            raise ValueError("interaction diagonal must be non-negative")
        diag = diag + bu
    mat = laplacian.matrix.copy()
    mat.setdiag(diag)
    return HamiltonianMatrix(
        mat, laplacian.cube, includes_interaction=use_u, label="hamiltonian"
    )


@dataclass(frozen=True)
class LatticeModel:
    """Physical model shared by every volume of an experiment."""

    d: int = 1
    n: int = 1
    h: float = 1.0
    kernel: InteractionKernel = field(default_factory=InteractionKernel.none)
    norm: str = "max"
    dimension_cap: int = DEFAULT_DIMENSION_CAP

    def __post_init__(self):
        ModelParams(self.d, self.n, 1, self.h)
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")

    def sites_for_length(self, L: float) -> int:
        """Interior sites per axis for a box of side ``L``; must be an integer."""
        ratio = L / self.h
        m = round(ratio)
        if m < 1 or not math.isclose(ratio, m, rel_tol=1e-12, abs_tol=1e-12):
            raise SizingError(f"side length L={L} is not a positive integer multiple of h={self.h}")
        return int(m)

    def params(self, m: int) -> ModelParams:
        return ModelParams(self.d, self.n, int(m), self.h)

    def cube(self, m: int) -> LatticeCube:
        return make_grid(self.params(m), cap=self.dimension_cap)

    def hamiltonian(self, m: int, field, include_interaction: bool = True) -> HamiltonianMatrix:
        cube = self.cube(m)
        lap = build_laplacian(cube)
        bv = build_potential_diagonal(cube, field)
        bu = None
        if include_interaction:
            bu = build_interaction_diagonal(cube, self.kernel, self.norm)
        return assemble_hamiltonian(lap, bv, bu, include_interaction)

    def pair_count(self) -> int:
        return self.n * (self.n - 1) // 2


def laplacian_floor(d: int, n: int, m: int, h: float = 1.0) -> float:
    """Smallest eigenvalue of the Dirichlet lattice Laplacian on ``m^(n*d)`` sites."""
    return 2.0 * n * d * (1.0 - math.cos(math.pi / (m + 1))) / (h * h)


def laplacian_spectrum_1d(m: int, h: float = 1.0) -> np.ndarray:
    k = np.arange(1, m + 1)
    return (2.0 - 2.0 * np.cos(k * np.pi / (m + 1))) / (h * h)


def permute_particles(cube: LatticeCube, perm: Sequence[int]) -> np.ndarray:
    """Flat-index map of the particle permutation: configuration ``x`` goes to ``x o perm``."""
    p = cube.params
    pc = cube.particle_coords[:, list(perm), :]
    return cube.index(pc.reshape(p.dim, p.axes))
