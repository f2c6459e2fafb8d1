"""Lower spectral edge: separated tensor-product trial states and ground-energy scans.

A trial state places one compactly supported bump per particle around the
basepoints ``x = C * (1, 2, ..., n*d)``, ``C = r0 + 2*k*m + 1``.  The bumps are
far enough apart that the pair interaction vanishes on the whole support, so
the interacting and free Hamiltonians act identically on the state and its
energy is a sum of single-particle energies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from anderson_mp.disorder import DisorderSpec, sample_field
from anderson_mp.eigensolve import smallest_eigenvalue
from anderson_mp.errors import SizingError
from anderson_mp.lattice import (
    LatticeCube,
    LatticeModel,
    ModelParams,
    build_interaction_diagonal,
    build_laplacian,
    build_potential_diagonal,
    assemble_hamiltonian,
    make_grid,
)
from anderson_mp.workers import ordered_map


@dataclass(frozen=True)
class SeparatedBasepoints:
    n: int
    d: int
    r0: int
    k: int
    m: int
    C: int
    positions: np.ndarray  # (n, d) lattice coordinates

    @property
    def threshold(self) -> int:
        return self.r0 + 2 * self.k * self.m

    @property
    def min_separation(self) -> float:
        if self.n < 2:
            return math.inf
        diff = np.abs(self.positions[:, None, :] - self.positions[None, :, :]).max(axis=2)
        return int(diff[~np.eye(self.n, dtype=bool)].min())

    @property
    def in_separation_set(self) -> bool:
        return self.min_separation > self.threshold


def separated_basepoints(n: int, d: int, r0: int, k: int, m: int) -> SeparatedBasepoints:
    """Basepoints ``C * (1, ..., n*d)`` reshaped to ``n`` particle positions in Z^d."""
    for name, value in (("n", n), ("d", d), ("k", k), ("m", m)):
        if int(value) != value or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
    if int(r0) != r0 or r0 < 0:
        raise ValueError(f"r0 must be a non-negative integer number of sites, got {r0!r}")
    C = int(r0) + 2 * k * m + 1
    positions = (C * np.arange(1, n * d + 1)).reshape(n, d)
    return SeparatedBasepoints(n, d, int(r0), k, m, C, positions)


def support_side(k: int, m: int) -> int:
    """Lattice points per axis of the open cube of radius ``k*m``."""
    return 2 * k * m - 1


def trial_grid_side(basepoints: SeparatedBasepoints) -> int:
    """Grid side that holds every support cube of the basepoints with margin."""
    return basepoints.C * basepoints.n * basepoints.d + basepoints.k * basepoints.m + 2


@dataclass(frozen=True)
class WeylTrialState:
    factors: tuple[np.ndarray, ...]  # unit vectors on the single-particle grid
    vector: np.ndarray
    corners: np.ndarray  # (n, d) first support index per axis
    side: int
    grid_side: int

    def support_mask(self) -> np.ndarray:
        n, d = self.corners.shape
        ok = np.ones((self.grid_side,) * (n * d), dtype=bool)
        for axis, lo in enumerate(self.corners.reshape(-1)):
            sel = np.zeros(self.grid_side, dtype=bool)
            sel[lo : lo + self.side] = True
            shape = [1] * (n * d)
            shape[axis] = self.grid_side
            ok &= sel.reshape(shape)
        return ok.reshape(-1)


def sine_bump(side: int) -> np.ndarray:
    """Ground state of the 1-D Dirichlet stencil on ``side`` sites."""
    return np.sin(np.pi * np.arange(1, side + 1) / (side + 1))


def build_trial_state(cube: LatticeCube, centers, side: int) -> WeylTrialState:
    """Unit tensor product of sine bumps, one ``side^d`` cube per particle.

    ``centers`` is a :class:`SeparatedBasepoints` or an ``(n, d)`` array; each
    support cube spans indices ``c - side//2 .. c - side//2 + side - 1``.
    """
    p = cube.params
    suggestion = None
    if isinstance(centers, SeparatedBasepoints):
        suggestion = trial_grid_side(centers)
        centers = centers.positions
    centers = np.asarray(centers, dtype=int).reshape(p.n, p.d)
    if side < 1:
        raise ValueError("bump side must be positive")
    corners = centers - side // 2
    top = int((corners + side).max())
    if corners.min() < 0 or top > p.m:
        need = max(top, suggestion or 0)
        raise SizingError(
            f"trial supports span [{corners.min()}, {top}) but the grid has {p.m} sites per axis; "
            f"use a grid side of at least {need}"
        )
    bump = sine_bump(side)
    factors = []
    for j in range(p.n):
        f = np.array(1.0)
        for a in range(p.d):
            axis = np.zeros(p.m)
            axis[corners[j, a] : corners[j, a] + side] = bump
            f = np.multiply.outer(f, axis)
        f = f.reshape(-1)
        factors.append(f / np.linalg.norm(f))
    vec = factors[0]
    for f in factors[1:]:
        vec = np.kron(vec, f)
    return WeylTrialState(tuple(factors), vec, corners, side, p.m)


def rayleigh_quotient(H, state) -> tuple[float, float]:
    """``(<v, Hv>/<v, v>, ||Hv||/||v||)`` for a trial state or raw vector."""
    v = np.asarray(getattr(state, "vector", state), dtype=float)
    vv = float(np.dot(v, v))
    if vv == 0.0:
        raise ValueError("trial state is the zero vector")
    Hv = H @ v
    return float(np.dot(v, Hv) / vv), float(np.linalg.norm(Hv) / math.sqrt(vv))


@dataclass(frozen=True)
class WeylProbe:
    k: int
    m: int
    quotient: float
    residual: float
    interaction_energy: float
    interaction_action_max: float
    actions_equal: bool
    free_residual: float
    sum_bound: float
    product_bound: float


def _sites_range(model: LatticeModel) -> int:
    if model.n < 2 or model.kernel.vanishes:
        return 0
    return int(math.floor(model.kernel.r0 / model.h + 1e-12))


def weyl_probe(model: LatticeModel, k: int, m: int, field=None) -> WeylProbe:
    """Build the ``(k, m)`` separated trial state and measure it against H and H0.

    ``field`` holds ``grid_side^d`` potential values, ``None`` meaning V = 0;
    use :func:`weyl_grid_side` to size it.
    """
    bp = separated_basepoints(model.n, model.d, _sites_range(model), k, m)
    G = trial_grid_side(bp)
    cube = make_grid(ModelParams(model.d, model.n, G, model.h), cap=model.dimension_cap)
    values = np.zeros(G ** model.d) if field is None else np.asarray(getattr(field, "values", field))
    lap = build_laplacian(cube)
    bv = build_potential_diagonal(cube, values)
    bu = build_interaction_diagonal(cube, model.kernel, model.norm)
    H = assemble_hamiltonian(lap, bv, bu, True)
    H0 = assemble_hamiltonian(lap, bv, None, False)
    state = build_trial_state(cube, bp, support_side(k, m))
    phi = state.vector
    q, resid = rayleigh_quotient(H, state)
    _, free_resid = rayleigh_quotient(H0, state)
    u_phi = bu * phi
    h_phi, h0_phi = H @ phi, H0 @ phi

    one = make_grid(ModelParams(model.d, 1, G, model.h))
    H1 = assemble_hamiltonian(build_laplacian(one), build_potential_diagonal(one, values), None, False)
    factor_res = [float(np.linalg.norm(H1 @ f)) for f in state.factors]
    return WeylProbe(
        k=k,
        m=m,
        quotient=q,
        residual=resid,
        interaction_energy=float(np.dot(phi, u_phi)),
        interaction_action_max=float(np.max(np.abs(u_phi))),
        actions_equal=bool(np.array_equal(h_phi, h0_phi)),
        free_residual=free_resid,
        sum_bound=float(sum(factor_res)),
        product_bound=float(np.prod(factor_res)),
    )


def weyl_grid_side(model: LatticeModel, k: int, m: int) -> int:
    return trial_grid_side(separated_basepoints(model.n, model.d, _sites_range(model), k, m))


@dataclass(frozen=True)
class EdgeRow:
    L: float
    m: int
    median: float
    iqr: float
    samples: np.ndarray

    @property
    def R(self) -> int:
        return len(self.samples)


def realization_edge(model: LatticeModel, m: int, spec: DisorderSpec, index: int, tol: float) -> float:
    params = model.params(m)
    field = sample_field(spec, params.single_particle_sites, index)
    return smallest_eigenvalue(model.hamiltonian(m, field, True), tol=tol)


def edge_scan(
    model: LatticeModel,
    L_list: Sequence[float],
    spec: DisorderSpec,
    tol: float = 1e-9,
    workers: int | None = None,
) -> list[EdgeRow]:
    """Median and interquartile range of the finite-volume ground energy per box side."""
    if spec.realizations < 1:
        raise ValueError("edge scan needs at least one realization")
    ms = [model.sites_for_length(L) for L in L_list]
    for m in ms:
        model.cube(m)
    R = spec.realizations
    units = [(m, r) for m in ms for r in range(R)]
    energies = ordered_map(lambda u: realization_edge(model, u[0], spec, u[1], tol), units, workers)
    rows = []
    for k, m in enumerate(ms):
        samples = np.array(energies[k * R : (k + 1) * R])
        q1, q2, q3 = np.percentile(samples, [25, 50, 75])
        rows.append(EdgeRow(float(m * model.h), m, float(q2), float(q3 - q1), samples))
    rows.sort(key=lambda r: r.L)
    return rows
