"""Finite-volume integrated density of states, Lifshitz fits and free/interacting comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from anderson_mp.disorder import DisorderSpec, sample_field
from anderson_mp.eigensolve import count_below, tridiagonalize
from anderson_mp.errors import SizingError, WindowError
from anderson_mp.lattice import LatticeModel
from anderson_mp.workers import ordered_map

CONVOLUTION_CAP = 10**7


@dataclass(frozen=True)
class IdsRecord:
    """Disorder-averaged IDS on one box; ``samples[r]`` is realization ``r``'s curve."""

    L: float
    m: int
    mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray

    @property
    def R(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class IdsCurve:
    energies: np.ndarray
    records: tuple[IdsRecord, ...]
    d: int
    n: int
    h: float

    @property
    def max_density(self) -> float:
        """Total number of states per unit volume, ``h^(-n*d)``."""
        return self.h ** (-self.n * self.d)

    def record(self, L: float | None = None) -> IdsRecord:
        if L is None:
            return max(self.records, key=lambda r: r.L)
        for rec in self.records:
            if math.isclose(rec.L, L):
                return rec
        raise KeyError(f"no IDS record for L={L}")

    def normalized(self, L: float | None = None) -> np.ndarray:
        """Mean IDS as a fraction of all states, ``N * h^(n*d)``, in [0, 1]."""
        return self.record(L).mean / self.max_density


@dataclass(frozen=True)
class LifshitzFit:
    slope: float
    gamma_hat: float
    window_lo: float
    window_hi: float
    residual_rms: float
    E0: float
    points: int
    L: float
    target_slope: float


def _check_energies(energies) -> np.ndarray:
    energies = np.asarray(energies, dtype=float).reshape(-1)
    if len(energies) == 0:
        raise ValueError("energy grid is empty")
    if np.any(np.diff(energies) <= 0):
        raise ValueError("energy grid must be strictly ascending")
    return energies


def _aggregate(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    R = samples.shape[0]
    mean = samples.sum(axis=0) / R
    if R > 1:
        stderr = samples.std(axis=0, ddof=1) / math.sqrt(R)
    else:
        stderr = np.full(samples.shape[1], np.nan)
    return mean, stderr


def realization_ids(
    model: LatticeModel,
    m: int,
    energies,
    spec: DisorderSpec,
    index: int,
    include_interaction: bool = True,
) -> np.ndarray:
    """IDS of one realization on an ``m``-site box: eigenvalue counts per unit volume."""
    energies = _check_energies(energies)
    params = model.params(m)
    field = sample_field(spec, params.single_particle_sites, index)
    H = model.hamiltonian(m, field, include_interaction)
    return count_below(tridiagonalize(H), energies) / params.volume


def paired_ids(
    model: LatticeModel, m: int, energies, spec: DisorderSpec, index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Interacting and free IDS of one realization, built from the same potential."""
    energies = _check_energies(energies)
    params = model.params(m)
    field = sample_field(spec, params.single_particle_sites, index)
    n_int = count_below(tridiagonalize(model.hamiltonian(m, field, True)), energies)
    n_free = count_below(tridiagonalize(model.hamiltonian(m, field, False)), energies)
    return n_int / params.volume, n_free / params.volume


def estimate_ids(
    model: LatticeModel,
    L_list: Sequence[float],
    energies,
    spec: DisorderSpec,
    include_interaction: bool = True,
    workers: int | None = None,
) -> IdsCurve:
    """Mean finite-volume IDS over ``spec.realizations`` disorder samples, per box side."""
    energies = _check_energies(energies)
    ms = [model.sites_for_length(L) for L in L_list]
    for m in ms:
        model.cube(m)
    units = [(m, r) for m in ms for r in range(spec.realizations)]
    results = ordered_map(
        lambda u: realization_ids(model, u[0], energies, spec, u[1], include_interaction),
        units,
        workers,
    )
    records = []
    for k, (L, m) in enumerate(zip(L_list, ms)):
        chunk = results[k * spec.realizations : (k + 1) * spec.realizations]
        samples = np.array(chunk).reshape(spec.realizations, len(energies))
        mean, stderr = _aggregate(samples) if spec.realizations else (
            np.full(len(energies), np.nan),
            np.full(len(energies), np.nan),
        )
        records.append(IdsRecord(float(m * model.h), m, mean, stderr, samples))
    return IdsCurve(energies, tuple(records), model.d, model.n, model.h)


def fit_lifshitz(
    curve: IdsCurve,
    E0: float = 0.0,
    window: tuple[float, float] | None = None,
    ntilde_range: tuple[float, float] = (1e-6, 1e-1),
    L: float | None = None,
) -> LifshitzFit:
    """Least-squares fit of ``log(-log N~) = log(gamma) + s * log(E - E0)``.

    ``N~`` is the IDS normalized to [0, 1].  With an explicit energy
    ``window`` every grid point inside it must have ``0 < N~ < 1``; otherwise
    the window is every grid point above ``E0`` whose ``N~`` lies in
    ``ntilde_range``.  Fits on the largest box unless ``L`` is given.
    """
    rec = curve.record(L)
    E = curve.energies
    nt = rec.mean / curve.max_density
    if window is not None:
        lo, hi = window
        if not lo > E0:
            raise WindowError(f"fit window [{lo}, {hi}] must lie strictly above E0={E0}")
        mask = (E >= lo) & (E <= hi)
        bad = mask & ~((nt > 0) & (nt < 1))
        if np.any(bad):
            listing = ", ".join(f"E={e:.6g} (N~={v:.3g})" for e, v in zip(E[bad], nt[bad]))
            raise WindowError(f"IDS outside (0, 1) inside the fit window: {listing}")
    else:
        lo_n, hi_n = ntilde_range
        mask = (E > E0) & (nt >= lo_n) & (nt <= hi_n) & (nt > 0) & (nt < 1)
    if np.count_nonzero(mask) < 4:
        raise WindowError(
            f"fit window holds {np.count_nonzero(mask)} grid points, at least 4 are required"
        )
    x = np.log(E[mask] - E0)
    y = np.log(-np.log(nt[mask]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return LifshitzFit(
        slope=float(slope),
        gamma_hat=float(np.exp(intercept)),
        window_lo=float(E[mask].min()),
        window_hi=float(E[mask].max()),
        residual_rms=float(np.sqrt(np.mean(resid * resid))),
        E0=float(E0),
        points=int(np.count_nonzero(mask)),
        L=rec.L,
        target_slope=-curve.d / 2.0,
    )


def free_ids_by_convolution(spectrum, n: int, E, cap: int = CONVOLUTION_CAP):
    """Count n-tuples of single-particle levels whose sum is ``<= E``, by full enumeration."""
    values = np.asarray(getattr(spectrum, "values", spectrum), dtype=float)
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(values) ** n > cap:
        raise SizingError(
            f"enumeration of {len(values)}^{n} = {len(values) ** n} tuples exceeds cap {cap}"
        )
    sums = values
    for _ in range(n - 1):
        sums = np.add.outer(sums, values).ravel()
    if np.ndim(E) == 0:
        return int(np.count_nonzero(sums <= E))
    return np.searchsorted(np.sort(sums), np.asarray(E, dtype=float), side="right")


def select_probe_energy(
    curve: IdsCurve, ntilde_range: tuple[float, float] = (1e-3, 1e-2), L: float | None = None
) -> float:
    """Lowest grid energy whose normalized mean IDS falls inside ``ntilde_range``."""
    nt = curve.normalized(L)
    lo, hi = ntilde_range
    hits = np.nonzero((nt >= lo) & (nt <= hi))[0]
    if len(hits) == 0:
        raise WindowError(
            f"no grid energy has normalized IDS in [{lo}, {hi}] (range seen: "
            f"{nt.min():.3g} .. {nt.max():.3g})"
        )
    return float(curve.energies[hits[0]])


@dataclass(frozen=True)
class CompareRow:
    L: float
    m: int
    E_probe: float
    n_int: float
    n_free: float
    delta: float
    stderr: float
    int_samples: np.ndarray
    free_samples: np.ndarray


def compare_free_vs_interacting(
    model: LatticeModel,
    E_probe: float,
    L_list: Sequence[float],
    spec: DisorderSpec,
    workers: int | None = None,
) -> list[CompareRow]:
    """Paired |N_int - N_free| at ``E_probe`` per box side; no verdict attached."""
    if spec.realizations < 1:
        raise ValueError("comparison needs at least one realization")
    ms = [model.sites_for_length(L) for L in L_list]
    for m in ms:
        model.cube(m)
    R = spec.realizations
    units = [(m, r) for m in ms for r in range(R)]
    results = ordered_map(
        lambda u: paired_ids(model, u[0], [E_probe], spec, u[1]), units, workers
    )
    rows = []
    for k, m in enumerate(ms):
        chunk = results[k * R : (k + 1) * R]
        n_int = np.array([c[0][0] for c in chunk])
        n_free = np.array([c[1][0] for c in chunk])
        mean_int = n_int.sum() / R
        mean_free = n_free.sum() / R
        diff = n_free - n_int
        stderr = float(diff.std(ddof=1) / math.sqrt(R)) if R > 1 else float("nan")
        rows.append(
            CompareRow(
                L=float(m * model.h),
                m=m,
                E_probe=float(E_probe),
                n_int=float(mean_int),
                n_free=float(mean_free),
                delta=float(abs(mean_int - mean_free)),
                stderr=stderr,
                int_samples=n_int,
                free_samples=n_free,
            )
        )
    return rows
