"""Spectra, eigenvalue counting and ground-state energies of symmetric matrices.

Counting goes through a symmetric tridiagonal form: a matrix that is already
tridiagonal (every 1-D single-particle problem) is read off directly, anything
else up to the dense cap is reduced once by Householder reflections.  Sturm
sequence sign counting then answers any number of shifts against that form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.linalg.lapack
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from anderson_mp.errors import ConvergenceError, SizingError
from anderson_mp.lattice import HamiltonianMatrix

DENSE_CAP = 2000

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SpectrumResult:
    values: np.ndarray
    method: str

    def __len__(self):
        return len(self.values)

    @property
    def minimum(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class TridiagonalForm:
    """Symmetric tridiagonal matrix similar to the source matrix."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.diag)

    def gershgorin(self) -> tuple[float, float]:
        a = np.abs(self.off)
        radius = np.zeros(self.dim)
        radius[:-1] += a
        radius[1:] += a
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))


def _as_matrix(H):
    if isinstance(H, HamiltonianMatrix):
        return H.matrix
    return H


def _dense(H) -> np.ndarray:
    A = _as_matrix(H)
    if sp.issparse(A):
        return A.toarray()
    return np.array(A, dtype=float)


def _dim(H) -> int:
    return _as_matrix(H).shape[0]


def _bandwidth(A) -> int:
    if sp.issparse(A):
        coo = A.tocoo()
        if coo.nnz == 0:
            return 0
        return int(np.max(np.abs(coo.row - coo.col)))
    i, j = np.nonzero(A)
    return int(np.max(np.abs(i - j))) if len(i) else 0


def dense_spectrum(H, cap: int = DENSE_CAP) -> SpectrumResult:
    """All eigenvalues, ascending, by LAPACK ``dsyev`` (tridiagonal reduction + implicit QL/QR)."""
    n = _dim(H)
    if n > cap:
        raise SizingError(f"dense spectrum requested for dimension {n} above the dense cap {cap}")
    values = scipy.linalg.eigh(_dense(H), eigvals_only=True, driver="ev")
    return SpectrumResult(np.sort(values), "dense")


def householder_tridiagonal(A: np.ndarray) -> TridiagonalForm:
    """Reduce a dense symmetric matrix to tridiagonal form (LAPACK ``dsytrd``, blocked Householder)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return TridiagonalForm(np.zeros(0), np.zeros(0))
    lwork = int(scipy.linalg.lapack.dsytrd_lwork(n)[0])
    _, diag, off, _, info = scipy.linalg.lapack.dsytrd(A, lower=1, lwork=max(lwork, 1))
    if info != 0:
        raise ConvergenceError(f"Householder reduction failed (dsytrd info={info})")
    return TridiagonalForm(np.array(diag), np.array(off))


def tridiagonalize(H, cap: int = DENSE_CAP) -> TridiagonalForm:
    """Tridiagonal form of ``H``; read directly when ``H`` already has bandwidth <= 1."""
    if isinstance(H, TridiagonalForm):
        return H
    A = _as_matrix(H)
    n = A.shape[0]
    if _bandwidth(A) <= 1:
        if sp.issparse(A):
            diag = np.asarray(A.diagonal(), dtype=float)
            off = np.asarray(A.diagonal(1), dtype=float)
        else:
            A = np.asarray(A, dtype=float)
            diag, off = np.diagonal(A).copy(), np.diagonal(A, 1).copy()
        return TridiagonalForm(diag, off)
    if n > cap:
        raise SizingError(
            f"Householder reduction requested for dimension {n} above the dense cap {cap}"
        )
    return householder_tridiagonal(_dense(A))


def sturm_count(T: TridiagonalForm, shifts) -> np.ndarray:
    """Number of eigenvalues ``<= E`` of ``T`` for every shift ``E`` (vectorized).

    Uses the LDL^T pivot recurrence ``q_i = (a_i - E) - b_{i-1}^2 / q_{i-1}``;
    pivots with ``|q| <= pivmin`` are replaced by ``-pivmin``, which counts an
    eigenvalue sitting exactly at ``E`` as below it.
    """
    shifts = np.asarray(shifts, dtype=float)
    flat = shifts.reshape(-1)
    off2 = T.off * T.off
    pivmin = _TINY * max(1.0, float(off2.max()) if len(off2) else 1.0)
    count = np.zeros(flat.shape, dtype=np.int64)
    q = T.diag[0] - flat
    q = np.where(np.abs(q) <= pivmin, -pivmin, q)
    count += q < 0
    for i in range(1, T.dim):
        q = (T.diag[i] - flat) - off2[i - 1] / q
        q = np.where(np.abs(q) <= pivmin, -pivmin, q)
        count += q < 0
    return count.reshape(shifts.shape)


def _inertia_below(A: sp.spmatrix, E: float) -> int:
    """Eigenvalues ``<= E`` of sparse symmetric ``A`` from the signs of an LDL^T factorization."""
    n = A.shape[0]
    shift = float(E)
    for _ in range(4):
        M = (A - shift * sp.identity(n, format="csc")).tocsc()
        try:
            lu = spla.splu(
                M,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError:
            shift = np.nextafter(shift, np.inf)
            continue
        if not np.array_equal(lu.perm_r, lu.perm_c):
            raise ConvergenceError("sparse LDL^T factorization needed off-diagonal pivoting")
        return int(np.count_nonzero(lu.U.diagonal() < 0))
    raise ConvergenceError(f"shift {E} is numerically singular")


def count_below(H, E):
    """Number of eigenvalues of ``H`` that are ``<= E``.

    ``H`` may be a :class:`HamiltonianMatrix`, a sparse or dense array, or a
    :class:`TridiagonalForm` (pass one to reuse a reduction across calls).
    ``E`` may be a scalar or an array of shifts.
    """
    scalar = np.ndim(E) == 0
    if isinstance(H, TridiagonalForm) or _dim(H) <= DENSE_CAP or _bandwidth(_as_matrix(H)) <= 1:
        counts = sturm_count(tridiagonalize(H), E)
    else:
        A = sp.csc_matrix(_as_matrix(H))
        counts = np.array([_inertia_below(A, e) for e in np.ravel(E)]).reshape(np.shape(E))
    return int(counts) if scalar else counts


def _multisection(T: TridiagonalForm, tol: float, max_iter: int, points: int = 63) -> float:
    lo, _ = T.gershgorin()
    hi = float(np.min(T.diag))
    lo = min(lo, hi)
    width = hi - lo
    lo -= 1e-12 * max(1.0, abs(lo))
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        grid = np.linspace(lo, hi, points + 2)[1:-1]
        hit = np.nonzero(sturm_count(T, grid) >= 1)[0]
        if len(hit):
            j = hit[0]
            new_hi = grid[j]
            new_lo = grid[j - 1] if j > 0 else lo
        else:
            new_lo, new_hi = grid[-1], hi
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    if hi - lo <= tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"bisection stalled at width {hi - lo:.3e} (initial {width:.3e}) above tol {tol:.3e}",
        bracket=(lo, hi),
    )


def lanczos_smallest(
    A, tol: float = 1e-9, max_steps: int = 600, seed: int = 0
) -> tuple[float, float]:
    """Smallest Ritz value of ``A`` by Lanczos with full reorthogonalization.

    Returns ``(theta, residual)`` where ``residual = |beta_k * y_k[-1]|``
    bounds the distance from ``theta`` to the spectrum.
    """
    A = _as_matrix(A)
    n = A.shape[0]
    steps = min(n, max_steps)
    rng = np.random.Generator(np.random.Philox(key=seed))
    q = rng.standard_normal(n)
    Q = np.zeros((steps, n))
    alpha = np.zeros(steps)
    beta = np.zeros(steps)
    Q[0] = q / np.linalg.norm(q)
    theta, resid = np.inf, np.inf
    for j in range(steps):
        w = A @ Q[j]
        alpha[j] = np.dot(Q[j], w)
        for _ in range(2):
            w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
        b = np.linalg.norm(w)
        vals, vecs = scipy.linalg.eigh_tridiagonal(alpha[: j + 1], beta[:j])
        theta, resid = float(vals[0]), float(abs(b * vecs[-1, 0]))
        if resid <= tol or b <= 1e-14 * max(1.0, abs(theta)) or j + 1 == steps:
            break
        beta[j] = b
        Q[j + 1] = w / b
    return theta, resid


def smallest_eigenvalue(H, tol: float = 1e-9, max_iter: int = 200, cap: int = DENSE_CAP) -> float:
    """Ground-state energy of ``H`` to within ``tol``.

    Up to the dense cap (or for any tridiagonal matrix) this is Sturm-count
    multisection.  Above it, Lanczos with full reorthogonalization is used and
    the result is certified by LDL^T inertia counts at ``theta +- tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if isinstance(H, TridiagonalForm):
        return _multisection(H, tol, max_iter)
    A = _as_matrix(H)
    if A.shape[0] <= cap or _bandwidth(A) <= 1:
        return _multisection(tridiagonalize(A, cap=cap), tol, max_iter)
    A = sp.csc_matrix(A)
    theta, resid = lanczos_smallest(A, tol=tol)
    if resid > tol:
        raise ConvergenceError(
            f"Lanczos residual {resid:.3e} above tol {tol:.3e}",
            bracket=(theta - resid, theta + resid),
        )
    if _inertia_below(A, theta - tol) != 0 or _inertia_below(A, theta + tol) < 1:
        raise ConvergenceError(
            "Lanczos value failed the inertia cross-check", bracket=(theta - tol, theta + tol)
        )
    return theta
