import math

import numpy as np
import pytest

from anderson_mp.disorder import DisorderSpec
from anderson_mp.eigensolve import count_below, dense_spectrum
from anderson_mp.errors import SizingError, WindowError
from anderson_mp.ids import (
    IdsCurve,
    IdsRecord,
    compare_free_vs_interacting,
    estimate_ids,
    fit_lifshitz,
    free_ids_by_convolution,
    paired_ids,
    realization_ids,
    select_probe_energy,
)
from anderson_mp.lattice import InteractionKernel, LatticeModel, laplacian_floor


def synthetic_curve(energies, ntilde, d=1):
    ntilde = np.asarray(ntilde, dtype=float)
    rec = IdsRecord(1.0, 1, ntilde, np.zeros_like(ntilde), ntilde[None, :])
    return IdsCurve(np.asarray(energies, dtype=float), (rec,), d=d, n=1, h=1.0)


ZERO = DisorderSpec("uniform", v_max=0.0, seed=0, realizations=1)


def test_ids_zero_below_dirichlet_floor():
    model = LatticeModel(1, 2, 0.5, InteractionKernel("hard_sphere", 1.0, 0.5))
    spec = DisorderSpec("uniform", seed=3, realizations=4)
    m = 6
    floor = laplacian_floor(1, 2, m, 0.5)
    curve = estimate_ids(model, [m * 0.5], [floor * 0.5, floor * 0.999], spec)
    assert np.all(curve.record().mean == 0)


def test_ids_saturates_above_spectral_bound():
    d, n, h, m = 1, 2, 0.5, 5
    u0, vmax = 1.0, 1.0
    model = LatticeModel(d, n, h, InteractionKernel("hard_sphere", u0, 1.0))
    spec = DisorderSpec("uniform", v_max=vmax, seed=3, realizations=3)
    top = 4 * n * d / h**2 + n * vmax + model.pair_count() * u0
    curve = estimate_ids(model, [m * h], [top + 1e-9], spec)
    assert np.all(curve.record().mean == h ** (-n * d))
    assert np.all(curve.normalized() == 1.0)


def test_ids_closed_form_free_laplacian():
    E = np.linspace(0.0, 4.2, 43)
    curve = estimate_ids(LatticeModel(1, 1, 1.0), [8], E, ZERO)
    levels = 2 - 2 * np.cos(np.arange(1, 9) * np.pi / 9)
    expected = np.array([np.count_nonzero(levels <= e) for e in E]) / 8
    assert np.array_equal(curve.record().samples[0], expected)
    assert np.array_equal(curve.record().mean, expected)


def test_ids_aggregation_is_linear_and_order_free():
    model = LatticeModel(1, 2, 1.0, InteractionKernel("hard_sphere", 1.0, 1.0))
    spec = DisorderSpec("uniform", seed=11, realizations=6)
    E = np.linspace(0.2, 6, 30)
    curve = estimate_ids(model, [5, 7], E, spec, workers=1)
    for rec in curve.records:
        singles = np.array([realization_ids(model, rec.m, E, spec, r) for r in range(6)])
        assert np.array_equal(rec.samples, singles)
        assert np.array_equal(rec.mean, singles.sum(axis=0) / 6)
        assert np.allclose(rec.stderr, singles.std(axis=0, ddof=1) / math.sqrt(6))
    threaded = estimate_ids(model, [5, 7], E, spec, workers=4)
    for a, b in zip(curve.records, threaded.records):
        assert a.mean.tobytes() == b.mean.tobytes()
        assert a.stderr.tobytes() == b.stderr.tobytes()


def test_per_realization_step_function_properties():
    model = LatticeModel(1, 2, 0.5, InteractionKernel("yukawa", 2.0, 1.0))
    spec = DisorderSpec("exponential", rate=1.0, cap=3.0, seed=2, realizations=5)
    E = np.linspace(-1, 40, 200)
    curve = estimate_ids(model, [3.0], E, spec)
    rec = curve.record()
    assert np.all(np.diff(rec.samples, axis=1) >= 0)
    assert np.all(rec.samples[:, -1] == curve.max_density)
    assert np.all((rec.samples >= 0) & (rec.samples <= curve.max_density))
    counts = rec.samples * 3.0**2
    assert np.allclose(counts, np.round(counts))


def test_interacting_ids_never_exceeds_free():
    model = LatticeModel(1, 2, 1.0, InteractionKernel("hard_sphere", 1.5, 2.0))
    spec = DisorderSpec("uniform", seed=4, realizations=10)
    E = np.linspace(0, 8, 161)
    for r in range(10):
        n_int, n_free = paired_ids(model, 7, E, spec, r)
        assert np.all(n_int <= n_free)


def test_estimate_ids_rejects_bad_grid_and_length():
    model = LatticeModel(1, 1, 0.5)
    spec = DisorderSpec(realizations=1)
    with pytest.raises(ValueError):
        estimate_ids(model, [4.0], [1.0, 0.5], spec)
    with pytest.raises(SizingError):
        estimate_ids(model, [4.1], [1.0], spec)
    with pytest.raises(SizingError):
        estimate_ids(LatticeModel(1, 3, 1.0, dimension_cap=100), [5], [1.0], spec)


def test_convolution_examples():
    assert free_ids_by_convolution([1.0, 2.0], 2, 3.0) == 3
    spec = np.array([0.5, 1.5, 4.0])
    assert free_ids_by_convolution(spec, 3, 1.49) == 0
    assert free_ids_by_convolution(spec, 3, 12.0) == 27
    assert list(free_ids_by_convolution(spec, 2, [0.9, 1.0, 3.0])) == [0, 1, 4]


def test_convolution_cap():
    with pytest.raises(SizingError):
        free_ids_by_convolution(np.arange(100.0), 4, 1.0)


@pytest.mark.parametrize("d,n,m", [(1, 2, 6), (1, 2, 10), (1, 3, 5), (2, 2, 4)])
def test_convolution_equals_count_below_on_free_operator(d, n, m):
    rng = np.random.default_rng(m * 10 + n)
    V = rng.random(m**d)
    single = dense_spectrum(LatticeModel(d, 1, 1.0).hamiltonian(m, V))
    H0 = LatticeModel(d, n, 1.0).hamiltonian(m, V, include_interaction=False)
    lo, hi = n * single.values[0], n * single.values[-1]
    for E in rng.uniform(lo - 0.1, hi + 0.1, 25):
        assert free_ids_by_convolution(single, n, E) == count_below(H0, E)


def test_fit_recovers_d1_generator():
    E = np.linspace(0.01, 0.5, 50)
    fit = fit_lifshitz(synthetic_curve(E, np.exp(-2.0 * E**-0.5)), E0=0.0, window=(0.01, 0.5))
    assert fit.slope == pytest.approx(-0.5, abs=1e-10)
    assert fit.gamma_hat == pytest.approx(2.0, rel=1e-10)
    assert fit.residual_rms <= 1e-8
    assert fit.points == 50 and fit.target_slope == -0.5


def test_fit_recovers_d2_generator():
    E = np.linspace(0.05, 1.0, 40)
    fit = fit_lifshitz(synthetic_curve(E, np.exp(-3.0 / E), d=2), window=(0.05, 1.0))
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    assert fit.gamma_hat == pytest.approx(3.0, rel=1e-10)
    assert fit.target_slope == -1.0


def test_fit_with_shifted_edge():
    E = np.linspace(0.3, 1.0, 30)
    fit = fit_lifshitz(synthetic_curve(E, np.exp(-1.5 * (E - 0.2) ** -0.5)), E0=0.2, window=(0.3, 1.0))
    assert fit.slope == pytest.approx(-0.5, abs=1e-10)
    assert fit.gamma_hat == pytest.approx(1.5, rel=1e-10)


def test_fit_default_window_uses_ntilde_range():
    E = np.linspace(0.01, 3.0, 300)
    nt = np.exp(-2.0 * E**-0.5)
    fit = fit_lifshitz(synthetic_curve(E, nt))
    inside = (nt >= 1e-6) & (nt <= 1e-1)
    assert fit.points == np.count_nonzero(inside)
    assert fit.window_lo == E[inside].min() and fit.window_hi == E[inside].max()


def test_fit_window_errors_list_offenders():
    E = np.linspace(0.01, 0.5, 20)
    nt = np.exp(-2.0 * E**-0.5)
    nt[:3] = 0.0
    with pytest.raises(WindowError, match="E=0.01 "):
        fit_lifshitz(synthetic_curve(E, nt), window=(0.01, 0.5))
    with pytest.raises(WindowError, match="strictly above"):
        fit_lifshitz(synthetic_curve(E, nt), E0=0.02, window=(0.01, 0.5))
    with pytest.raises(WindowError, match="at least 4"):
        fit_lifshitz(synthetic_curve(E, nt), window=(0.4, 0.45))
    full = np.ones_like(E)
    with pytest.raises(WindowError):
        fit_lifshitz(synthetic_curve(E, full), window=(0.01, 0.5))


@pytest.mark.parametrize(
    "kernel",
    [InteractionKernel("hard_sphere", 0.0, 1.0), InteractionKernel("hard_sphere", 1.0, 0.0)],
)
def test_compare_vanishing_interaction_gives_zero(kernel):
    model = LatticeModel(1, 2, 1.0, kernel)
    spec = DisorderSpec("uniform", seed=9, realizations=5)
    rows = compare_free_vs_interacting(model, 1.0, [4, 6], spec)
    assert [r.delta for r in rows] == [0.0, 0.0]
    for r in rows:
        assert np.array_equal(r.int_samples, r.free_samples)


def test_compare_rows_are_paired():
    model = LatticeModel(1, 2, 1.0, InteractionKernel("hard_sphere", 1.0, 1.0))
    spec = DisorderSpec("uniform", seed=9, realizations=8)
    rows = compare_free_vs_interacting(model, 1.2, [8, 12], spec)
    for row in rows:
        assert np.all(row.int_samples <= row.free_samples)
        n_int, n_free = paired_ids(model, row.m, [1.2], spec, 3)
        assert row.int_samples[3] == n_int[0] and row.free_samples[3] == n_free[0]
        assert row.delta == abs(row.n_int - row.n_free)


def test_select_probe_energy():
    E = np.linspace(0.1, 1.0, 10)
    nt = np.array([0, 1e-4, 5e-4, 2e-3, 5e-3, 2e-2, 0.1, 0.2, 0.3, 0.4])
    assert select_probe_energy(synthetic_curve(E, nt)) == pytest.approx(0.4)
    with pytest.raises(WindowError):
        select_probe_energy(synthetic_curve(E, nt), (0.5, 0.6))


def test_fit_on_bernoulli_disorder_recovers_half_exponent():
    # with an atom of the potential at zero the edge has no logarithmic correction
    spec = DisorderSpec("bernoulli", v_max=1.0, p=0.5, seed=5, realizations=200)
    curve = estimate_ids(LatticeModel(1, 1, 1.0), [1024], np.linspace(0.002, 1.0, 500), spec)
    fit = fit_lifshitz(curve)
    assert -0.65 <= fit.slope <= -0.35
