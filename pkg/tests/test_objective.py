import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wirtflow import OCTANARY, RandomSource, loss, observe, sample_cdp_ensemble, sample_gaussian_ensemble, \
    wirtinger_gradient
from wirtflow.core import DimensionError, PreconditionError
from wirtflow.objective import (
    expected_gradient,
    expected_hessian,
    gaussian_moment_oracle,
    hessian_blocks,
    hessian_quadratic_form,
    regularity_diagnostic,
)

from conftest import crandn

H = 1e-6


def fd_gradient(ens, y, z):
    """Central differences of the loss along Re z_k and Im z_k."""
    out = np.zeros((2, z.size))
    for k in range(z.size):
        for part, step in enumerate((H, 1j * H)):
            e = np.zeros(z.size, dtype=complex)
            e[k] = step
            out[part, k] = (loss(ens, y, z + e) - loss(ens, y, z - e)) / (2 * H)
    return out


def explicit_gradient(ens, y, z):
    A = ens.matrix()
    total = np.zeros(z.size, dtype=complex)
    for r in range(ens.m):
        a = A[r].conj()
        total += (abs(np.vdot(a, z)) ** 2 - y[r]) * a * np.vdot(a, z)
    return total / ens.m


def instance(kind, seed, n=16):
    g = RandomSource(seed).generator()
    x = crandn(g, n) / np.sqrt(2 * n)
    z = crandn(g, n) / np.sqrt(2 * n)
    if kind == "gaussian":
        ens = sample_gaussian_ensemble(n, 4 * n, g)
    else:
        ens = sample_cdp_ensemble(n, 4, OCTANARY, g)
    return ens, observe(ens, x), x, z


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
@pytest.mark.parametrize("seed", range(3))
def test_gradient_matches_finite_differences(kind, seed):
    ens, y, _, z = instance(kind, seed)
    g = wirtinger_gradient(ens, y, z)
    fd = fd_gradient(ens, y, z)
    assert np.all(np.abs(fd[0] - 2 * g.real) <= 1e-5 * np.abs(2 * g.real) + 1e-10)
    assert np.all(np.abs(fd[1] - 2 * g.imag) <= 1e-5 * np.abs(2 * g.imag) + 1e-10)


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
@pytest.mark.parametrize("n", [1, 7, 32])
def test_matrix_free_gradient_equals_row_sum(kind, n):
    ens, y, _, z = instance(kind, n, n)
    g = wirtinger_gradient(ens, y, z)
    ref = explicit_gradient(ens, y, z)
    assert np.linalg.norm(g - ref) <= 1e-10 * np.linalg.norm(ref)


def test_loss_examples(gen):
    x = crandn(gen, 10)
    ens = sample_gaussian_ensemble(10, 50, gen)
    y = observe(ens, x)
    assert loss(ens, y, x) == 0.0
    assert loss(ens, y, np.exp(2.1j) * x) <= 1e-20 * ens.m * np.max(y) ** 2
    z = crandn(gen, 10)
    w = ens.forward(z)
    assert loss(ens, np.zeros(50), z) == pytest.approx(sum(abs(v) ** 4 for v in w) / 100, rel=1e-12)


def test_gradient_vanishes_at_solution(gen):
    x = crandn(gen, 10)
    for ens in (sample_gaussian_ensemble(10, 50, gen), sample_cdp_ensemble(10, 3, OCTANARY, gen)):
        y = observe(ens, x)
        assert np.linalg.norm(wirtinger_gradient(ens, y, x)) <= 1e-12 * np.linalg.norm(x)


def test_dimension_errors(gen):
    ens = sample_gaussian_ensemble(4, 8, gen)
    with pytest.raises(DimensionError):
        loss(ens, np.zeros(7), np.ones(4))
    with pytest.raises(DimensionError):
        wirtinger_gradient(ens, np.zeros(8), np.ones(3))
    with pytest.raises(PreconditionError):
        loss(ens, -np.ones(8), np.ones(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi), st.sampled_from(["gaussian", "cdp"]))
def test_gradient_phase_equivariance_and_loss_invariance(seed, phi, kind):
    ens, y, _, z = instance(kind, seed, 8)
    g = wirtinger_gradient(ens, y, z)
    rot = np.exp(1j * phi)
    assert np.linalg.norm(wirtinger_gradient(ens, y, rot * z) - rot * g) <= 1e-10 * np.linalg.norm(g)
    assert loss(ens, y, z) >= 0
    assert loss(ens, y, rot * z) == pytest.approx(loss(ens, y, z), rel=1e-12)


# -- expectation oracles ------------------------------------------------------


def test_expected_gradient_examples(unit_x):
    assert np.allclose(expected_gradient(unit_x, unit_x), 0, atol=1e-15)
    assert np.allclose(expected_gradient(unit_x, 2 * unit_x), 12 * unit_x, atol=1e-14)
    with pytest.raises(PreconditionError):
        expected_gradient(2 * unit_x, unit_x)


def test_expected_gradient_monte_carlo(unit_x):
    # one ensemble with m rows averages m independent single-measurement gradients
    g = RandomSource(11).generator()
    z = unit_x + 0.5 * crandn(g, 8) / 4
    ens = sample_gaussian_ensemble(8, 100_000, g)
    mc = wirtinger_gradient(ens, observe(ens, unit_x), z)
    ref = expected_gradient(unit_x, z)
    assert np.linalg.norm(mc - ref) <= 0.05 * np.linalg.norm(ref)


def test_expected_hessian_scalar():
    assert np.allclose(expected_hessian(np.array([1.0])), [[2, 2], [2, 2]])


def test_spectral_matrix_eigengap(unit_x):
    Y = np.eye(8) + 2 * np.outer(unit_x, unit_x.conj())
    w = np.linalg.eigvalsh(Y)
    assert w[-1] == pytest.approx(3.0) and w[-2] == pytest.approx(1.0)
    assert w[-1] / w[-2] == pytest.approx(1 + 2 * np.linalg.norm(unit_x) ** 2)


def test_spectral_matrix_expectation_complex_model(unit_x):
    # circular complex sampling vectors give I + xx^*; I + 2xx^* is the real-valued case
    g = RandomSource(12).generator()
    ens = sample_gaussian_ensemble(8, 200_000, g)
    y = observe(ens, unit_x)
    Ymc = (ens.vectors.T * y) @ ens.vectors.conj() / ens.m
    assert np.linalg.norm(Ymc - (np.eye(8) + np.outer(unit_x, unit_x.conj())), 2) <= 0.1


def test_hessian_monte_carlo():
    g = RandomSource(13).generator()
    x = crandn(g, 4)
    x /= np.linalg.norm(x)
    ens = sample_gaussian_ensemble(4, 400_000, g)
    Hmc = hessian_blocks(ens, observe(ens, x), x)
    assert np.linalg.norm(Hmc - expected_hessian(x), 2) <= 0.1


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
@pytest.mark.parametrize("n", [1, 4, 16])
def test_hessian_quadratic_form_matches_blocks(kind, n):
    ens, y, _, z = instance(kind, 100 + n, n)
    h = crandn(RandomSource(n).generator(), n)
    u = np.concatenate([h, h.conj()])
    dense = np.vdot(u, hessian_blocks(ens, y, z) @ u)
    assert abs(dense.imag) <= 1e-9 * abs(dense.real)
    assert hessian_quadratic_form(ens, y, z, h) == pytest.approx(dense.real, rel=1e-9)
    assert hessian_quadratic_form(ens, y, z, np.zeros(n)) == 0.0


def test_hessian_quadratic_form_expectation(unit_x):
    g = RandomSource(14).generator()
    h = crandn(g, 8)
    ens = sample_gaussian_ensemble(8, 200_000, g)
    mc = hessian_quadratic_form(ens, observe(ens, unit_x), unit_x, h)
    u = np.concatenate([h, h.conj()])
    assert mc == pytest.approx(np.vdot(u, expected_hessian(unit_x) @ u).real, rel=0.05)


def test_gaussian_moment_oracle(unit_x):
    est = gaussian_moment_oracle(unit_x, unit_x, 200_000, RandomSource(15))
    assert abs(est.means["re_uaav_sq"] - 2.0) <= 3 * est.std_errors["re_uaav_sq"]
    assert abs(est.means["abs_av_6"] - 6.0) <= 3 * est.std_errors["abs_av_6"]
    assert abs(est.means["abs_av_4"] - 2.0) <= 3 * est.std_errors["abs_av_4"]
    w = crandn(RandomSource(16).generator(), 8)
    w -= np.vdot(unit_x, w) * unit_x
    w /= np.linalg.norm(w)
    est = gaussian_moment_oracle(w, unit_x, 200_000, RandomSource(17))
    assert abs(est.means["re_uaav_abs_av_sq"]) <= 3 * est.std_errors["re_uaav_abs_av_sq"]


def test_moment_oracle_standard_error_shrinks(unit_x):
    small = gaussian_moment_oracle(unit_x, unit_x, 10_000, RandomSource(18))
    large = gaussian_moment_oracle(unit_x, unit_x, 160_000, RandomSource(18))
    ratio = small.std_errors["abs_av_4"] / large.std_errors["abs_av_4"]
    assert ratio == pytest.approx(4.0, rel=0.25)


# -- regularity ---------------------------------------------------------------


def test_regularity_at_solution(unit_x, gen):
    ens = sample_gaussian_ensemble(8, 160, gen)
    y = observe(ens, unit_x)
    assert regularity_diagnostic(ens, y, unit_x, unit_x, 30, 574) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_regularity_nonpositive_when_alpha_beta_below_four(seed, alpha, beta):
    if alpha * beta >= 4:
        beta = 3.99 / alpha
    g = RandomSource(seed).generator()
    x = crandn(g, 6)
    x /= np.linalg.norm(x)
    ens = sample_gaussian_ensemble(6, 60, g)
    z = x + 0.3 * crandn(g, 6)
    assert regularity_diagnostic(ens, observe(ens, x), x, z, alpha, beta) <= 1e-12
