import numpy as np
import pytest

from srprop.errors import ContractError
from srprop.model import SeparatedRepresentation
from srprop.sobol import (
    factor_ranges,
    factor_variability_table,
    read_sobol_csv,
    sobol_indices,
    write_factor_table_csv,
    write_sobol_csv,
)


def term(d, factors, P=2):
    """Coefficients of one term; ``factors`` maps input index to a coefficient vector."""
    c = np.zeros((d, P))
    c[:, 0] = 1.0
    for i, v in factors.items():
        c[i] = v
    return c


def additive_model(weights, P=2):
    d = len(weights)
    coeffs = np.array([term(d, {i: [0.0, 1.0] + [0.0] * (P - 2)}, P) for i in range(d)])
    return SeparatedRepresentation(np.abs(weights), np.sign(weights)[:, None], coeffs)


def test_single_input_explains_all():
    m = SeparatedRepresentation([1.0], [[1.0]], [term(2, {0: [0, 1]})])
    S = sobol_indices(m, 1_000_000, seeds=(1, 2)).indices[:, 0]
    assert S[0] == pytest.approx(1.0, abs=0.01)
    assert S[1] == pytest.approx(0.0, abs=0.01)


def test_interaction_term():
    # xi_1 + xi_1 xi_2: variance 2, conditional variances 1 and 0
    coeffs = np.array([term(2, {0: [0, 1]}), term(2, {0: [0, 1], 1: [0, 1]})])
    m = SeparatedRepresentation([1.0, 1.0], [[1.0], [1.0]], coeffs)
    res = sobol_indices(m, 1_000_000, seeds=(3, 4))
    assert res.variance[0] == pytest.approx(2.0)
    assert res.indices[0, 0] == pytest.approx(0.5, abs=0.02)
    assert res.indices[1, 0] == pytest.approx(0.0, abs=0.02)


def test_weighted_sum():
    res = sobol_indices(additive_model(np.array([1.0, 2.0])), 1_000_000, seeds=(5, 6))
    np.testing.assert_allclose(res.indices[:, 0], [0.2, 0.8], atol=0.01)


def test_additive_indices_sum_to_one():
    rng = np.random.default_rng(0)
    d, P = 4, 4
    coeffs = np.array([term(d, {i: np.r_[rng.normal(), rng.normal(size=P - 1)]}, P) for i in range(d)])
    m = SeparatedRepresentation(rng.uniform(0.5, 2, d), rng.standard_normal((d, 2)), coeffs)
    S = sobol_indices(m, 1_000_000, seeds=(7, 8)).indices
    np.testing.assert_allclose(S.sum(axis=0), 1.0, atol=0.02)


def test_permutation_equivariance():
    rng = np.random.default_rng(1)
    coeffs = 0.5 * rng.standard_normal((2, 3, 3))
    coeffs[:, :, 0] += 1
    m = SeparatedRepresentation([1.0, 0.7], rng.standard_normal((2, 2)), coeffs)
    order = [2, 0, 1]
    a = sobol_indices(m, 50_000, seeds=(1, 2)).indices
    b = sobol_indices(m.with_permuted_inputs(order), 50_000, seeds=(1, 2)).indices
    # the same draws land in permuted columns, so only the estimator noise differs
    np.testing.assert_allclose(b, a[order], atol=0.03)


def test_estimator_noise_shrinks_like_root_n():
    rng = np.random.default_rng(3)
    coeffs = 0.4 * rng.standard_normal((2, 6, 3))
    coeffs[:, :, 0] += 1
    m = SeparatedRepresentation([1.0, 0.6], rng.standard_normal((2, 2)), coeffs)

    def spread(N):
        runs = [sobol_indices(m, N, seeds=(2 * k + 1, 2 * k + 2)).indices for k in range(20)]
        return np.std(runs, axis=0, ddof=1)

    # one entry's spread is itself uncertain by ~16%, so pool the log ratio over all entries
    ratio = np.exp(np.mean(np.log(spread(4000) / spread(8000))))
    assert np.sqrt(2) * 0.75 <= ratio <= np.sqrt(2) * 1.25


def test_degenerate_qoi_is_flagged():
    coeffs = np.array([term(2, {0: [0, 1]})])
    m = SeparatedRepresentation([1.0], [[1.0, 0.0]], coeffs)
    res = sobol_indices(m, 1000, seeds=(0, 1))
    assert list(res.degenerate) == [False, True]
    np.testing.assert_array_equal(res.indices[:, 1], [0.0, 0.0])


def test_indices_in_noise_band_and_clamped():
    rng = np.random.default_rng(2)
    coeffs = 0.6 * rng.standard_normal((3, 4, 3))
    coeffs[:, :, 0] += 1
    res = sobol_indices(SeparatedRepresentation(rng.uniform(0.5, 1, 3), rng.standard_normal((3, 2)), coeffs),
                        100_000, seeds=(9, 10))
    assert np.all(res.indices >= -0.05) and np.all(res.indices <= 1.05)
    assert res.clamped().min() >= 0 and res.clamped().max() <= 1


def test_contract_errors():
    m = additive_model(np.array([1.0]))
    with pytest.raises(ContractError):
        sobol_indices(m, 1)
    with pytest.raises(ContractError):
        sobol_indices(m, 10, seeds=(3, 3))


def test_sobol_is_deterministic_and_roundtrips(tmp_path):
    m = additive_model(np.array([1.0, -3.0]))
    a = sobol_indices(m, 5000, seeds=(1, 2))
    b = sobol_indices(m, 5000, seeds=(1, 2))
    np.testing.assert_array_equal(a.indices, b.indices)
    write_sobol_csv(a, tmp_path / "s.csv", ["x", "y"], ["out"])
    names, qois, values = read_sobol_csv(tmp_path / "s.csv")
    assert names == ["x", "y"] and qois == ["out"]
    np.testing.assert_array_equal(values, a.indices)
    text = (tmp_path / "s.csv").read_text()
    assert "# n_samples: 5000" in text and "# seed_pair: 1 2" in text


def test_factor_table():
    coeffs = np.array([term(2, {0: [0, 1]})])
    m = SeparatedRepresentation([1.0], [[1.0]], coeffs)
    grid, values = factor_variability_table(m, n_points=9)
    np.testing.assert_allclose(grid, np.linspace(-4, 4, 9))
    np.testing.assert_allclose(values[0, 0], np.abs(grid))
    np.testing.assert_allclose(values[1, 0], 1.0)
    np.testing.assert_allclose(factor_ranges(values)[:, 0], [4.0, 0.0])
    with pytest.raises(ContractError):
        factor_variability_table(m, lo=1.0, hi=-1.0)


def test_factor_table_csv(tmp_path):
    m = additive_model(np.array([1.0, 1.0]))
    grid, values = factor_variability_table(m, n_points=5)
    write_factor_table_csv(grid, values, tmp_path / "f.csv", ["a", "b"])
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["input", "term", "-4.0"]
    assert len(lines) == 1 + 2 * 2
