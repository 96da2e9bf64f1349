import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from srprop.errors import ContractError, DomainError, ModelFormatError
from srprop.hermite import hermite_table
from srprop.model import (
    SeparatedRepresentation,
    TrainingSet,
    data_norm,
    evaluate,
    load_model,
    load_training_csv,
    model_from_dict,
    model_to_dict,
    relative_residual,
    save_model,
    save_training_csv,
)


def random_model(rng, r=3, d=4, M=2, P=4):
    return SeparatedRepresentation(rng.uniform(0.1, 2, r), rng.normal(size=(r, M)), rng.normal(size=(r, d, P)))


def brute_force_eval(model, xi):
    out = np.zeros(model.M)
    for l in range(model.r):
        prod = 1.0
        for i in range(model.d):
            prod *= hermite_table(model.P, xi[i]) @ model.coeffs[l, i]
        out += model.scales[l] * model.det_factors[l] * prod
    return out


def test_constant_model():
    coeffs = np.zeros((1, 3, 2))
    coeffs[:, :, 0] = 1.0
    m = SeparatedRepresentation([2.0], [[1.0, 0.0, 0.0]], coeffs)
    np.testing.assert_array_equal(evaluate(m, [0.3, -1.0, 7.0]), [2.0, 0.0, 0.0])


def test_separable_monomial():
    m = SeparatedRepresentation([1.0], [[1.0]], [[[0.0, 1.0], [0.0, 1.0]]])
    np.testing.assert_allclose(evaluate(m, [2.0, 3.0]), [6.0])


def test_batch_matches_brute_force():
    rng = np.random.default_rng(0)
    m = random_model(rng)
    X = rng.normal(size=(20, m.d))
    expected = np.array([brute_force_eval(m, x) for x in X])
    np.testing.assert_allclose(m(X), expected, rtol=1e-13, atol=1e-13)


def test_dimension_mismatch():
    m = random_model(np.random.default_rng(1))
    with pytest.raises(ContractError):
        m.evaluate([0.0, 1.0])
    with pytest.raises(ContractError):
        m(np.zeros((3, 5)))


def test_invariants_enforced():
    with pytest.raises(ContractError):
        SeparatedRepresentation(np.zeros(0), np.zeros((0, 1)), np.zeros((0, 1, 1)))
    with pytest.raises(ContractError):
        SeparatedRepresentation([-1.0], [[1.0]], [[[1.0]]])
    with pytest.raises(ContractError):
        SeparatedRepresentation([1.0, 1.0], [[1.0]], [[[1.0]]])
    with pytest.raises(DomainError):
        SeparatedRepresentation([np.nan], [[1.0]], [[[1.0]]])


def test_model_is_immutable():
    m = random_model(np.random.default_rng(2))
    with pytest.raises(ValueError):
        m.coeffs[0, 0, 0] = 5.0


def test_multilinear_in_each_factor():
    rng = np.random.default_rng(3)
    m = random_model(rng)
    X = rng.normal(size=(10, m.d))
    for l in range(m.r):
        for i in range(m.d):
            a, b = rng.normal(size=m.P), rng.normal(size=m.P)
            alpha = rng.normal()

            def with_factor(c):
                coeffs = np.array(m.coeffs)
                coeffs[l, i] = c
                return SeparatedRepresentation(m.scales, m.det_factors, coeffs)(X)

            base = with_factor(np.zeros(m.P))
            lhs = with_factor(a + alpha * b) - base
            rhs = (with_factor(a) - base) + alpha * (with_factor(b) - base)
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_rescaling_invariance():
    rng = np.random.default_rng(4)
    m = random_model(rng)
    X = rng.normal(size=(10, m.d))
    beta = 3.7
    coeffs = np.array(m.coeffs)
    coeffs[1, 2] /= beta
    scales = np.array(m.scales)
    scales[1] *= beta
    np.testing.assert_allclose(SeparatedRepresentation(scales, m.det_factors, coeffs)(X), m(X), atol=1e-12)


def test_data_norm_examples():
    assert data_norm([[3.0, 4.0]]) == 5.0
    assert data_norm([[1.0, 0.0], [0.0, 1.0]]) == 1.0
    R = np.random.default_rng(5).normal(size=(10, 3))
    brute = np.sqrt(sum(R[j, m] ** 2 for j in range(10) for m in range(3)) / 10)
    assert data_norm(R) == pytest.approx(brute, abs=1e-14)


def test_data_norm_errors():
    with pytest.raises(ContractError):
        data_norm(np.zeros((0, 2)))
    with pytest.raises(DomainError):
        data_norm([[np.nan]])


@settings(max_examples=50, deadline=None)
@given(arrays(float, (6, 2), elements=st.floats(-1e3, 1e3)), st.floats(1e-6, 1e3), st.booleans())
def test_data_norm_homogeneous(R, alpha, negate):
    alpha = -alpha if negate else alpha
    assert data_norm(alpha * R) == pytest.approx(abs(alpha) * data_norm(R), rel=1e-12, abs=1e-300)


def test_relative_residual_examples():
    rng = np.random.default_rng(6)
    m = random_model(rng)
    X = rng.normal(size=(30, m.d))
    assert relative_residual(m, TrainingSet(X, m(X))) == pytest.approx(0.0, abs=1e-15)
    zero = SeparatedRepresentation(m.scales * 0, m.det_factors, m.coeffs)
    assert relative_residual(zero, TrainingSet(X, m(X))) == pytest.approx(1.0)
    with pytest.raises(ZeroDivisionError):
        relative_residual(m, TrainingSet(X, np.zeros((30, 2))))


def test_training_set_validation():
    with pytest.raises(ContractError):
        TrainingSet(np.zeros((3, 2)), np.zeros((4, 1)))
    with pytest.raises(DomainError):
        TrainingSet([[np.inf]], [[0.0]])
    t = TrainingSet(np.zeros((5, 2)), np.ones((5, 3)), rng_seed=9)
    assert (t.N, t.d, t.M, t.rng_seed) == (5, 2, 3, 9)
    assert t.subset(slice(0, 2)).N == 2


def test_model_roundtrip(tmp_path):
    m = random_model(np.random.default_rng(7))
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back == m
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["format"] == "srprop-model" and doc["version"] == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_dict_roundtrip_property(r, d, M, P, seed):
    m = random_model(np.random.default_rng(seed), r, d, M, P)
    assert model_from_dict(json.loads(json.dumps(model_to_dict(m)))) == m


def test_rank_zero_file_rejected(tmp_path):
    doc = model_to_dict(random_model(np.random.default_rng(8)))
    doc["r"] = 0
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match=r"\$\.r"):
        load_model(tmp_path / "bad.json")


def test_truncated_file_reports_location(tmp_path):
    m = random_model(np.random.default_rng(9))
    save_model(m, tmp_path / "m.json")
    text = (tmp_path / "m.json").read_text()
    (tmp_path / "cut.json").write_text(text[: len(text) // 2])
    with pytest.raises(ModelFormatError, match="cut.json:"):
        load_model(tmp_path / "cut.json")


def test_version_mismatch_and_bad_entries():
    doc = model_to_dict(random_model(np.random.default_rng(10)))
    with pytest.raises(ModelFormatError, match="version"):
        model_from_dict(dict(doc, version=2))
    with pytest.raises(ModelFormatError, match=r"coeffs\[3\]"):
        model_from_dict(dict(doc, coeffs=doc["coeffs"][:3] + ["x"] + doc["coeffs"][4:]))
    with pytest.raises(ModelFormatError):
        model_from_dict(dict(doc, scales=doc["scales"][:-1]))


def test_training_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    t = TrainingSet(rng.normal(size=(7, 3)), rng.normal(size=(7, 2)) * 1e-17)
    save_training_csv(t, tmp_path / "t.csv")
    back = load_training_csv(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.inputs, t.inputs)
    np.testing.assert_array_equal(back.outputs, t.outputs)
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "xi_1,xi_2,xi_3,q_1,q_2"


def test_training_csv_errors(tmp_path):
    (tmp_path / "a.csv").write_text("xi_1,q_1\n1.0,2.0\n3.0\n")
    with pytest.raises(ModelFormatError, match="a.csv:3"):
        load_training_csv(tmp_path / "a.csv")
    (tmp_path / "b.csv").write_text("x,y\n1,2\n")
    with pytest.raises(ModelFormatError, match="b.csv:1"):
        load_training_csv(tmp_path / "b.csv")


def test_permuted_inputs():
    rng = np.random.default_rng(12)
    m = random_model(rng)
    X = rng.normal(size=(5, m.d))
    order = [2, 0, 3, 1]
    np.testing.assert_allclose(m.with_permuted_inputs(order)(X[:, order]), m(X), atol=1e-13)
