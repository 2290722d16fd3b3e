import numpy as np
import pytest
from hypothesis import given, strategies as st

from mtensor.core import row
from mtensor.errors import DimensionError
from mtensor.features import (
    Basis1D,
    FeatureMapSet,
    build_cores,
    default_scale,
    eval_basis,
    feature_row,
    parse_basis,
)
from mtensor.selftest import TOY_CORES


def test_eval_basis_examples():
    assert np.array_equal(eval_basis(Basis1D.monomial(2), -1.0, 1.0), [1, -1, 1])
    assert np.array_equal(eval_basis(Basis1D.trig("sin"), 0.0), [1, 0])
    assert np.array_equal(eval_basis(Basis1D.trig("cos"), 0.0), [1, 1])
    assert np.array_equal(eval_basis(Basis1D.monomial(1), 2.0, 0.5), [1, 1])


def test_trig_weight():
    assert np.allclose(eval_basis(Basis1D.trig("sin", 0.1), np.pi / 2), [1, 0.1])


def test_custom_basis():
    b = Basis1D.custom([lambda x: 1.0, np.exp])
    assert b.size == 2
    assert np.allclose(eval_basis(b, 0.0), [1, 1])


@given(st.integers(0, 6), st.floats(-50, 50), st.floats(1e-8, 10))
def test_monomial_scale_homogeneity(d, x, s):
    b = Basis1D.monomial(d)
    assert np.array_equal(eval_basis(b, x, s), eval_basis(b, s * x, 1.0))


def test_build_cores_toy(toy_samples, toy_maps):
    T = build_cores(toy_samples, toy_maps)
    assert T.cdims == (3, 3)
    for c, ref in zip(T.cores, TOY_CORES):
        assert np.array_equal(c, ref)


def test_build_cores_single_sample(toy_maps):
    T = build_cores([[0.0, 1.0]], toy_maps)
    r = feature_row([0.0, 1.0], toy_maps)
    assert T.rdim == 1
    assert all(np.array_equal(a[0], b) for a, b in zip(T.cores, r.factors))


def test_build_cores_rows_match_feature_rows(rng):
    maps = FeatureMapSet([(0, Basis1D.monomial(3)), (2, Basis1D.trig("sin", 0.5)), (1, Basis1D.monomial(1))], scale=0.3)
    X = rng.uniform(-2, 2, (7, 3))
    T = build_cores(X, maps)
    for k in range(7):
        r = feature_row(X[k], maps)
        assert all(np.array_equal(a, b) for a, b in zip(row(T, k).factors, r.factors))
    assert T.cdims == (4, 2, 2)


def test_kuramoto_style_maps():
    n = 4
    maps = FeatureMapSet.per_axis(n, [Basis1D.trig("sin"), Basis1D.trig("cos")])
    T = build_cores(np.zeros((5, n)), maps)
    assert T.order == 2 * n
    assert T.cdims == (2,) * (2 * n)


def test_feature_row_examples(toy_maps):
    r = feature_row([0.0, 1.0], toy_maps)
    assert np.array_equal(r.factors[0], [1, 0, 0])
    assert np.array_equal(r.factors[1], [1, 1, 1])
    trig = FeatureMapSet.per_axis(2, [Basis1D.trig("sin"), Basis1D.trig("cos")])
    r = feature_row([0.0, 0.0], trig)
    assert [f.tolist() for f in r.factors] == [[1, 0], [1, 1], [1, 0], [1, 1]]


def test_feature_row_tiny_scale_is_finite():
    maps = FeatureMapSet.per_axis(3, Basis1D.monomial(4), scale=1e-7)
    r = feature_row([1e12, -1e15, 3e10], maps)
    assert all(np.isfinite(f).all() for f in r.factors)


def test_short_input_is_index_error(toy_maps):
    with pytest.raises(IndexError):
        feature_row([1.0], toy_maps)
    with pytest.raises(IndexError):
        build_cores(np.zeros((3, 1)), toy_maps)


def test_build_cores_needs_matrix(toy_maps):
    with pytest.raises(DimensionError):
        build_cores(np.zeros(2), toy_maps)
    with pytest.raises(DimensionError):
        build_cores(np.zeros((0, 2)), toy_maps)


@pytest.mark.parametrize("n,s", [(1, 1.0), (3, 1.0), (9, 1.0), (10, 1e-7), (100, 1e-7)])
def test_default_scale(n, s):
    assert default_scale(n) == s


def test_default_scale_invalid():
    with pytest.raises(ValueError):
        default_scale(0)


def test_scale_must_be_positive():
    with pytest.raises(ValueError):
        FeatureMapSet([(0, Basis1D.monomial(1))], scale=0.0)


def test_parse_basis():
    assert parse_basis("monomial:4") == [Basis1D.monomial(4)]
    assert parse_basis("poly:2") == [Basis1D.monomial(2)]
    assert parse_basis("trig:0.05") == [Basis1D.trig("sin", 0.05), Basis1D.trig("cos", 0.05)]
    assert parse_basis("cos") == [Basis1D.trig("cos")]
    for bad in ("legendre:3", "monomial:x", "monomial:-1"):
        with pytest.raises(ValueError):
            parse_basis(bad)


def test_maps_dict_round_trip():
    maps = FeatureMapSet.from_spec(3, "monomial:2,trig:0.25", scale=0.5)
    assert maps.cdims == (3, 2, 2) * 3
    back = FeatureMapSet.from_dict(maps.to_dict())
    assert back == maps
    assert hash(back) == hash(maps)
