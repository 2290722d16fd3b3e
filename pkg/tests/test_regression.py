import numpy as np
import pytest

from mtensor import dense
from mtensor.core import MTensor, mprod, unfold_mode1
from mtensor.errors import CapacityError, ConditioningError, DimensionError
from mtensor.features import Basis1D, FeatureMapSet, build_cores
from mtensor.regression import (
    RegressionModel,
    coefficients_dense,
    fit,
    fit_ali,
    fit_least_squares,
    fit_spectral,
    fit_tikhonov,
    kernel_eval,
    load_model,
    parse_regularizer,
    predict,
    predict_many,
    save_model,
)
from mtensor.selftest import check_lstsq_equivalence

TOY_Z = [-0.588, 1.647, 0.647]
TOY_COEFFS = [1.706, 2.235, 1.059, 1.235, -0.588, 0.588, 0.059, 0.588, -0.588]


@pytest.fixture
def toy_model(toy_samples, toy_y, toy_maps):
    return fit(toy_samples, toy_y, toy_maps, "ls")


# -- least squares ------------------------------------------------------------


def test_least_squares_toy_dual(toy, toy_y):
    M = fit_least_squares(toy, toy_y)
    assert M.dual.shape == (3, 1)
    assert np.allclose(M.dual[:, 0], TOY_Z, atol=1e-3)
    assert M.diagnostics["fit_residual"] < 1e-14


def test_least_squares_zero_targets(toy):
    assert not fit_least_squares(toy, np.zeros(3)).dual.any()


def test_least_squares_multi_output(toy, rng):
    Y = rng.uniform(size=(3, 4))
    M = fit_least_squares(toy, Y)
    for d in range(4):
        assert np.allclose(M.dual[:, d], fit_least_squares(toy, Y[:, d]).dual[:, 0], atol=1e-14)


def test_least_squares_singular_reports_pivot():
    T = MTensor([np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 1.0]])])
    with pytest.raises(ConditioningError) as exc:
        fit_least_squares(T, np.ones(3))
    assert exc.value.pivot == 1
    assert "pivot 1" in str(exc.value)


def test_least_squares_jitter_opt_in():
    T = MTensor([np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 1.0]])])
    M = fit_least_squares(T, np.ones(3), jitter=True)
    assert M.diagnostics["jitter"] > 0


def test_target_shape_checked(toy):
    with pytest.raises(DimensionError):
        fit_least_squares(toy, np.ones(4))


def test_interpolation_residual(rng):
    T = MTensor(dense.random_cores(rng, 5, [3, 3]))
    y = rng.uniform(size=5)
    M = fit_least_squares(T, y)
    pred = unfold_mode1(T) @ (unfold_mode1(T).T @ M.dual[:, 0])
    assert np.linalg.norm(pred - y) / np.linalg.norm(y) < 1e-8


def test_matrix_equivalence_suite():
    g = check_lstsq_equivalence(200)
    assert g.ok, g.failures[:10]


# -- Tikhonov -------------------------------------------------------------------


def test_tikhonov_zero_is_least_squares(toy, toy_y):
    assert np.allclose(fit_tikhonov(toy, toy_y, 0.0).dual, fit_least_squares(toy, toy_y).dual, atol=1e-10, rtol=0)


def test_tikhonov_one_residual(toy, toy_y):
    z = fit_tikhonov(toy, toy_y, 1.0).dual[:, 0]
    A = np.array([[10.0, 1, 1], [1, 4, 1], [1, 1, 4]])
    assert np.linalg.norm(A @ z - toy_y) < 1e-10


def test_tikhonov_shrinks(toy, toy_y):
    norms = [np.linalg.norm(fit_tikhonov(toy, toy_y, lam).dual) for lam in (1.0, 10.0, 100.0)]
    assert norms[0] > norms[1] > norms[2]


def test_tikhonov_negative_rejected(toy, toy_y):
    with pytest.raises(ValueError):
        fit_tikhonov(toy, toy_y, -1.0)


def test_tikhonov_handles_singular_gram():
    T = MTensor([np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 1.0]])])
    M = fit_tikhonov(T, np.ones(3), 0.1)
    assert np.isfinite(M.dual).all()


# -- spectral -------------------------------------------------------------------


def test_spectral_full_rank_is_least_squares(toy, toy_y):
    assert np.allclose(fit_spectral(toy, toy_y, rank=3).dual, fit_least_squares(toy, toy_y).dual, atol=1e-10, rtol=0)


@pytest.mark.parametrize("r", [1, 2])
def test_spectral_in_top_eigenspace(toy, toy_y, r):
    Z = fit_spectral(toy, toy_y, rank=r).dual
    lam, U = np.linalg.eigh(mprod(toy, toy))
    Ur = U[:, ::-1][:, :r]
    assert np.abs(Z - Ur @ (Ur.T @ Z)).max() < 1e-10


def test_spectral_tau(toy, toy_y):
    lam = np.linalg.eigvalsh(mprod(toy, toy))[::-1]
    sig = np.sqrt(lam)
    M = fit_spectral(toy, toy_y, tau=(sig[0] + sig[1]) / 2)
    assert M.regularizer["rank"] == 1
    assert fit_spectral(toy, toy_y, tau=0.0).regularizer["rank"] == 3
    with pytest.raises(ValueError):
        fit_spectral(toy, toy_y, tau=sig[0] * 1.01)


@pytest.mark.parametrize("r", [0, 4])
def test_spectral_rank_out_of_range(toy, toy_y, r):
    with pytest.raises(ValueError):
        fit_spectral(toy, toy_y, rank=r)


def test_spectral_needs_one_of_rank_tau(toy, toy_y):
    with pytest.raises(ValueError):
        fit_spectral(toy, toy_y)
    with pytest.raises(ValueError):
        fit_spectral(toy, toy_y, rank=1, tau=1.0)


# -- ALI ------------------------------------------------------------------------


def test_ali_tiny_eps_is_least_squares(toy, toy_y):
    M = fit_ali(toy, toy_y, 1e-12)
    assert M.diagnostics["retained_rows"] == 3
    assert np.allclose(M.dual, fit_least_squares(toy, toy_y).dual, atol=1e-9, rtol=0)


@pytest.mark.parametrize("mode", ["greedy", "optimal"])
def test_ali_large_eps_keeps_one_row(toy, toy_y, mode):
    M = fit_ali(toy, toy_y, 100.0, mode)
    assert M.operator.rdim == 1
    assert M.dual.shape == (1, 1)
    assert np.isclose(M.dual[0, 0], toy_y[0] / 9)


def test_ali_rows_regularizer(rng):
    maps = FeatureMapSet.per_axis(3, Basis1D.monomial(2))
    X = rng.uniform(-1, 1, (60, 3))
    M = fit(X, X.sum(axis=1), maps, "ali:rows=7")
    assert M.operator.rdim == 7
    assert M.samples.shape == (7, 3)


# -- prediction and kernel ------------------------------------------------------


def test_predict_interpolates_toy(toy_model):
    assert np.isclose(predict(toy_model, [0.0, 1.0])[0], 5.0, atol=1e-12)
    assert np.isclose(predict(toy_model, [-1.0, -1.0])[0], -3.0, atol=1e-12)
    assert predict(toy_model, [0.3, -0.2]).shape == (1,)


def test_predict_zero_dual(toy, toy_maps):
    M = RegressionModel(toy, np.zeros((3, 1)), toy_maps)
    assert predict(M, [0.7, -2.0])[0] == 0.0


def test_predict_short_input(toy_model):
    with pytest.raises(IndexError):
        predict(toy_model, [1.0])


def test_predict_many_matches_predict(toy_model, rng):
    X = rng.uniform(-2, 2, (6, 2))
    many = predict_many(toy_model, X)
    assert np.allclose(many[:, 0], [predict(toy_model, x)[0] for x in X], rtol=1e-13)


def test_predict_needs_maps(toy, toy_y):
    with pytest.raises(ValueError):
        predict(fit_least_squares(toy, toy_y), [0.0, 0.0])


def test_kernel_eval_examples(toy_maps):
    assert kernel_eval([-1, -1], [0, 1], toy_maps) == 1.0
    x, x2 = [0.3, -1.2], [2.0, 0.5]
    assert kernel_eval(x, x2, toy_maps) == kernel_eval(x2, x, toy_maps)
    from mtensor.features import feature_row

    r = feature_row(x, toy_maps).dense()
    assert np.isclose(kernel_eval(x, x, toy_maps), r @ r)


def test_kernel_matches_gram(rng):
    maps = FeatureMapSet([(0, Basis1D.monomial(3)), (1, Basis1D.trig("cos", 0.5)), (1, Basis1D.monomial(1))])
    X = rng.uniform(-1, 1, (5, 2))
    P = mprod(build_cores(X, maps), build_cores(X, maps))
    K = np.array([[kernel_eval(a, b, maps) for b in X] for a in X])
    assert np.allclose(P, K, rtol=1e-12, atol=1e-12)


def test_kernel_short_input(toy_maps):
    with pytest.raises(IndexError):
        kernel_eval([1.0], [1.0, 2.0], toy_maps)


# -- dense coefficients ----------------------------------------------------------


def test_coefficients_toy(toy_model, toy, toy_y):
    C = coefficients_dense(toy_model)
    assert C.shape == (3, 3)
    assert abs(C[0, 0] - 1.706) < 1e-3
    assert np.allclose(np.sort(C.ravel()), np.sort(TOY_COEFFS), atol=1e-3)
    ref = dense.dense_lstsq(unfold_mode1(toy), toy_y)
    assert np.allclose(C.ravel(), ref, atol=1e-12)


def test_coefficients_zero_dual(toy):
    assert not coefficients_dense(RegressionModel(toy, np.zeros((3, 1)))).any()


def test_coefficients_cap():
    T = MTensor([np.ones((2, 10))] * 7)
    with pytest.raises(CapacityError):
        coefficients_dense(RegressionModel(T, np.ones((2, 1))))


def test_coefficients_single_output_only(toy):
    with pytest.raises(DimensionError):
        coefficients_dense(RegressionModel(toy, np.ones((3, 2))))


# -- regularizer grammar and persistence ------------------------------------------


@pytest.mark.parametrize(
    "text,expected",
    [
        ("ls", {"name": "none"}),
        ("tikhonov:0.5", {"name": "tikhonov", "lam": 0.5}),
        ("spectral:8", {"name": "spectral", "rank": 8}),
        ("spectral:tau=0.1", {"name": "spectral", "tau": 0.1}),
        ("ali:1e-4", {"name": "ali", "eps": 1e-4, "mode": "greedy"}),
        ("ali:1e-4:optimal", {"name": "ali", "eps": 1e-4, "mode": "optimal"}),
        ("ali:rows=8", {"name": "ali", "rows": 8, "mode": "greedy"}),
    ],
)
def test_parse_regularizer(text, expected):
    assert parse_regularizer(text) == expected


@pytest.mark.parametrize("text", ["", "lasso", "tikhonov", "tikhonov:-1", "spectral:0", "ali:0", "ali:1:fast", "ls:3"])
def test_parse_regularizer_rejects(text):
    with pytest.raises(ValueError):
        parse_regularizer(text)


def test_save_load_round_trip(tmp_path, rng):
    maps = FeatureMapSet.from_spec(2, "monomial:3,trig:0.5", scale=0.25)
    X = rng.uniform(-1, 1, (12, 2))
    M = fit(X, np.c_[X[:, 0] ** 2, X[:, 1]], maps, "tikhonov:0.01")
    path = tmp_path / "model.json"
    save_model(M, path)
    M2 = load_model(path)
    assert M2.maps == M.maps
    assert M2.regularizer == M.regularizer
    Q = rng.uniform(-1, 1, (4, 2))
    assert np.array_equal(predict_many(M, Q), predict_many(M2, Q))


def test_load_rejects_other_files(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "something-else"}')
    with pytest.raises(ValueError):
        load_model(p)
