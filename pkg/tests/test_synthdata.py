import numpy as np
import pytest

from fedsparse.models import TaskKind
from fedsparse.synthdata import SynthSpec, gen_design, gen_labels, gen_wtrue, generate

LR = TaskKind.linear_regression()
LG = TaskKind.logistic_regression()
MC4 = TaskKind.multi_class(4)


def spec(task=LR, n=1000, p=20, rho_true=0.2, rho_cor=0.5, snr=5.0):
    return SynthSpec(n=n, p=p, rho_true=rho_true, rho_cor=rho_cor, snr=snr, task=task)


class TestGenDesign:
    def test_toeplitz_covariance(self):
        # empirical covariance of a large draw against rho^|i-j|
        s = spec(n=200_000, p=8, rho_cor=0.6)
        X = gen_design(s, np.random.default_rng(0))
        emp = X.T @ X / s.n
        i, j = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
        target = 0.6 ** np.abs(i - j)
        assert np.abs(emp - target).max() < 0.01

    def test_uncorrelated_case(self):
        s = spec(n=100_000, p=6, rho_cor=0.0)
        X = gen_design(s, np.random.default_rng(1))
        emp = X.T @ X / s.n
        off = emp - np.diag(np.diag(emp))
        assert np.abs(off).max() < 0.02
        assert np.abs(np.diag(emp) - 1.0).max() < 0.02

    def test_unit_marginal_variance(self):
        s = spec(n=150_000, p=10, rho_cor=0.9)
        X = gen_design(s, np.random.default_rng(2))
        assert np.abs(X.var(axis=0) - 1.0).max() < 0.02

    def test_deterministic(self):
        s = spec()
        a = gen_design(s, np.random.default_rng(5))
        b = gen_design(s, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)


class TestGenWtrue:
    def test_support_size_is_floor(self):
        s = spec(p=25, rho_true=0.3)  # floor(0.3 * 25) = 7
        truth = gen_wtrue(s, np.random.default_rng(0))
        assert len(truth.support) == 7
        assert np.count_nonzero(truth.w_true) == 7

    def test_values_are_unit_signs(self):
        truth = gen_wtrue(spec(p=100, rho_true=0.5), np.random.default_rng(1))
        nz = truth.w_true[truth.support]
        assert set(np.unique(nz)) <= {-1.0, 1.0}

    def test_support_sorted_and_consistent(self):
        truth = gen_wtrue(spec(p=40), np.random.default_rng(2))
        assert np.all(np.diff(truth.support) > 0)
        np.testing.assert_array_equal(np.flatnonzero(truth.w_true), truth.support)

    def test_signs_balanced(self):
        truth = gen_wtrue(spec(p=20000, rho_true=0.5), np.random.default_rng(3))
        nnz = len(truth.support)
        pos = (truth.w_true[truth.support] > 0).sum()
        se = 0.5 * np.sqrt(nnz)
        assert abs(pos - nnz / 2) < 4 * se

    def test_mc_support_spans_flattened_matrix(self):
        s = spec(task=MC4, p=50, rho_true=0.1)
        assert s.coef_size == 200
        truth = gen_wtrue(s, np.random.default_rng(4))
        assert len(truth.support) == 20
        assert truth.w_true.shape == (200,)


class TestGenLabels:
    def test_lr_snr_realized(self):
        s = spec(n=50_000, snr=5.0)
        rng = np.random.default_rng(6)
        X = gen_design(s, rng)
        truth = gen_wtrue(s, rng)
        y, sigma = gen_labels(s, X, truth.w_true, rng)
        signal = X @ truth.w_true
        noise = y - signal
        realized = signal.var() / noise.var()
        assert realized == pytest.approx(5.0, rel=0.05)
        assert sigma == pytest.approx(np.linalg.norm(signal) / np.sqrt(5.0 * s.n), rel=1e-12)

    def test_lg_threshold_semantics(self):
        s = spec(task=LG, n=2000, snr=1e12)
        rng = np.random.default_rng(7)
        X = gen_design(s, rng)
        truth = gen_wtrue(s, rng)
        y, _ = gen_labels(s, X, truth.w_true, rng)
        # at enormous SNR the noise is negligible: labels are the sign of the logit
        np.testing.assert_array_equal(y, (X @ truth.w_true > 0).astype(int))
        assert y.dtype == np.int64

    def test_mc_labels_in_range(self):
        s = spec(task=MC4, n=3000, p=30)
        X, y, truth, sigma = generate(s, np.random.default_rng(8))
        assert y.shape == (3000,)
        assert set(np.unique(y)) <= set(range(4))
        assert sigma > 0

    def test_mc_noiseless_argmax(self):
        s = spec(task=MC4, n=500, p=30, snr=1e12)
        rng = np.random.default_rng(9)
        X = gen_design(s, rng)
        truth = gen_wtrue(s, rng)
        y, _ = gen_labels(s, X, truth.w_true, rng)
        W = truth.w_true.reshape(4, 30)
        np.testing.assert_array_equal(y, np.argmax(X @ W.T, axis=1))


class TestGenerate:
    def test_deterministic_end_to_end(self):
        s = spec()
        X1, y1, t1, sg1 = generate(s, np.random.default_rng(42))
        X2, y2, t2, sg2 = generate(s, np.random.default_rng(42))
        np.testing.assert_array_equal(X1, X2)
        np.testing.assert_array_equal(y1, y2)
        np.testing.assert_array_equal(t1.w_true, t2.w_true)
        assert sg1 == sg2

    def test_different_seeds_differ(self):
        s = spec()
        X1, _, _, _ = generate(s, np.random.default_rng(1))
        X2, _, _, _ = generate(s, np.random.default_rng(2))
        assert not np.array_equal(X1, X2)


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(n=0)
    with pytest.raises(ValueError):
        spec(rho_true=0.0)
    with pytest.raises(ValueError):
        spec(rho_cor=1.0)
    with pytest.raises(ValueError):
        spec(snr=0.0)
    with pytest.raises(ValueError):
        spec(task=TaskKind.multi_label(3))
    with pytest.raises(ValueError):
        # floor(0.01 * 20) = 0 nonzeros
        spec(p=20, rho_true=0.01)
