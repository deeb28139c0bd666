"""bayes モジュールのテスト."""

import warnings
from pathlib import Path

import numpy as np
import pytest

from odeinfer.bayes import (
    BoxTransform,
    PosteriorSamples,
    PriorSpec,
    collocation_posterior,
    load_samples,
    mh_explicit,
    rdem_filter,
    state_bands,
    systematic_resample,
    two_step_bayes,
)
from odeinfer.bayes.adapt import ScaleAdapter, empirical_cholesky
from odeinfer.config import ChainConfig, FilterConfig, MethodSettings
from odeinfer.errors import (
    ConditioningError,
    DatasetParseError,
    DegeneracyError,
    InsufficientSampleError,
    InvalidInputError,
    MixingWarning,
)
from odeinfer.methods import run_mh
from odeinfer.models import OdeSystem, TimeGrid, integrate_states
from odeinfer.simulate import Dataset, NoiseSpec, generate
from odeinfer.splinefit import Quadrature, SplineBasis


def _drift_field(x: np.ndarray, t: object, theta: np.ndarray) -> np.ndarray:
    return theta[..., :1] + 0.0 * x


@pytest.fixture
def drift() -> OdeSystem:
    """ẋ = θ (θ ∈ [-5, 5])."""
    return OdeSystem(
        name="drift",
        state_dim=1,
        param_dim=1,
        field=_drift_field,
        lower=np.array([-5.0]),
        upper=np.array([5.0]),
    )


def _batch_se(draws: np.ndarray, batches: int = 40) -> np.ndarray:
    """バッチ平均によるモンテカルロ標準誤差."""
    size = draws.shape[0] // batches
    kept = draws[: size * batches]
    means = kept.reshape(batches, size, *draws.shape[1:]).mean(axis=1)
    return means.std(axis=0, ddof=1) / np.sqrt(batches)


def _decay_dataset(
    decay: OdeSystem, sigma: float, n: int = 41, seed: int = 3
) -> Dataset:
    return generate(
        decay,
        [-0.5],
        [1.0],
        TimeGrid.uniform(4.0, n),
        NoiseSpec.isotropic(sigma, 1),
        seed,
    )


def _samples(theta: np.ndarray, x0: np.ndarray) -> PosteriorSamples:
    return PosteriorSamples(
        method="test",
        theta=theta,
        sigma=np.full((theta.shape[0], x0.shape[1]), 0.1),
        x0=x0,
        seed=0,
    )


class TestPriorSpec:
    """PriorSpec と BoxTransform のテスト."""

    def test_default(self, fhn: OdeSystem, fhn_noisy: Dataset) -> None:
        """既定は系の範囲の一様分布で, x0 の平均は最初の観測であることを確認."""
        prior = PriorSpec.default(fhn, fhn_noisy)

        np.testing.assert_array_equal(prior.theta_lower, fhn.lower)
        np.testing.assert_array_equal(prior.theta_upper, fhn.upper)
        np.testing.assert_array_equal(prior.x0_mean, fhn_noisy.observations[0])
        assert (prior.param_dim, prior.state_dim) == (3, 2)

    def test_default_without_data(self, fhn: OdeSystem) -> None:
        """データがなければ系の既定初期値を平均にすることを確認."""
        np.testing.assert_array_equal(PriorSpec.default(fhn).x0_mean, [-1.0, 1.0])

    def test_infinite_box(self) -> None:
        """θ の範囲が無限なら箱の指定を求めることを確認."""
        system = OdeSystem(
            name="open",
            state_dim=1,
            param_dim=1,
            field=_drift_field,
            lower=np.array([-np.inf]),
            upper=np.array([np.inf]),
        )

        with pytest.raises(InvalidInputError):
            PriorSpec.default(system)
        prior = PriorSpec.default(system, theta_lower=[-1.0], theta_upper=[1.0])
        assert prior.param_dim == 1

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"sigma_shape": 0.0},
            {"sigma_scale": -1.0},
            {"x0_sd": -0.1},
            {"theta_lower": [1.0], "theta_upper": [0.0]},
            {"sigma_fixed": [-1.0]},
        ],
    )
    def test_invalid(self, drift: OdeSystem, kwargs: dict[str, object]) -> None:
        """不正なハイパーパラメータを拒否することを確認."""
        with pytest.raises(InvalidInputError):
            PriorSpec.default(drift, x0_mean=[0.0], **kwargs)

    def test_log_densities(self, drift: OdeSystem) -> None:
        """θ の箱の外と, 点質量の x0 の外れが -inf になることを確認."""
        prior = PriorSpec.default(drift, x0_mean=[1.0], x0_sd=0.0)

        assert prior.log_theta([0.0]) == 0.0
        assert prior.log_theta([6.0]) == -np.inf
        assert prior.log_x0([1.0]) == 0.0
        assert prior.log_x0([1.5]) == -np.inf

    def test_sigma2_conditional_fixed(self, drift: OdeSystem) -> None:
        """σ 固定なら完全条件付き分布が固定値の2乗を返すことを確認."""
        prior = PriorSpec.default(drift, x0_mean=[0.0], sigma_fixed=[0.5])
        rng = np.random.default_rng(0)

        conditional = prior.sigma2_conditional(rng, np.array([3.0]), 10)
        np.testing.assert_array_equal(conditional, [0.25])
        np.testing.assert_array_equal(
            prior.sample_sigma2(rng, 4), np.full((4, 1), 0.25)
        )

    def test_samples_in_support(self, fhn: OdeSystem) -> None:
        """θ のサンプルが箱の中にあることを確認."""
        prior = PriorSpec.default(fhn)

        theta = prior.sample_theta(np.random.default_rng(1), 500)

        assert theta.shape == (500, 3)
        assert np.all(prior.contains_theta(theta))

    @pytest.mark.parametrize(
        ("lower", "upper", "values"),
        [
            ([0.0], [2.0], [0.3, 1.0, 1.9]),
            ([0.0], [np.inf], [1e-3, 1.0, 50.0]),
            ([-np.inf], [1.0], [-20.0, 0.0, 0.99]),
            ([-np.inf], [np.inf], [-3.0, 0.0, 4.0]),
        ],
    )
    def test_box_transform(
        self, lower: list[float], upper: list[float], values: list[float]
    ) -> None:
        """変換と逆変換が元に戻ることを確認."""
        transform = BoxTransform(lower, upper)
        points = np.array(values)[:, None]

        restored = transform.inverse(transform.forward(points))
        np.testing.assert_allclose(restored, points, rtol=1e-9)

    def test_box_transform_edges(self) -> None:
        """端点でも変換が有限であることを確認."""
        transform = BoxTransform([0.0], [1.0])

        assert np.all(np.isfinite(transform.forward(np.array([[0.0], [1.0]]))))


class TestScaleAdapter:
    """ScaleAdapter と empirical_cholesky のテスト."""

    def test_shrinks_on_low_acceptance(self) -> None:
        """受理率が 20% 未満なら倍率を縮めることを確認."""
        adapter = ScaleAdapter(interval=10)
        for iteration in range(10):
            adapter.record(iteration == 0, counting=False)
            adapter.step(iteration, burnin=100)

        assert adapter.multiplier == pytest.approx(0.6)

    def test_grows_on_high_acceptance(self) -> None:
        """受理率が 40% を超えれば倍率を広げることを確認."""
        adapter = ScaleAdapter(interval=10)
        for iteration in range(10):
            adapter.record(True, counting=False)
            adapter.step(iteration, burnin=100)

        assert adapter.multiplier == pytest.approx(1.5)

    def test_frozen_after_burnin(self) -> None:
        """burnin 以降は倍率を変えず, 受理率は burnin 後だけを数えることを確認."""
        adapter = ScaleAdapter(interval=5)
        for iteration in range(20):
            adapter.record(iteration % 2 == 0, counting=iteration >= 10)
            adapter.step(iteration, burnin=0)

        assert adapter.multiplier == 1.0
        assert adapter.acceptance_rate == pytest.approx(0.5)

    def test_empirical_cholesky(self) -> None:
        """軌跡の共分散を 2.38^2/d 倍した因子を返すことを確認."""
        history = np.random.default_rng(0).standard_normal((400, 2)) * [1.0, 3.0]

        chol = empirical_cholesky(history)

        assert chol is not None
        expected = np.cov(history, rowvar=False) * 2.38**2 / 2
        np.testing.assert_allclose(chol @ chol.T, expected, atol=1e-9)

    def test_empirical_cholesky_short(self) -> None:
        """軌跡が短いか動きがなければ None を返すことを確認."""
        assert empirical_cholesky(np.zeros((5, 2))) is None
        assert empirical_cholesky(np.ones((100, 2))) is None


class TestMhExplicit:
    """mh_explicit のテスト."""

    def test_conjugate_oracle(self, drift: OdeSystem) -> None:
        """ẋ=θ の事後平均と分散が線形回帰の解析解と一致することを確認."""
        grid = TimeGrid.uniform(2.0, 21)
        t = grid.points
        rng = np.random.default_rng(7)
        y = 0.3 + 0.8 * t + 0.5 * rng.standard_normal(t.size)
        dataset = Dataset(grid, y)
        prior = PriorSpec.default(
            drift, dataset, x0_mean=[0.0], x0_sd=[1.0], sigma_fixed=[0.5]
        )
        chain = ChainConfig(iters=25000, burnin=5000, seed=11)

        samples = mh_explicit(dataset, drift, prior, chain, refine=1)

        design = np.column_stack([t, np.ones_like(t)])
        precision = design.T @ design / 0.25 + np.diag([0.0, 1.0])
        cov = np.linalg.inv(precision)
        mean = cov @ (design.T @ y / 0.25)
        draws = np.hstack((samples.theta, samples.x0))
        se = _batch_se(draws)
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * se + 1e-3)
        np.testing.assert_allclose(draws.var(axis=0), np.diag(cov), rtol=0.2)
        assert 0.0 < samples.acceptance_rate < 1.0
        np.testing.assert_array_equal(samples.sigma, 0.5)

    def test_prior_only(self, drift: OdeSystem) -> None:
        """データなしでは事前分布のモーメントを再現することを確認."""
        prior = PriorSpec.default(
            drift, theta_lower=[0.0], theta_upper=[1.0], x0_mean=[2.0], x0_sd=[0.5]
        )
        chain = ChainConfig(iters=22000, burnin=2000, seed=3)

        samples = mh_explicit(None, drift, prior, chain)

        assert samples.n_draws == 20000
        assert samples.theta.mean() == pytest.approx(0.5, abs=0.05)
        assert samples.theta.var() == pytest.approx(1 / 12, rel=0.25)
        assert samples.x0.mean() == pytest.approx(2.0, abs=0.1)
        assert samples.x0.std() == pytest.approx(0.5, rel=0.2)
        assert np.all(prior.contains_theta(samples.theta))

    def test_seed_determinism(self, decay: OdeSystem) -> None:
        """同じシードなら同じサンプルになることを確認."""
        dataset = _decay_dataset(decay, 0.05)
        prior = PriorSpec.default(decay, dataset)
        chain = ChainConfig(iters=400, burnin=100, seed=5, thin=3)

        first = mh_explicit(dataset, decay, prior, chain, refine=2)
        second = mh_explicit(dataset, decay, prior, chain, refine=2)

        assert first.n_draws == 100
        np.testing.assert_array_equal(first.theta, second.theta)
        np.testing.assert_array_equal(first.sigma, second.sigma)

    def test_keep_states(self, decay: OdeSystem) -> None:
        """keep_states なら格子上の軌道を持つことを確認."""
        dataset = _decay_dataset(decay, 0.05, n=11)
        prior = PriorSpec.default(decay, dataset)
        chain = ChainConfig(iters=60, burnin=30, seed=1, keep_states=True)

        samples = mh_explicit(dataset, decay, prior, chain, refine=2)

        assert samples.states is not None
        assert samples.states.shape == (30, 11, 1)
        np.testing.assert_array_equal(samples.states[:, 0, 0], samples.x0[:, 0])

    def test_mixing_warning(self, drift: OdeSystem) -> None:
        """受理率が 1% 未満なら MixingWarning を出して記録することを確認."""
        grid = TimeGrid.uniform(2.0, 21)
        dataset = Dataset(grid, 0.8 * grid.points)
        prior = PriorSpec.default(drift, dataset, sigma_fixed=[0.01])
        chain = ChainConfig(
            iters=600,
            burnin=60,
            seed=0,
            proposal_scales=[100.0, 100.0],
            adapt_interval=50,
        )

        with pytest.warns(MixingWarning):
            samples = mh_explicit(dataset, drift, prior, chain, refine=1)

        assert samples.acceptance_rate < 0.01
        assert samples.warnings

    def test_blowup_is_rejected(self) -> None:
        """発散する提案は棄却して数え, 実行は続くことを確認."""
        system = OdeSystem(
            name="quadratic",
            state_dim=1,
            param_dim=1,
            field=lambda x, t, theta: theta[..., :1] * x * x,
            lower=np.array([0.0]),
            upper=np.array([3.0]),
        )
        grid = TimeGrid.uniform(1.0, 11)
        dataset = Dataset(grid, 1.0 / (1.0 - 0.1 * grid.points))
        prior = PriorSpec.default(system, dataset, x0_sd=0.1)
        chain = ChainConfig(
            iters=400, burnin=100, seed=2, theta_init=[0.1], proposal_scales=[1.5, 0.01]
        )

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MixingWarning)
            samples = mh_explicit(dataset, system, prior, chain, refine=4)

        assert samples.n_rejected_blowups > 0
        assert np.all(np.isfinite(samples.theta))

    def test_bad_proposal_scales(self, decay: OdeSystem) -> None:
        """proposal_scales の長さが q+p でなければエラーになることを確認."""
        dataset = _decay_dataset(decay, 0.05, n=11)
        chain = ChainConfig(iters=20, burnin=10, proposal_scales=[0.1])

        with pytest.raises(InvalidInputError):
            mh_explicit(dataset, decay, PriorSpec.default(decay, dataset), chain)

    def test_point_mass_x0(self, fhn: OdeSystem, fhn_noisy: Dataset) -> None:
        """x0 が点質量でも θ は動き, x0 は事前の値に固定されることを確認."""
        prior = PriorSpec.default(fhn, fhn_noisy, x0_mean=[-1.0, 1.0], x0_sd=[0.0, 0.0])
        chain = ChainConfig(iters=600, burnin=200, seed=4)

        samples = mh_explicit(fhn_noisy, fhn, prior, chain, refine=2)

        assert samples.acceptance_rate > 0.0
        assert np.unique(samples.theta, axis=0).shape[0] > 1
        np.testing.assert_array_equal(samples.x0, np.tile([-1.0, 1.0], (400, 1)))

    def test_partial_point_mass_x0(self, drift: OdeSystem) -> None:
        """proposal_scales を指定しても点質量の座標は提案で動かないことを確認."""
        grid = TimeGrid.uniform(2.0, 21)
        dataset = Dataset(grid, 0.5 + 0.8 * grid.points)
        prior = PriorSpec.default(
            drift, dataset, x0_mean=[0.5], x0_sd=[0.0], sigma_fixed=[0.1]
        )
        chain = ChainConfig(iters=500, burnin=100, seed=2, proposal_scales=[0.05, 0.3])

        samples = mh_explicit(dataset, drift, prior, chain, refine=1)

        assert samples.acceptance_rate > 0.0
        np.testing.assert_array_equal(samples.x0, 0.5)
        assert samples.theta.mean() == pytest.approx(0.8, abs=0.05)


class TestCollocationPosterior:
    """collocation_posterior のテスト."""

    def test_spline_regression_oracle(self, decay: OdeSystem) -> None:
        """λ→0 で θ を固定すると β が共役ガウス事後分布と一致することを確認."""
        dataset = _decay_dataset(decay, 0.05)
        basis = SplineBasis.for_grid(dataset.grid, 1)
        prior = PriorSpec.default(decay, dataset, sigma_fixed=[0.05])
        chain = ChainConfig(iters=22000, burnin=2000, seed=4, theta_init=[-0.5])

        samples = collocation_posterior(
            dataset, decay, basis, prior, 1e-8, chain, update_theta=False
        )

        design = basis.design(dataset.times)
        cov = 0.0025 * np.linalg.inv(design.T @ design)
        mean = np.linalg.lstsq(design, dataset.observations[:, 0], rcond=None)[0]
        assert samples.coefficients is not None
        beta = samples.coefficients[:, :, 0]
        assert np.all(np.abs(beta.mean(axis=0) - mean) < 4 * _batch_se(beta))
        np.testing.assert_allclose(beta.var(axis=0), np.diag(cov), rtol=0.25)
        np.testing.assert_array_equal(samples.theta, -0.5)

    def test_draws(self, decay: OdeSystem) -> None:
        """θ が事前分布の中にあり, x0 が曲線の t1 の値であることを確認."""
        dataset = _decay_dataset(decay, 0.05)
        basis = SplineBasis.for_grid(dataset.grid, 6)
        chain = ChainConfig(iters=1500, burnin=500, seed=2, keep_states=True)
        prior = PriorSpec.default(decay, dataset)

        samples = collocation_posterior(dataset, decay, basis, prior, 10.0, chain)

        assert samples.n_draws == 1000
        assert np.all(prior.contains_theta(samples.theta))
        assert samples.coefficients is not None
        first_row = basis.design(dataset.times[:1])[0]
        np.testing.assert_allclose(
            samples.x0[:, 0], samples.coefficients[:, :, 0] @ first_row
        )
        assert samples.states is not None
        assert samples.states.shape == (1000, 41, 1)

    def test_seed_determinism(self, decay: OdeSystem) -> None:
        """同じシードなら同じサンプルになることを確認."""
        dataset = _decay_dataset(decay, 0.05)
        basis = SplineBasis.for_grid(dataset.grid, 4)
        prior = PriorSpec.default(decay, dataset)
        chain = ChainConfig(iters=200, burnin=50, seed=8)

        first = collocation_posterior(dataset, decay, basis, prior, 1.0, chain)
        second = collocation_posterior(dataset, decay, basis, prior, 1.0, chain)

        np.testing.assert_array_equal(first.theta, second.theta)
        np.testing.assert_array_equal(first.coefficients, second.coefficients)

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_invalid_lambda(self, decay: OdeSystem, lam: float) -> None:
        """λ が正でなければエラーになることを確認."""
        dataset = _decay_dataset(decay, 0.05)

        with pytest.raises(InvalidInputError):
            collocation_posterior(
                dataset, decay, SplineBasis.for_grid(dataset.grid, 4),
                PriorSpec.default(decay, dataset), lam,
            )

    def test_degenerate_basis(self, decay: OdeSystem) -> None:
        """基底数が観測数を超えると ConditioningError になることを確認."""
        dataset = _decay_dataset(decay, 0.05, n=3)

        with pytest.raises(ConditioningError):
            collocation_posterior(
                dataset, decay, SplineBasis.for_grid(dataset.grid, 0),
                PriorSpec.default(decay, dataset), 1.0,
            )

    @pytest.mark.slow
    def test_penalty_decreases_with_lambda(self, fhn: OdeSystem) -> None:
        """FHN で λ=10 の事後平均罰則が λ=0.1 より小さいことを確認."""
        dataset = generate(
            fhn, [0.2, 0.2, 3.0], [-1.0, 1.0], TimeGrid.uniform(20.0, 401),
            NoiseSpec.isotropic(0.5, 2), 1,
        )
        basis = SplineBasis.for_grid(dataset.grid, 25)
        quad = Quadrature.for_grid(dataset.grid)
        prior = PriorSpec.default(fhn, dataset)
        chain = ChainConfig(iters=4000, burnin=2000, seed=1, theta_init=[0.2, 0.2, 3.0])

        means = []
        for lam in (0.1, 10.0):
            samples = collocation_posterior(
                dataset, fhn, basis, prior, lam, chain, quad
            )
            assert samples.coefficients is not None
            penalties = []
            for theta, beta in zip(samples.theta[::20], samples.coefficients[::20]):
                x = basis.design(quad.nodes) @ beta
                dx = basis.design(quad.nodes, nu=1) @ beta
                r = dx - fhn.field(x, quad.nodes, theta)
                penalties.append(quad.integrate(np.sum(r * r, axis=1)))
            means.append(np.mean(penalties))

        assert means[1] < means[0]


class TestTwoStepBayes:
    """two_step_bayes のテスト."""

    def test_gradient_match_closed_form(self, decay: OdeSystem) -> None:
        """ẋ=θx の各 θ* が積分比の解析解と 1e-6 以内で一致することを確認."""
        dataset = _decay_dataset(decay, 0.0, n=201)
        basis = SplineBasis.for_grid(dataset.grid, 10)
        quad = Quadrature.for_grid(dataset.grid)
        chain = ChainConfig(iters=30, burnin=0, seed=1)

        samples = two_step_bayes(dataset, decay, basis, chain, quad=quad)

        assert samples.n_draws == 30
        assert samples.n_excluded == 0
        assert samples.coefficients is not None
        values = basis.design(quad.nodes)
        derivs = basis.design(quad.nodes, nu=1)
        for theta, beta in zip(samples.theta, samples.coefficients):
            x = (values @ beta)[:, 0]
            dx = (derivs @ beta)[:, 0]
            expected = np.sum(quad.weights * dx * x) / np.sum(quad.weights * x * x)
            assert theta[0] == pytest.approx(expected, abs=1e-6)
        assert np.median(samples.theta) == pytest.approx(-0.5, abs=1e-2)

    def test_draw_count(self, decay: OdeSystem) -> None:
        """曲線の数が (iters - burnin) / thin の切り上げであることを確認."""
        dataset = _decay_dataset(decay, 0.05)
        chain = ChainConfig(iters=25, burnin=5, thin=3, seed=0)

        basis = SplineBasis.for_grid(dataset.grid, 6)
        samples = two_step_bayes(dataset, decay, basis, chain)

        assert samples.n_draws + samples.n_excluded == 7
        assert samples.sigma.shape == (samples.n_draws, 1)

    def test_rk_match(self, decay: OdeSystem) -> None:
        """rk_match で真値の近くに集まることを確認."""
        dataset = _decay_dataset(decay, 0.02)
        chain = ChainConfig(iters=20, burnin=0, seed=3)

        samples = two_step_bayes(
            dataset, decay, SplineBasis.for_grid(dataset.grid, 6), chain,
            variant="rk_match", refine=4,
        )

        assert samples.n_draws + samples.n_excluded == 20
        assert np.median(samples.theta) == pytest.approx(-0.5, abs=0.05)

    @pytest.mark.parametrize(
        "weight", [lambda t: np.zeros_like(t), lambda t: -np.ones_like(t)]
    )
    def test_invalid_weight(self, decay: OdeSystem, weight: object) -> None:
        """恒等的に 0 や負の重み関数を拒否することを確認."""
        dataset = _decay_dataset(decay, 0.05)

        with pytest.raises(InvalidInputError):
            two_step_bayes(
                dataset, decay, SplineBasis.for_grid(dataset.grid, 4), weight=weight
            )

    def test_unknown_variant(self, decay: OdeSystem) -> None:
        """未知の variant を拒否することを確認."""
        dataset = _decay_dataset(decay, 0.05)

        with pytest.raises(InvalidInputError):
            two_step_bayes(
                dataset, decay, SplineBasis.for_grid(dataset.grid, 4), variant="spline"
            )

    def test_too_many_knots(self, decay: OdeSystem) -> None:
        """n <= k なら ConditioningError になることを確認."""
        dataset = _decay_dataset(decay, 0.05, n=8)

        with pytest.raises(ConditioningError):
            two_step_bayes(dataset, decay, SplineBasis.for_grid(dataset.grid, 4))

    @pytest.mark.slow
    def test_rk_match_tighter(self, fhn: OdeSystem) -> None:
        """FHN で rk_match の IQR が 3 パラメータ中 2 つ以上で gradient_match 以下であることを確認."""
        dataset = generate(
            fhn, [0.2, 0.2, 3.0], [-1.0, 1.0], TimeGrid.uniform(20.0, 401),
            NoiseSpec.isotropic(0.5, 2), 1,
        )
        basis = SplineBasis.for_grid(dataset.grid, 25)
        chain = ChainConfig(iters=200, burnin=0, seed=1)

        iqr = {}
        for variant in ("gradient_match", "rk_match"):
            samples = two_step_bayes(
                dataset, fhn, basis, chain, variant=variant, refine=10
            )
            q25, q75 = samples.quantiles([0.25, 0.75])
            iqr[variant] = q75 - q25

        assert np.sum(iqr["rk_match"] <= iqr["gradient_match"]) >= 2


class TestRdemFilter:
    """rdem_filter と systematic_resample のテスト."""

    def test_noiseless_follows_trajectory(self, decay: OdeSystem) -> None:
        """V=0, σ=0, 真値から始めた粒子が RK4 軌道に一致することを確認."""
        generated = generate(
            decay,
            [-0.5],
            [1.0],
            TimeGrid.uniform(4.0, 21),
            NoiseSpec.isotropic(0.0, 1),
            0,
            refine=1,
        )
        prior = PriorSpec.default(decay, generated, x0_sd=0.0)
        pf = FilterConfig(
            particle_count=100,
            fixed_theta=[-0.5],
            fixed_sigma=[0.0],
            fixed_v=[0.0],
            refine=1,
        )

        samples = rdem_filter(generated, decay, pf, prior)

        assert samples.state_means is not None
        assert samples.ess_history is not None
        np.testing.assert_allclose(
            samples.state_means, generated.observations, rtol=1e-12
        )
        np.testing.assert_allclose(samples.ess_history, 100.0)
        np.testing.assert_array_equal(samples.theta, -0.5)
        np.testing.assert_array_equal(samples.x0, 1.0)

    def test_kalman_oracle(self, decay: OdeSystem) -> None:
        """線形ガウスの系でフィルタ平均がカルマンフィルタと一致することを確認."""
        grid = TimeGrid.uniform(3.0, 31)
        h = 0.1
        z = -0.5 * h
        gain = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
        sigma2, v = 0.04, 0.01
        rng = np.random.default_rng(21)
        x = np.empty(31)
        x[0] = 1.0
        for i in range(1, 31):
            x[i] = gain * x[i - 1] + np.sqrt(v) * rng.standard_normal()
        y = x + np.sqrt(sigma2) * rng.standard_normal(31)
        dataset = Dataset(grid, y)
        prior = PriorSpec.default(decay, dataset, x0_mean=[1.0], x0_sd=[0.3])
        replicates = 10
        means: list[np.ndarray] = []
        ess: list[np.ndarray] = []
        for seed in range(replicates):
            pf = FilterConfig(
                particle_count=2000,
                fixed_theta=[-0.5],
                fixed_sigma=[np.sqrt(sigma2)],
                fixed_v=[v],
                seed=seed,
            )
            samples = rdem_filter(dataset, decay, pf, prior)
            assert samples.state_means is not None
            assert samples.ess_history is not None
            means.append(samples.state_means[:, 0])
            ess.append(samples.ess_history)

        mean, var = 1.0, 0.09
        kalman_mean, kalman_var = [], []
        for i in range(31):
            if i > 0:
                mean, var = gain * mean, gain**2 * var + v
            k = var / (var + sigma2)
            mean, var = mean + k * (y[i] - mean), (1 - k) * var
            kalman_mean.append(mean)
            kalman_var.append(var)
        filtered = np.array(means)
        # 標準誤差: 反復間のばらつき. 下限は ESS による値
        spread = filtered.std(axis=0, ddof=1) / np.sqrt(replicates)
        floor = np.sqrt(np.array(kalman_var) / np.sum(ess, axis=0))
        se = np.maximum(spread, floor)
        assert np.all(np.abs(filtered.mean(axis=0) - kalman_mean) < 3 * se)

    def test_evidence_variance_decreases(self, decay: OdeSystem) -> None:
        """粒子数を増やすと対数周辺尤度の推定値の分散が減ることを確認."""
        dataset = _decay_dataset(decay, 0.1, n=21)
        prior = PriorSpec.default(decay, dataset, x0_sd=[0.2])

        def evidence(count: int) -> np.ndarray:
            values = []
            for seed in range(10):
                pf = FilterConfig(
                    particle_count=count,
                    fixed_theta=[-0.5],
                    fixed_sigma=[0.1],
                    fixed_v=[0.01],
                    seed=seed,
                )
                samples = rdem_filter(dataset, decay, pf, prior)
                assert samples.log_evidence is not None
                values.append(samples.log_evidence)
            return np.array(values)

        assert np.var(evidence(1600)) / np.var(evidence(100)) < 1.0

    def test_learns_theta(self, decay: OdeSystem) -> None:
        """θ を学習し, サンプルが事前分布の中にあることを確認."""
        dataset = _decay_dataset(decay, 0.05)
        prior = PriorSpec.default(decay, dataset, x0_sd=[0.1])
        pf = FilterConfig(particle_count=1000, seed=2)

        samples = rdem_filter(dataset, decay, pf, prior)

        assert samples.theta.shape == (1000, 1)
        assert np.all(prior.contains_theta(samples.theta))
        assert samples.ess_history is not None
        assert np.all((samples.ess_history > 0) & (samples.ess_history <= 1000 + 1e-9))
        assert samples.median()[0] == pytest.approx(-0.5, abs=0.3)

    def test_seed_determinism(self, decay: OdeSystem) -> None:
        """同じシードなら同じサンプルになることを確認."""
        dataset = _decay_dataset(decay, 0.05, n=11)
        pf = FilterConfig(particle_count=200, seed=9, jitter=0.01)

        first = rdem_filter(dataset, decay, pf)
        second = rdem_filter(dataset, decay, pf)

        np.testing.assert_array_equal(first.theta, second.theta)
        np.testing.assert_array_equal(first.sigma, second.sigma)
        assert first.log_evidence == second.log_evidence

    def test_degeneracy(self, decay: OdeSystem) -> None:
        """重みが崩壊すると時刻の添字つきの DegeneracyError になることを確認."""
        dataset = _decay_dataset(decay, 0.1, n=11)
        prior = PriorSpec.default(decay, dataset, x0_mean=[5.0], x0_sd=[1.0])
        pf = FilterConfig(particle_count=100, fixed_sigma=[1e-3], fixed_v=[1e-8])

        with pytest.raises(DegeneracyError) as info:
            rdem_filter(dataset, decay, pf, prior)

        assert info.value.time_index == 0

    def test_systematic_resample(self) -> None:
        """各粒子の複製数が N w_j の切り捨てか切り上げであることを確認."""
        rng = np.random.default_rng(0)
        weights = rng.uniform(size=1000)
        weights /= weights.sum()

        index = systematic_resample(rng, weights)

        counts = np.bincount(index, minlength=1000)
        expected = 1000 * weights
        assert index.size == 1000
        assert np.all(counts >= np.floor(expected) - 1e-9)
        assert np.all(counts <= np.ceil(expected) + 1e-9)

    def test_one_hot(self) -> None:
        """重みが1点に集中していれば全てその粒子になることを確認."""
        weights = np.zeros(50)
        weights[7] = 1.0

        index = systematic_resample(np.random.default_rng(1), weights)

        np.testing.assert_array_equal(index, 7)


class TestStateBands:
    """state_bands, QuantileBands と事後サンプルの表のテスト."""

    def test_identical_draws(self, decay: OdeSystem) -> None:
        """同一のサンプルなら3本の帯が一致することを確認."""
        samples = _samples(np.full((25, 1), -0.5), np.ones((25, 1)))

        bands = state_bands(samples, TimeGrid.uniform(2.0, 11), decay)

        np.testing.assert_array_equal(bands.lower, bands.upper)
        np.testing.assert_array_equal(bands.median, bands.upper)

    def test_ordered_and_covering(self, decay: OdeSystem) -> None:
        """下側 <= 中央 <= 上側で, 真の軌道を覆うことを確認."""
        rng = np.random.default_rng(3)
        samples = _samples(
            -0.5 + 0.02 * rng.standard_normal((200, 1)),
            1.0 + 0.02 * rng.standard_normal((200, 1)),
        )
        grid = TimeGrid.uniform(4.0, 41)

        bands = state_bands(samples, grid, decay)

        assert np.all(bands.lower <= bands.median)
        assert np.all(bands.median <= bands.upper)
        truth = integrate_states(decay, [1.0], grid.points, [-0.5])
        assert bands.coverage(truth)[0] >= 0.85

    def test_permutation_invariance(self, decay: OdeSystem) -> None:
        """サンプルの順序によらないことを確認."""
        rng = np.random.default_rng(4)
        theta = -0.5 + 0.1 * rng.standard_normal((50, 1))
        x0 = 1.0 + 0.1 * rng.standard_normal((50, 1))
        order = rng.permutation(50)
        grid = TimeGrid.uniform(2.0, 11)

        bands = state_bands(_samples(theta, x0), grid, decay)
        shuffled = state_bands(_samples(theta[order], x0[order]), grid, decay)

        np.testing.assert_array_equal(bands.lower, shuffled.lower)
        np.testing.assert_array_equal(bands.upper, shuffled.upper)

    def test_uses_stored_states(self) -> None:
        """軌道を持つサンプルは再生成せずに使うことを確認."""
        grid = TimeGrid.uniform(1.0, 3)
        states = np.arange(30 * 3, dtype=float).reshape(30, 3, 1)
        samples = PosteriorSamples(
            method="test",
            theta=np.zeros((30, 1)),
            sigma=np.ones((30, 1)),
            x0=states[:, 0],
            seed=0,
            grid=grid,
            states=states,
        )

        bands = state_bands(samples)

        np.testing.assert_allclose(
            bands.median[:, 0], np.median(states[:, :, 0], axis=0)
        )

    def test_insufficient(self, decay: OdeSystem) -> None:
        """20 未満のサンプルでは InsufficientSampleError になることを確認."""
        samples = _samples(np.full((19, 1), -0.5), np.ones((19, 1)))

        with pytest.raises(InsufficientSampleError):
            state_bands(samples, TimeGrid.uniform(1.0, 5), decay)

    def test_needs_system(self) -> None:
        """軌道がなく系もなければエラーになることを確認."""
        samples = _samples(np.full((20, 1), -0.5), np.ones((20, 1)))

        with pytest.raises(InvalidInputError):
            state_bands(samples, TimeGrid.uniform(1.0, 5))

    def test_regenerates_on_samples_grid(self, decay: OdeSystem) -> None:
        """軌道がなく grid も省略した場合はサンプルの格子で再生成することを確認."""
        grid = TimeGrid.uniform(2.0, 11)
        samples = PosteriorSamples(
            method="test",
            theta=np.full((20, 1), -0.5),
            sigma=np.full((20, 1), 0.1),
            x0=np.ones((20, 1)),
            seed=0,
            grid=grid,
        )

        bands = state_bands(samples, system=decay)

        np.testing.assert_array_equal(bands.grid.points, grid.points)
        expected = integrate_states(decay, [1.0], grid.points, [-0.5])
        np.testing.assert_allclose(bands.median[:, 0], expected[:, 0])

    @pytest.mark.slow
    def test_fhn_mh_coverage(self, fhn: OdeSystem) -> None:
        """FHN の mh の帯が真の軌道を各座標で格子点の 85% 以上覆うことを確認."""
        grid = TimeGrid.uniform(20.0, 401)
        theta, x0 = [0.2, 0.2, 3.0], [-1.0, 1.0]
        dataset = generate(fhn, theta, x0, grid, NoiseSpec.isotropic(0.5, 2), 1)
        settings = MethodSettings.model_validate(
            {"refine": 2, "chain": {"iters": 4000, "burnin": 1500, "seed": 1}}
        )
        samples = run_mh(dataset, fhn, settings)

        bands = state_bands(samples, grid, fhn)

        truth = integrate_states(fhn, x0, grid.points, theta)
        assert np.all(bands.coverage(truth) >= 0.85)

    def test_bands_table(self, decay: OdeSystem, tmp_path: Path) -> None:
        """`t,coord,q05,q50,q95` の表を書き出すことを確認."""
        samples = _samples(np.full((20, 1), -0.5), np.ones((20, 1)))
        bands = state_bands(samples, TimeGrid.uniform(1.0, 3), decay)

        path = bands.save(tmp_path / "bands.csv")
        lines = path.read_text(encoding="utf-8").splitlines()

        assert lines[0] == "t,coord,q05,q50,q95"
        assert len(lines) == 4
        assert lines[1] == "0,1,1,1,1"

    def test_samples_table(self, tmp_path: Path) -> None:
        """事後サンプルの表を保存して読み込めることを確認."""
        samples = PosteriorSamples(
            method="mh",
            theta=np.array([[0.1, 0.2], [0.3, 0.4]]),
            sigma=np.array([[0.5], [0.6]]),
            x0=np.array([[1.0], [2.0]]),
            seed=3,
        )

        path = samples.save(tmp_path / "posterior.csv")
        loaded = load_samples(path)

        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == "draw,theta1,theta2,sigma1,x0_1"
        np.testing.assert_array_equal(loaded.theta, samples.theta)
        np.testing.assert_array_equal(loaded.x0, samples.x0)
        np.testing.assert_allclose(samples.median(), [0.2, 0.3])

    def test_load_bad_header(self, tmp_path: Path) -> None:
        """ヘッダが不正なら DatasetParseError になることを確認."""
        path = tmp_path / "posterior.csv"
        path.write_text("t,y1\n0,1\n", encoding="utf-8")

        with pytest.raises(DatasetParseError):
            load_samples(path)

    def test_mismatched_shapes(self) -> None:
        """θ と σ のサンプル数が異なるとエラーになることを確認."""
        with pytest.raises(InvalidInputError):
            PosteriorSamples(
                "x", np.zeros((3, 1)), np.zeros((2, 1)), np.zeros((3, 1)), 0
            )
