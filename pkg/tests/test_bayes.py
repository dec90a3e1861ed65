import math
import warnings

import numpy as np
import pytest
from conftest import JUTE_PAPER
from scipy.stats import gamma, kstest

from jointwg import _kernels
from jointwg.bayes import (
    PosteriorChain,
    PriorSpec,
    credible_interval,
    estimate_linex,
    estimate_sel,
    export_chain,
    log_posterior,
    log_prior,
    merge_chains,
    run_chain,
    sample_beta_conditional,
)
from jointwg.censoring import CensoringPlan, JointSample
from jointwg.dist import WGParams, logpdf, logsf
from jointwg.mle import log_likelihood, vector_to_params


def chain_of(columns, burn_in=0):
    draws = np.column_stack(columns).astype(float)
    return PosteriorChain(draws=draws, burn_in=burn_in, acceptance=np.zeros((draws.shape[1] // 3, 2)))


def kernel_inputs(sample, prior):
    d = sample.delta
    logt = np.log(sample.times)
    return dict(
        logt=logt, d=d, w=sample.weights, M=d.sum(axis=1), sumlog=d @ logt, hyper=prior.as_array()
    )


class TestPrior:
    def test_positivity(self):
        with pytest.raises(ValueError):
            PriorSpec(mu=(1.0,), lam=(0.0,), q=(1.0,), w=(1.0,), p=(1.0,), v=(1.0,))

    def test_from_mapping_broadcasts(self):
        prior = PriorSpec.from_mapping({"mu": 0.5, "v": [1.0, 3.0]}, 2)
        assert prior.mu == (0.5, 0.5) and prior.v == (1.0, 3.0) and prior.lam == (2.0, 2.0)
        with pytest.raises(ValueError):
            PriorSpec.from_mapping({"nu": 1.0}, 2)
        with pytest.raises(ValueError):
            PriorSpec.from_mapping({"mu": [1.0, 2.0, 3.0]}, 2)

    def test_array_layout(self):
        prior = PriorSpec.uniform(2, shape=0.3, rate=5.0)
        np.testing.assert_array_equal(prior.as_array(), [[0.3, 5.0] * 3] * 2)


class TestLogPosterior:
    def test_flat_prior_leaves_likelihood(self, jute_sample, rng):
        prior = PriorSpec.uniform(2, shape=1.0, rate=1e-300)
        diffs = []
        for _ in range(5):
            params = vector_to_params(np.exp(rng.uniform(-1, 2, 6)))
            diffs.append(log_posterior(params, jute_sample, prior) - log_likelihood(params, jute_sample))
        assert np.ptp(diffs) < 1e-12

    def test_against_direct_product(self, sim_sample):
        prior = PriorSpec.uniform(2)
        p1 = [WGParams(6, 10, 5), WGParams(1.5, 4, 0.03)]
        p2 = [WGParams(5, 8, 3), WGParams(1.2, 3, 0.05)]

        def direct(params):
            total = 0.0
            for i, (t, line) in enumerate(zip(sim_sample.times, sim_sample.line_of)):
                for h, p in enumerate(params):
                    total += logpdf(p, t) * (line == h + 1) + logsf(p, t) * sim_sample.withdrawn[i, h]
            for h, p in enumerate(params):
                for x, shape, rate in zip(p.as_tuple(), (prior.mu[h], prior.q[h], prior.p[h]), (prior.lam[h], prior.w[h], prior.v[h])):
                    total += gamma.logpdf(x, shape, scale=1 / rate)
            return total

        expected = direct(p1) - direct(p2)
        got = log_posterior(p1, sim_sample, prior) - log_posterior(p2, sim_sample, prior)
        assert got == pytest.approx(expected, abs=1e-9)

    def test_beta_rate_is_linear(self, jute_sample):
        params = [WGParams(40, 10, 0.02), WGParams(55, 3, 0.13)]
        base = PriorSpec.uniform(2)
        bumped = PriorSpec.from_mapping({"v": [2.0 + 1.5, 2.0]}, 2)
        diff = log_posterior(params, jute_sample, base) - log_posterior(params, jute_sample, bumped)
        assert diff == pytest.approx(1.5 * 0.02, rel=1e-9)

    def test_log_prior_value(self):
        prior = PriorSpec.uniform(1, shape=2.0, rate=3.0)
        p = WGParams(1.0, 2.0, 0.5)
        expected = (math.log(1.0) - 3.0) + (math.log(2.0) - 6.0) + (math.log(0.5) - 1.5)
        assert log_prior([p], prior) == pytest.approx(expected, rel=1e-14)


class TestBetaConditional:
    def test_gamma_law(self, jute_sample):
        prior = PriorSpec.uniform(2)
        rng = np.random.default_rng(8)
        draws = sample_beta_conditional(jute_sample, 1, 41.9214, 16.3688, prior, rng, size=100_000)
        t = jute_sample.times
        rate = 2.0 + np.sum(jute_sample.weights[0] * np.log1p((t / 41.9214) ** 16.3688))
        shape = jute_sample.M[0] + 0.01
        assert draws.mean() == pytest.approx(shape / rate, rel=0.01)
        assert kstest(draws, gamma(shape, scale=1 / rate).cdf).statistic < 0.01

    def test_no_data_gives_prior(self):
        # line 2 has neither failures nor withdrawals
        plan = CensoringPlan(n=(3, 1), r=3, s=np.zeros((3, 2), int))
        s = JointSample(times=[1.0, 2.0, 3.0], line_of=[1, 1, 1], plan=plan)
        prior = PriorSpec.uniform(2, shape=3.0, rate=2.0)
        draws = sample_beta_conditional(s, 2, 1.0, 1.0, prior, np.random.default_rng(0), size=100_000)
        assert kstest(draws, gamma(3.0, scale=0.5).cdf).statistic < 0.01

    def test_domain(self, jute_sample):
        with pytest.raises(ValueError):
            sample_beta_conditional(jute_sample, 1, -1.0, 1.0, PriorSpec.uniform(2), np.random.default_rng(0))


class TestKernel:
    def test_ratios_are_posterior_differences(self, jute_sample):
        prior = PriorSpec.uniform(2)
        args = kernel_inputs(jute_sample, prior)
        cur = [WGParams(40, 12, 0.02), WGParams(50, 3, 0.15)]
        for h in range(2):
            mu, lam, q, wr = args["hyper"][h, :4]
            a, th, b = cur[h].as_tuple()
            for a2, th2 in ((a * 1.1, th), (a, th * 0.93)):
                new = list(cur)
                new[h] = WGParams(a2, th2, b)
                want = log_posterior(new, jute_sample, prior) - log_posterior(cur, jute_sample, prior)
                if a2 != a:
                    f = _kernels._log_cond_alpha
                    got = f(a2, th, b, args["logt"], args["d"][h], args["w"][h], args["M"][h], mu, lam) - f(
                        a, th, b, args["logt"], args["d"][h], args["w"][h], args["M"][h], mu, lam
                    )
                else:
                    f = _kernels._log_cond_theta
                    rest = (args["logt"], args["d"][h], args["w"][h], args["M"][h], args["sumlog"][h], q, wr)
                    got = f(a, th2, b, *rest) - f(a, th, b, *rest)
                assert got == pytest.approx(want, abs=1e-10)

    def test_fixed_alpha_theta_gives_gamma_beta(self, jute_sample):
        prior = PriorSpec.uniform(2)
        args = kernel_inputs(jute_sample, prior)
        Q, k = 100_000, 2
        rng = np.random.default_rng(4)
        start = np.array([p.as_tuple() for p in JUTE_PAPER])
        shape = args["M"] + args["hyper"][:, 4]
        gam = rng.standard_gamma(shape, size=(Q, k))
        z = rng.standard_normal((Q, k, 2))
        lu = np.full((Q, k, 2), np.inf)  # every proposal rejected
        draws, accepted = _kernels.mcmc_sweeps(
            start, args["logt"], args["d"], args["w"], args["M"], args["sumlog"], args["hyper"], np.ones((k, 2)), gam, z, lu, False
        )
        assert np.all(accepted == 0)
        for h, p in enumerate(JUTE_PAPER):
            rate = 2.0 + np.sum(jute_sample.weights[h] * np.logaddexp(0, p.theta * np.log(jute_sample.times / p.alpha)))
            assert np.all(draws[:, h, 0] == p.alpha)
            b = draws[:, h, 2]
            se = b.std() / math.sqrt(Q)
            assert abs(b.mean() - shape[h] / rate) < 4 * se

    def test_numpy_path_matches_compiled(self, jute_sample):
        prior = PriorSpec.uniform(2)
        args = kernel_inputs(jute_sample, prior)
        Q, k = 500, 2
        rng = np.random.default_rng(9)
        start = np.array([p.as_tuple() for p in JUTE_PAPER])
        gam = rng.standard_gamma(args["M"] + 0.01, size=(Q, k))
        z = rng.standard_normal((Q, k, 2))
        lu = np.log(rng.random((Q, k, 2)))
        scales = np.array([[5.0, 2.0], [20.0, 0.5]])
        for log_scale in (False, True):
            sc = scales / start[:, :2] if log_scale else scales
            pos = (start, args["logt"], args["d"], args["w"], args["M"], args["sumlog"], args["hyper"], sc, gam, z, lu, log_scale)
            a, acc_a = _kernels._mcmc_jit(*pos)
            b, acc_b = _kernels._mcmc_numpy(*pos)
            np.testing.assert_allclose(a, b, rtol=1e-12)
            np.testing.assert_array_equal(acc_a, acc_b)


@pytest.fixture(scope="module")
def short_chain(jute_sample):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_chain(jute_sample, Q=4000, M=500, rng=123, init=JUTE_PAPER)


class TestRunChain:
    def test_shapes_and_positivity(self, short_chain):
        assert short_chain.draws.shape == (4000, 6)
        assert short_chain.kept.shape == (3500, 6)
        assert np.all(short_chain.draws > 0)
        assert short_chain.acceptance.shape == (2, 2)
        assert np.all((short_chain.acceptance > 0) & (short_chain.acceptance < 1))
        assert short_chain.meta["scale_source"] == "5% of start"

    def test_seed_determinism(self, jute_sample, short_chain):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            again = run_chain(jute_sample, Q=4000, M=500, rng=123, init=JUTE_PAPER)
        np.testing.assert_array_equal(again.draws, short_chain.draws)
        np.testing.assert_array_equal(again.acceptance, short_chain.acceptance)

    def test_bad_configuration(self, jute_sample):
        with pytest.raises(ValueError):
            run_chain(jute_sample, Q=100, M=100, init=JUTE_PAPER)
        with pytest.raises(ValueError):
            run_chain(jute_sample, Q=100, M=10, init=JUTE_PAPER, proposal_scales=[[1, 0], [1, 1]])
        with pytest.raises(ValueError):
            run_chain(jute_sample, prior=PriorSpec.uniform(3), Q=100, M=10, init=JUTE_PAPER)

    def test_log_scale_option(self, jute_sample):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            chain = run_chain(jute_sample, Q=2000, M=200, rng=5, init=JUTE_PAPER, log_scale=True)
        assert chain.meta["log_scale"]
        np.testing.assert_allclose(chain.meta["proposal_scales"], 0.05)

    def test_export(self, short_chain, tmp_path):
        path = tmp_path / "chain.csv"
        export_chain(short_chain, path, include_burn_in=False)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (3500, 7)
        assert data[0, 0] == 501
        np.testing.assert_allclose(data[:, 1:], short_chain.kept, rtol=1e-9)
        header = path.read_text().splitlines()[0]
        assert header == "sweep,alpha_1,alpha_2,theta_1,theta_2,beta_1,beta_2"


class TestEstimators:
    def test_constant_chain(self):
        chain = chain_of([np.full(50, 2.5), np.full(50, 1.5), np.full(50, 0.3)])
        assert estimate_sel(chain)[0].as_tuple() == (2.5, 1.5, 0.3)
        for c in (-2.0, 1e-4, 2.0, 50.0):
            assert estimate_linex(chain, c)[0].as_tuple() == (2.5, 1.5, 0.3)
        iv = credible_interval(chain, 0)
        assert iv.lower == iv.upper == 2.5

    def test_burn_in_excluded(self):
        col = np.r_[np.full(10, 100.0), np.full(90, 1.0)]
        chain = chain_of([col, col, col], burn_in=10)
        assert estimate_sel(chain)[0].alpha == 1.0

    def test_linex_limits_and_jensen(self, short_chain):
        sel = np.array([p.as_tuple() for p in estimate_sel(short_chain)])
        small = np.array([p.as_tuple() for p in estimate_linex(short_chain, 1e-4)])
        pos = np.array([p.as_tuple() for p in estimate_linex(short_chain, 2.0)])
        neg = np.array([p.as_tuple() for p in estimate_linex(short_chain, -2.0)])
        np.testing.assert_allclose(small, sel, rtol=1e-3)
        assert np.all(pos <= sel) and np.all(neg >= sel)

    def test_linex_rejects_zero(self, short_chain):
        with pytest.raises(ValueError):
            estimate_linex(short_chain, 0.0)

    def test_linex_survives_large_c(self):
        col = np.linspace(1000.0, 1010.0, 100)
        chain = chain_of([col, col, col])
        v = estimate_linex(chain, 5.0)[0].alpha
        assert np.isfinite(v) and 1000 <= v <= col.mean()

    def test_credible_ranks(self):
        col = np.arange(1.0, 1001.0)
        chain = chain_of([col[::-1], col, col])
        iv = credible_interval(chain, 0)
        assert (iv.lower, iv.upper) == (25.0, 975.0)
        assert iv.method == "CRI" and iv.meta["param"] == "alpha_1"

    def test_credible_too_few(self):
        chain = chain_of([np.ones(20)] * 3)
        with pytest.raises(ValueError):
            credible_interval(chain, 0)

    def test_merge(self, short_chain):
        merged = merge_chains([short_chain, short_chain])
        assert merged.Q == 7000 and merged.burn_in == 0
        np.testing.assert_allclose(
            [p.as_tuple() for p in estimate_sel(merged)], [p.as_tuple() for p in estimate_sel(short_chain)]
        )
