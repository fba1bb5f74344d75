import numpy as np
import pytest

from graphcp import (
    ChangepointState,
    MultinomialDirichlet,
    PoissonGamma,
    SeriesPanel,
    log_lik_full,
    log_segment_lik,
)

from oracles import quad_binary_dirichlet, quad_poisson_gamma


@pytest.fixture
def count_panel():
    rng = np.random.default_rng(3)
    return SeriesPanel(rng.poisson(4.0, size=(2, 10)), kind="count")


class TestPoissonGamma:
    def test_single_zero_observation(self):
        # quadrature oracle gives log(1/2) for PoissonGamma(1, 1) on [0]
        m = PoissonGamma(1.0, 1.0)
        c = m.build_cache(SeriesPanel(np.array([[0, 0]]), kind="count"))
        assert log_segment_lik(m, c, 0, 1, 2) == pytest.approx(-0.6931471805599453, abs=1e-12)

    def test_single_count_two(self):
        # oracle: Gamma(3) / (2^3 * 2!) = 1/8
        m = PoissonGamma(1.0, 1.0)
        c = m.build_cache(SeriesPanel(np.array([[2, 0]]), kind="count"))
        assert log_segment_lik(m, c, 0, 1, 2) == pytest.approx(-2.0794415416798357, abs=1e-12)

    def test_matches_quadrature(self, count_panel):
        m = PoissonGamma(2.5, 0.7)
        c = m.build_cache(count_panel)
        for (i, t1, t2) in [(0, 1, 4), (0, 3, 8), (1, 2, 11), (1, 1, 11)]:
            data = count_panel.values[i, t1 - 1 : t2 - 1]
            assert log_segment_lik(m, c, i, t1, t2) == pytest.approx(
                quad_poisson_gamma(data, 2.5, 0.7), abs=1e-7
            )

    def test_cache_equals_direct_summation(self, count_panel):
        m = PoissonGamma(1.5, 0.3)
        c = m.build_cache(count_panel)
        for i in range(2):
            for t1 in range(1, 10):
                for t2 in range(t1 + 1, 12):
                    direct = quad_poisson_gamma(count_panel.values[i, t1 - 1 : t2 - 1], 1.5, 0.3)
                    assert log_segment_lik(m, c, i, t1, t2) == pytest.approx(direct, abs=1e-6)

    def test_empty_segment_rejected(self, count_panel):
        m = PoissonGamma(1.0, 1.0)
        c = m.build_cache(count_panel)
        with pytest.raises(ValueError):
            log_segment_lik(m, c, 0, 4, 4)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            PoissonGamma(0.0, 1.0)


class TestMultinomialDirichlet:
    def test_uniform_pair(self):
        # quadrature of 2 theta (1 - theta) over (0, 1) is 1/3
        m = MultinomialDirichlet([1.0, 1.0])
        c = m.build_cache(SeriesPanel(np.array([[[1, 1], [0, 0]]]), kind="vector"))
        assert log_segment_lik(m, c, 0, 1, 2) == pytest.approx(np.log(1 / 3), abs=1e-12)

    def test_single_category(self):
        # quadrature of theta over (0, 1) is 1/2
        m = MultinomialDirichlet([1.0, 1.0])
        c = m.build_cache(SeriesPanel(np.array([[[1, 0], [0, 0]]]), kind="vector"))
        assert log_segment_lik(m, c, 0, 1, 2) == pytest.approx(np.log(1 / 2), abs=1e-12)

    def test_matches_quadrature(self):
        rng = np.random.default_rng(5)
        x = rng.integers(0, 6, size=(1, 8, 2))
        panel = SeriesPanel(x, kind="vector")
        m = MultinomialDirichlet([1.3, 2.1])
        c = m.build_cache(panel)
        for t1, t2 in [(1, 3), (2, 7), (1, 9)]:
            data = [tuple(row) for row in x[0, t1 - 1 : t2 - 1]]
            assert log_segment_lik(m, c, 0, t1, t2) == pytest.approx(
                quad_binary_dirichlet(data, 1.3, 2.1), abs=1e-7
            )

    def test_category_mismatch_rejected(self):
        m = MultinomialDirichlet([1.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            m.build_cache(SeriesPanel(np.zeros((1, 3, 2), dtype=int), kind="vector"))


class TestFullLikelihood:
    def test_no_changepoints_is_single_segment(self, count_panel):
        m = PoissonGamma(2.0, 1.0)
        c = m.build_cache(count_panel)
        state = ChangepointState(((), ()))
        expected = log_segment_lik(m, c, 0, 1, 11) + log_segment_lik(m, c, 1, 1, 11)
        assert log_lik_full(m, c, state, 10) == pytest.approx(expected, abs=1e-12)

    def test_insert_then_delete_identity(self, count_panel):
        m = PoissonGamma(2.0, 1.0)
        c = m.build_cache(count_panel)
        base = ChangepointState(((4,), ()))
        v0 = log_lik_full(m, c, base, 10)
        with_extra = ChangepointState(((4, 7), ()))
        removed = log_lik_full(m, c, with_extra, 10) - (
            log_segment_lik(m, c, 0, 4, 7) + log_segment_lik(m, c, 0, 7, 11)
        ) + log_segment_lik(m, c, 0, 4, 11)
        assert removed == pytest.approx(v0, abs=1e-12)

    def test_split_consistency_random(self, count_panel):
        # splitting the only segment at t must add the two parts and drop the whole
        m = PoissonGamma(2.0, 1.0)
        c = m.build_cache(count_panel)
        rng = np.random.default_rng(11)
        for _ in range(20):
            t = int(rng.integers(2, 11))
            split = log_lik_full(m, c, ChangepointState(((t,), ())), 10)
            whole = log_lik_full(m, c, ChangepointState(((), ())), 10)
            delta = (
                log_segment_lik(m, c, 0, 1, t)
                + log_segment_lik(m, c, 0, t, 11)
                - log_segment_lik(m, c, 0, 1, 11)
            )
            assert split - whole == pytest.approx(delta, abs=1e-10)
