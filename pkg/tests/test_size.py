"""Tests for branch discrimination, noise thresholds and the effective size."""

import math
from functools import partial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.stats import norm

from dispfock import size
from dispfock.errors import BracketError, ValidationError
from dispfock.fock import NumberDistribution
from dispfock.size import DiscriminationRule

import oracles

OPTIMAL = DiscriminationRule.optimal()


def series_distribution(alpha, amps, n_max):
    """Number distribution of ``D(alpha) sum_k amps[k] |k>`` from the series kernel."""
    vec = np.array([
        sum(a * oracles.series_kernel(alpha, k, n) for k, a in enumerate(amps)) for n in range(n_max + 1)
    ])
    return np.abs(vec) ** 2


def pm_oracle(alpha, n_max=120):
    s = 1 / math.sqrt(2)
    return series_distribution(alpha, [s, s], n_max), series_distribution(alpha, [s, -s], n_max)


def pg_oracle(p, q):
    return 0.5 + 0.25 * np.abs(p - q).sum()


# --------------------------------------------------------------------------
# Pair families
# --------------------------------------------------------------------------

def test_pm_pair_at_zero():
    p, q = size.branch_distributions_pm(0.0)
    assert np.allclose(p.probs[:2], [0.5, 0.5]) and np.allclose(p.probs, q.probs)


@pytest.mark.parametrize("alpha", [0.5, 3.0, 9.0])
def test_pm_pair_means(alpha):
    p, q = size.branch_distributions_pm(alpha)
    n = np.arange(p.n_max + 1)
    assert n @ p.probs == pytest.approx(alpha ** 2 + 0.5 + alpha, rel=1e-10)
    assert n @ q.probs == pytest.approx(alpha ** 2 + 0.5 - alpha, rel=1e-10)


def test_pm_pair_pinned_at_six():
    p, q = size.branch_distributions_pm(6.0)
    rp, rq = pm_oracle(6.0)
    k = min(p.n_max, 120)
    assert np.max(np.abs(p.probs[: k + 1] - rp[: k + 1])) < 1e-13
    assert np.max(np.abs(q.probs[: k + 1] - rq[: k + 1])) < 1e-13


def test_cohfock_pair():
    p, q = size.branch_distributions_cohfock(0.0)
    assert p.probs[0] == pytest.approx(1) and q.probs[1] == pytest.approx(1)
    assert size.guess_probability((p, q), OPTIMAL) == pytest.approx(1.0)
    for alpha in (1.0, 4.0, 9.0):
        p, q = size.branch_distributions_cohfock(alpha)
        n = np.arange(p.n_max + 1)
        assert n @ q.probs - n @ p.probs == pytest.approx(1.0, abs=1e-9)
    p, q = size.branch_distributions_cohfock(9.0)
    ref = series_distribution(9.0, [0.0, 1.0], 200)
    assert np.max(np.abs(q.probs[:201] - ref[: q.n_max + 1][:201])) < 1e-13


# --------------------------------------------------------------------------
# Guessing probabilities
# --------------------------------------------------------------------------

def test_guess_trivial_cases():
    d = NumberDistribution(np.array([0.2, 0.3, 0.5]))
    assert size.guess_probability((d, d), OPTIMAL) == 0.5
    assert size.guess_probability((d, d), DiscriminationRule.window(1, 1)) == 0.5
    zero, one = NumberDistribution(np.array([1.0, 0.0])), NumberDistribution(np.array([0.0, 1.0]))
    assert size.guess_probability((zero, one), OPTIMAL) == 1.0


def test_window_rule_cohfock_at_nine():
    """Window 81 +- 9 on the coherent / displaced-single-photon pair.

    The quoted figure (about 74 %) comes from a decision rule that is not
    spelled out; the value is pinned to the exact sum and compared loosely.
    """
    pair = size.branch_distributions_cohfock(9.0)
    value = size.guess_probability(pair, DiscriminationRule.window(81, 9))
    coh = oracles.poisson_pmf(81.0, 200)[72:91].sum()
    dfock = series_distribution(9.0, [0.0, 1.0], 90)[72:91].sum()
    assert value == pytest.approx(0.5 + 0.5 * abs(coh - dfock), abs=1e-12)
    assert abs(value - 0.74) < 0.03


@given(
    data=st.lists(st.floats(0.0, 1.0), min_size=4, max_size=40),
    center=st.floats(0.0, 20.0),
    half=st.floats(0.0, 10.0),
)
def test_optimal_dominates_window(data, center, half):
    raw = np.array(data) + 1e-3
    k = len(raw) // 2
    p = NumberDistribution(raw[:k] / raw[:k].sum())
    q = NumberDistribution(raw[k:2 * k] / raw[k:2 * k].sum())
    window = size.guess_probability((p, q), DiscriminationRule.window(center, half))
    assert size.guess_probability((p, q), OPTIMAL) >= window - 1e-15


@pytest.mark.parametrize("support", [1, 2, 5, 12, 20])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_optimal_matches_exhaustive_enumeration(support, seed):
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(support)), rng.dirichlet(np.ones(support))
    pair = (NumberDistribution(p), NumberDistribution(q))
    assert size.guess_probability(pair, OPTIMAL) == pytest.approx(oracles.enumerate_best_guess(p, q), abs=1e-14)


def test_window_rule_validation():
    with pytest.raises(ValidationError):
        DiscriminationRule.window(5, -1)


@pytest.mark.parametrize("n_photons", [1, 4, 15])
@pytest.mark.parametrize("sigma", [0.3, 1.0, 5.0])
def test_coarse_guess_archetype_closed_form(n_photons, sigma):
    """|0> vs |N> under Gaussian count noise: P_g = Phi(N / (2 sigma))."""
    pair = size.archetype_pair(n_photons)
    assert size.coarse_guess_probability(pair, sigma) == pytest.approx(norm.cdf(n_photons / (2 * sigma)), abs=1e-9)


def test_coarse_guess_limits_and_monotonicity():
    pair = size.branch_distributions_pm(3.0)
    sharp = size.guess_probability(pair, OPTIMAL)
    assert size.coarse_guess_probability(pair, 0.0) == sharp
    values = [size.coarse_guess_probability(pair, s) for s in (0.1, 0.5, 1.0, 3.0, 10.0)]
    assert values[0] <= sharp + 1e-12
    assert np.all(np.diff(values) < 0)


# --------------------------------------------------------------------------
# Noise thresholds
# --------------------------------------------------------------------------

def test_max_noise_half_is_zero():
    assert size.max_noise_for_pg(partial(size.branch_distributions_pm, 2.0), 0.5) == 0.0


@pytest.mark.parametrize("n_photons", [1, 3, 8])
@pytest.mark.parametrize("p_g", [0.6, 2 / 3, 0.9])
def test_max_noise_archetype_closed_form(n_photons, p_g):
    """P_g(eta) = 1 - (1 - eta)^N / 2, so eta* = 1 - (2 (1 - P_g))^(1/N)."""
    eta = size.max_noise_for_pg(partial(size.archetype_pair, n_photons), p_g)
    assert eta == pytest.approx(1 - (2 * (1 - p_g)) ** (1 / n_photons), abs=1e-9)


def test_max_noise_pm_pair_pinned_at_six():
    p, q = pm_oracle(6.0, 140)

    def excess(eta):
        thin = oracles.binomial_loss_matrix(eta, 141)
        return pg_oracle(thin @ p, thin @ q) - 2 / 3

    ref = brentq(excess, 1e-6, 1.0, xtol=1e-14)
    assert size.max_noise_for_pg(partial(size.branch_distributions_pm, 6.0), 2 / 3) == pytest.approx(ref, abs=1e-8)


def test_max_noise_unreachable():
    with pytest.raises(BracketError):
        size.max_noise_for_pg(partial(size.branch_distributions_pm, 0.0), 0.9)


@pytest.mark.parametrize("n_photons", [1, 5, 20])
def test_coarse_threshold_archetype_linear(n_photons):
    sigma = size.max_coarse_graining_for_pg(size.archetype_pair(n_photons), 2 / 3)
    assert sigma == pytest.approx(n_photons / (2 * norm.ppf(2 / 3)), rel=1e-7)


# --------------------------------------------------------------------------
# Effective size and disconnectivity
# --------------------------------------------------------------------------

@pytest.mark.parametrize("noise", size.NOISE_FAMILIES)
@pytest.mark.parametrize("n0", [1, 2, 5, 13])
def test_effective_size_fixed_point(noise, n0):
    n = size.effective_size_n(pair_at=partial(size.archetype_pair, n0), noise=noise)
    assert n == pytest.approx(n0, abs=1e-6)


def test_effective_size_increasing_in_alpha():
    sizes = [size.effective_size_n(math.sqrt(a)) for a in (1, 10, 50, 85)]
    assert np.all(np.diff(sizes) > 0)


def test_effective_size_coarse_matches_threshold_ratio():
    """With Gaussian coarse graining N = 2 Phi^-1(P_g) sigma*."""
    alpha = math.sqrt(20)
    sigma = size.max_coarse_graining_for_pg(size.branch_distributions_pm(alpha), 2 / 3)
    assert size.effective_size_n(alpha) == pytest.approx(2 * norm.ppf(2 / 3) * sigma, rel=1e-6)


def test_effective_size_validation():
    with pytest.raises(ValidationError):
        size.effective_size_n()
    with pytest.raises(ValidationError):
        size.effective_size_n(2.0, noise="thermal")


@pytest.mark.parametrize("n_eff, eta, expected", [(5.14, 0.922, 4.739), (7.0, 1.0, 7.0), (0.0, 0.5, 0.0)])
def test_disconnectivity(n_eff, eta, expected):
    assert size.disconnectivity(n_eff, eta) == pytest.approx(expected, abs=1e-3)


def test_size_report_fields():
    rep = size.size_report(70.716)
    assert rep.reference_n == size.REFERENCE_SIZE_N
    assert rep.discrepancy == pytest.approx(rep.n_eff - 5.14)
    assert rep.disconnectivity == pytest.approx(0.922 * rep.n_eff)
    assert rep.pg_optimal_pm >= 0.5
    assert abs(rep.pg_optimal_pm - 0.90) < 0.01
