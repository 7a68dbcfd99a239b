"""Coarse-grained macroscopicity of displaced single-photon superpositions.

The size of a superposition is read off from how much measurement noise
its two branches tolerate before they can no longer be told apart with a
fixed guessing probability ``P_g``. The effective size ``N`` is the Fock
number whose ``|0>`` versus ``|N>`` archetype tolerates the same noise.

Two noise families are available:

``"coarse"`` (default)
    Photon counting with Gaussian resolution: a count ``n`` is reported as
    ``n + N(0, sigma^2)``. Noise strength is ``sigma``.
``"loss"``
    Pure photon loss of transmission ``eta`` ahead of an ideal counter.
    Noise strength is ``1 - eta``. Under loss the tolerable noise of the
    ``D(alpha)(|0> +- |1>)`` pair saturates at large ``alpha``, so this
    family does not produce a size that grows with the displacement.
"""

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.optimize import brentq
from scipy.stats import binom, norm

from . import fock
from .errors import BracketError, ValidationError
from .optics import CoarseWindow, coarse_window_prob

REFERENCE_SIZE_N = 5.14
NOISE_FAMILIES = ("coarse", "loss")

# below this resolution neighbouring count peaks overlap by < exp(-50)
_SHARP_SIGMA = 0.05


@dataclass(frozen=True)
class DiscriminationRule:
    kind: str
    center: float = 0.0
    halfwidth: float = 0.0

    def __post_init__(self):
        if self.kind not in ("window", "optimal"):
            raise ValidationError(f"unknown rule {self.kind!r}")
        if self.halfwidth < 0:
            raise ValidationError("window halfwidth must be non-negative")

    @classmethod
    def window(cls, center, halfwidth):
        return cls("window", center, halfwidth)

    @classmethod
    def optimal(cls):
        return cls("optimal")


# --------------------------------------------------------------------------
# Pair families
# --------------------------------------------------------------------------

def _pair_cutoff(alpha):
    # the displaced one-photon branch has variance up to 3|alpha|^2; 12 standard
    # deviations keep the tail mass below 1e-14
    x = abs(alpha) ** 2
    return int(math.ceil(x + 12.0 * math.sqrt(3.0 * x + 1.0) + 10.0))


def _lossy_single_mode(alpha, amplitudes, eta):
    state = fock.DisplacedCoreState.from_fock_amplitudes(
        {(n, 0): c for n, c in enumerate(amplitudes)}, cutoff=max(1, len(amplitudes) - 1)
    )
    state = fock.pure_loss(eta, fock.displace(state, alpha, "H"), "H")
    return fock.number_distribution(state, "H", n_max=_pair_cutoff(alpha))


def _common(p, q):
    n = max(p.n_max, q.n_max)
    return p.padded(n), q.padded(n)


def branch_distributions_pm(alpha, eta=1.0):
    """Distributions of ``D(alpha)(|0> +- |1>)/sqrt 2`` after loss ``eta``."""
    s = 1 / math.sqrt(2)
    return _common(
        _lossy_single_mode(alpha, [s, s], eta),
        _lossy_single_mode(alpha, [s, -s], eta),
    )


def branch_distributions_cohfock(alpha, eta=1.0):
    """Distributions of ``|alpha>`` and ``D(alpha)|1>`` after loss ``eta``."""
    return _common(
        _lossy_single_mode(alpha, [1.0], eta),
        _lossy_single_mode(alpha, [0.0, 1.0], eta),
    )


def archetype_pair(n_photons, eta=1.0):
    """``|0>`` and ``|N>`` after loss ``eta`` (binomial thinning)."""
    vac = np.zeros(n_photons + 1)
    vac[0] = 1.0
    thinned = binom.pmf(np.arange(n_photons + 1), n_photons, eta)
    return fock.NumberDistribution.from_probs(vac), fock.NumberDistribution.from_probs(thinned)


# --------------------------------------------------------------------------
# Guessing probabilities
# --------------------------------------------------------------------------

def guess_probability(pair, rule):
    """Equal-prior success probability of telling ``pair`` apart.

    The window rule guesses whichever hypothesis puts more mass inside the
    window when the count lands inside, and the other one otherwise.
    """
    p, q = _common(*pair)
    if rule.kind == "optimal":
        return 0.5 + 0.25 * float(np.abs(p.probs - q.probs).sum())
    w = CoarseWindow(rule.center, rule.halfwidth)
    return 0.5 + 0.5 * abs(coarse_window_prob(p, w) - coarse_window_prob(q, w))


def coarse_guess_probability(pair, sigma):
    """Optimal guessing probability when counts carry Gaussian noise ``sigma``.

    The noisy count densities differ by ``g(x) = sum_n (p_n - q_n) phi((x - n) / sigma)``.
    The optimal rule guesses ``p`` where ``g > 0``, so ``P_g = 1/2 + 1/2 int_{g>0} g``.
    Sign changes of ``g`` are bracketed on a grid of spacing ``sigma / 12``,
    refined with Brent's method, and the integral is summed from normal CDFs.
    """
    p, q = _common(*pair)
    diff = p.probs - q.probs
    if sigma < _SHARP_SIGMA:
        return 0.5 + 0.25 * float(np.abs(diff).sum())
    n = np.nonzero(np.abs(diff) > 1e-300)[0]
    if n.size == 0:
        return 0.5
    diff = diff[n]

    def density(x):
        return float(np.dot(diff, norm.pdf(x, loc=n, scale=sigma)))

    def mass(a, b):
        return float(np.dot(diff, norm.cdf(b, loc=n, scale=sigma) - norm.cdf(a, loc=n, scale=sigma)))

    step = sigma / 12.0
    grid = np.arange(n[0] - 9 * sigma, n[-1] + 9 * sigma + step, step)
    values = np.concatenate([
        norm.pdf(chunk[:, None], loc=n[None, :], scale=sigma) @ diff
        for chunk in np.array_split(grid, max(1, grid.size * n.size // 2_000_000 + 1))
    ])
    signs = np.sign(values)
    roots = list(grid[signs == 0])
    for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]:
        roots.append(brentq(density, grid[i], grid[i + 1], xtol=1e-13 * max(1.0, sigma)))
    edges = [-math.inf] + sorted(roots) + [math.inf]
    positive = sum(max(0.0, mass(a, b)) for a, b in zip(edges[:-1], edges[1:]))
    return 0.5 + 0.5 * positive


def _pg_loss(pair_at, eta):
    return guess_probability(pair_at(eta), DiscriminationRule.optimal())


def _monotone_bisect(pg, p_g, lo, hi, increasing, tol, grid):
    coarse = np.array([pg(v) for v in np.linspace(lo, hi, grid)])
    steps = np.diff(coarse) if increasing else -np.diff(coarse)
    if np.any(steps < -1e-9):
        raise BracketError("guessing probability is not monotone in the noise parameter")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (pg(mid) >= p_g) == increasing:
            hi = mid
        else:
            lo = mid
    return hi if increasing else lo


def max_noise_for_pg(pair_at, p_g, tol=1e-12, grid=9):
    """Smallest transmission ``eta*`` still giving optimal ``P_g >= p_g``.

    ``pair_at(eta)`` returns the pair of distributions after loss ``eta``.
    Monotonicity of ``P_g`` in ``eta`` is checked on a coarse grid.
    """
    if p_g <= 0.5:
        return 0.0
    top = _pg_loss(pair_at, 1.0)
    if top < p_g:
        raise BracketError(f"P_g={p_g} unreachable: only {top:.6f} at eta=1")
    return _monotone_bisect(partial(_pg_loss, pair_at), p_g, 0.0, 1.0, True, tol, grid)


def max_coarse_graining_for_pg(pair, p_g, rtol=1e-10, grid=9):
    """Largest Gaussian count resolution ``sigma*`` still giving ``P_g >= p_g``."""
    if p_g <= 0.5:
        return math.inf
    pg = partial(coarse_guess_probability, pair)
    top = pg(0.0)
    if top < p_g:
        raise BracketError(f"P_g={p_g} unreachable: only {top:.6f} without noise")
    hi = max(1.0, float(pair[0].n_max))
    while pg(hi) >= p_g:
        hi *= 2.0
        if hi > 1e7:
            raise BracketError("guessing probability does not drop with coarse graining")
    return _monotone_bisect(pg, p_g, 0.0, hi, False, rtol * hi, grid)


# --------------------------------------------------------------------------
# Effective size
# --------------------------------------------------------------------------

def _pm_at(alpha, eta):
    return branch_distributions_pm(alpha, eta)


def _archetype_at(n_photons, eta):
    return archetype_pair(n_photons, eta)


def tolerable_noise(pair_at, p_g, noise="coarse"):
    """Noise strength at which ``pair_at`` reaches ``P_g``.

    For ``"coarse"`` this is ``sigma*``; for ``"loss"`` it is ``1 - eta*``.
    Larger means more robust.
    """
    if noise == "coarse":
        return max_coarse_graining_for_pg(pair_at(1.0), p_g)
    if noise == "loss":
        return 1.0 - max_noise_for_pg(pair_at, p_g)
    raise ValidationError(f"unknown noise family {noise!r}; expected one of {NOISE_FAMILIES}")


def archetype_tolerable_noise(n_photons, p_g, noise="coarse"):
    return tolerable_noise(partial(_archetype_at, n_photons), p_g, noise)


def _size_coordinate(value, noise):
    # coordinate in which the archetype's tolerable noise is linear in N (or 1/N)
    if noise == "coarse":
        return value
    return math.log(value) if value < 1.0 else -math.inf


def effective_size_n(alpha=None, p_g=2 / 3, pair_at=None, noise="coarse", n_limit=4096):
    """Effective size ``N`` of the ``D(alpha)(|0> +- |1>)`` pair.

    ``pair_at(eta)`` overrides the pair family, e.g. to feed an archetype
    back in. Between integer archetypes the tolerable noise is interpolated
    linearly in ``N`` for coarse graining and as ``log(1 - eta*)`` linear in
    ``1 / N`` for loss; both are exact for the archetype family.
    """
    if pair_at is None:
        if alpha is None:
            raise ValidationError("give alpha or pair_at")
        pair_at = partial(_pm_at, alpha)
    target = tolerable_noise(pair_at, p_g, noise)
    if not 0.0 < target < math.inf or (noise == "loss" and target >= 1.0):
        raise BracketError(f"tolerable noise {target} cannot be matched by an archetype")
    cache = {}

    def node(n):
        if n not in cache:
            cache[n] = archetype_tolerable_noise(n, p_g, noise)
        return cache[n]

    if target <= node(1):
        if noise == "coarse":
            return target / node(1)
        return math.log(1.0 - node(1)) / math.log(1.0 - target)
    lo, hi = 1, 2
    while node(hi) < target:
        lo, hi = hi, hi * 2
        if hi > n_limit:
            raise BracketError(f"effective size exceeds {n_limit}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if node(mid) < target:
            lo = mid
        else:
            hi = mid
    if target == node(hi):
        return float(hi)
    if noise == "coarse":
        return lo + (target - node(lo)) / (node(hi) - node(lo))
    g_lo = math.log(1.0 - node(lo))
    g_hi = math.log(1.0 - node(hi))
    frac = (math.log(1.0 - target) - g_lo) / (g_hi - g_lo)
    return 1.0 / (1.0 / lo + frac * (1.0 / hi - 1.0 / lo))


def disconnectivity(n_eff, eta_abs):
    if n_eff < 0:
        raise ValidationError("size must be non-negative")
    return eta_abs * n_eff


@dataclass(frozen=True)
class SizeReport:
    alpha_sq: float
    p_g: float
    noise: str
    tolerable_noise: float
    n_eff: float
    disconnectivity: float
    pg_window_cohfock: float
    pg_optimal_pm: float
    reference_n: float = REFERENCE_SIZE_N

    @property
    def discrepancy(self):
        """Computed size minus the reference value."""
        return self.n_eff - self.reference_n


def size_report(alpha_sq, p_g=2 / 3, eta_abs=0.922, noise="coarse"):
    alpha = math.sqrt(alpha_sq)
    pair_at = partial(_pm_at, alpha)
    window = DiscriminationRule.window(alpha_sq, alpha)
    return SizeReport(
        alpha_sq=alpha_sq,
        p_g=p_g,
        noise=noise,
        tolerable_noise=tolerable_noise(pair_at, p_g, noise),
        n_eff=(n_eff := effective_size_n(alpha, p_g, noise=noise)),
        disconnectivity=disconnectivity(n_eff, eta_abs),
        pg_window_cohfock=guess_probability(branch_distributions_cohfock(alpha), window),
        pg_optimal_pm=guess_probability(branch_distributions_pm(alpha), DiscriminationRule.optimal()),
    )
