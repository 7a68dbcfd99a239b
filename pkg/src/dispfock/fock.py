"""Truncated Fock-space algebra built around displaced few-photon cores.

States of the experiment are always a displacement of a state holding only a
handful of photons, and displacements, passive mode mixing and pure loss all
preserve that factorised form. :class:`DisplacedCoreState` keeps the
displacement amplitudes separately from a small two-mode density operator;
photon-number statistics of the full state are assembled on demand from the
displaced-Fock kernel :func:`number_kernel`.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .conventions import H, V, mode_index
from .errors import CutoffError, KernelRangeError, ValidationError

DEFAULT_CORE_CUTOFF = 3
DEFAULT_TRUNC_TOL = 1e-12

MAX_DELTA_SQ = 1e4
MAX_KERNEL_N = 20000
# Laguerre degree = min(m, n); cores never need more than this.
MAX_KERNEL_DEGREE = 64
SERIES_BELOW = 1.0


# --------------------------------------------------------------------------
# Displacement kernel
# --------------------------------------------------------------------------

def _laguerre(degree, a, x):
    """Generalised Laguerre ``L_degree^{(a)}(x)`` by upward recurrence.

    ``degree`` and ``a`` are integer arrays of equal shape; ``x`` is scalar.
    """
    degree = np.asarray(degree)
    a = np.asarray(a, dtype=float)
    out = np.ones(np.broadcast(degree, a).shape)
    kmax = int(degree.max(initial=0))
    if kmax == 0:
        return out
    prev = np.ones_like(out)
    cur = 1.0 + a - x
    out = np.where(degree == 1, cur, out)
    for k in range(1, kmax):
        prev, cur = cur, ((2 * k + 1 + a - x) * cur - (k + a) * prev) / (k + 1)
        out = np.where(degree == k + 1, cur, out)
    return out


def _check_kernel_range(delta, m, n):
    x = abs(delta) ** 2
    mm, nn = np.max(m, initial=0), np.max(n, initial=0)
    if not np.isfinite(x) or x > MAX_DELTA_SQ:
        raise KernelRangeError(abs(delta), int(mm), int(nn))
    if mm > MAX_KERNEL_N or nn > MAX_KERNEL_N:
        raise KernelRangeError(abs(delta), int(mm), int(nn), "index above supported cutoff")
    if min(mm, nn) > MAX_KERNEL_DEGREE:
        raise KernelRangeError(abs(delta), int(mm), int(nn), "Laguerre degree too high")


def _kernel_series(delta, n, m):
    # <n|D|m> = e^{-x/2} sum_k sqrt(m! n!)/(k!(m-k)!(n-k)!) delta^{n-k} (-delta*)^{m-k}
    x = abs(delta) ** 2
    out = np.zeros(n.shape, dtype=complex)
    kmax = int(np.minimum(n, m).max(initial=0))
    logabs = math.log(abs(delta)) if delta != 0 else -np.inf
    phase = delta / abs(delta) if delta != 0 else 1.0
    for k in range(kmax + 1):
        valid = (n >= k) & (m >= k)
        if not valid.any():
            continue
        nk = np.where(valid, n - k, 0)
        mk = np.where(valid, m - k, 0)
        p = nk + mk
        with np.errstate(invalid="ignore"):
            logmag = (
                0.5 * (gammaln(m + 1) + gammaln(n + 1))
                - gammaln(k + 1) - gammaln(mk + 1) - gammaln(nk + 1)
                + np.where(p > 0, p * logabs, 0.0)
            )
        term = np.exp(logmag) * phase ** nk * (-np.conj(phase)) ** mk
        out += np.where(valid, term, 0.0)
    return out * math.exp(-x / 2)


def _kernel_laguerre(delta, n, m):
    x = abs(delta) ** 2
    lo = np.minimum(n, m)
    hi = np.maximum(n, m)
    gap = hi - lo
    lag = _laguerre(lo, gap, x)
    with np.errstate(divide="ignore"):
        loglag = np.log(np.abs(lag))
    logmag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + gap * math.log(abs(delta)) - x / 2 + loglag
    phase = np.exp(1j * (n - m) * np.angle(delta)) * np.where(n < m, (-1.0) ** gap, 1.0)
    return np.exp(logmag) * np.sign(lag) * phase


def kernel_matrix(delta, rows, cols):
    """Matrix of displaced-Fock elements ``<n|D(delta)|m>``.

    Parameters
    ----------
    delta : complex
        Displacement amplitude.
    rows, cols : int or array_like of int
        Output photon numbers ``n`` and input photon numbers ``m``. An int
        ``k`` stands for ``range(k + 1)``.

    Returns
    -------
    ndarray of complex, shape (len(rows), len(cols))
    """
    n = np.arange(rows + 1) if np.isscalar(rows) else np.asarray(rows, dtype=int)
    m = np.arange(cols + 1) if np.isscalar(cols) else np.asarray(cols, dtype=int)
    if n.size and n.min() < 0 or m.size and m.min() < 0:
        raise ValidationError("photon numbers must be non-negative")
    delta = complex(delta)
    _check_kernel_range(delta, m, n)
    nn, mm = np.meshgrid(n, m, indexing="ij")
    if delta == 0:
        return (nn == mm).astype(complex)
    if abs(delta) ** 2 < SERIES_BELOW:
        return _kernel_series(delta, nn, mm)
    return _kernel_laguerre(delta, nn, mm)


def number_kernel(delta, m, n):
    """Single displaced-Fock amplitude ``<n|D(delta)|m>``."""
    if m < 0 or n < 0:
        raise ValidationError("photon numbers must be non-negative")
    return complex(kernel_matrix(delta, [n], [m])[0, 0])


def auto_cutoff(delta_sq, core_cutoff=DEFAULT_CORE_CUTOFF):
    """Default distribution cutoff for a displacement of squared size ``delta_sq``."""
    return int(math.ceil(delta_sq + 8.0 * math.sqrt(delta_sq + 1.0) + core_cutoff))


# --------------------------------------------------------------------------
# Single-mode vectors and number distributions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NumberDistribution:
    """Photon-number probabilities ``probs[n]`` for ``n = 0..n_max`` plus the
    probability mass that fell beyond the cutoff."""

    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise ValidationError("probs must be one-dimensional")
        if np.any(probs < -1e-12):
            raise ValidationError("probabilities must be non-negative")
        probs = np.clip(probs, 0.0, None)
        total = probs.sum() + self.tail_mass
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"distribution plus tail sums to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    @property
    def n_max(self):
        return len(self.probs) - 1

    @classmethod
    def from_probs(cls, probs):
        """Build from a (possibly truncated) probability vector; tail = 1 - sum."""
        probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        return cls(probs, max(0.0, 1.0 - probs.sum()))

    def padded(self, n_max):
        """Copy extended with zeros up to ``n_max`` (tail mass unchanged)."""
        if n_max < self.n_max:
            raise ValidationError("cannot pad to a smaller cutoff")
        return NumberDistribution(np.pad(self.probs, (0, n_max - self.n_max)), self.tail_mass)


@dataclass(frozen=True)
class FockVector:
    """Truncated single-mode pure state ``sum_n c_n |n>``."""

    amplitudes: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ValidationError("amplitudes must be a non-empty vector")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self):
        return len(self.amplitudes) - 1

    def number_distribution(self):
        probs = np.abs(self.amplitudes) ** 2
        return NumberDistribution(probs, max(0.0, 1.0 - probs.sum()))


def _displaced_column(alpha, n, n_max, tol):
    explicit = n_max is not None
    size = n_max if explicit else auto_cutoff(abs(alpha) ** 2, n)
    while True:
        col = kernel_matrix(alpha, size, [n])[:, 0]
        tail = max(0.0, 1.0 - float(np.sum(np.abs(col) ** 2)))
        if tail <= tol or size >= MAX_KERNEL_N:
            break
        if explicit:
            required = size
            while tail > tol and required < MAX_KERNEL_N:
                required = min(MAX_KERNEL_N, int(required * 1.25) + 8)
                longer = kernel_matrix(alpha, required, [n])[:, 0]
                tail = 1.0 - float(np.sum(np.abs(longer) ** 2))
            raise CutoffError(
                f"tail mass above tolerance {tol:.3g} at n_max={n_max}", required
            )
        size = int(size * 1.25) + 8
    return FockVector(col, tail)


def coherent_state(alpha, n_max=None, tol=DEFAULT_TRUNC_TOL):
    """Coherent state ``|alpha>`` truncated at ``n_max`` (automatic if None)."""
    return _displaced_column(complex(alpha), 0, n_max, tol)


def displaced_fock(alpha, n, n_max=None, tol=DEFAULT_TRUNC_TOL):
    """Displaced number state ``D(alpha)|n>``."""
    if n < 0:
        raise ValidationError("n must be non-negative")
    return _displaced_column(complex(alpha), n, n_max, tol)


def moments(dist):
    """Mean and variance of a :class:`NumberDistribution`.

    Warns when the tail mass is large enough (> 1e-6) to bias the result.
    """
    if dist.tail_mass > 1e-6:
        warnings.warn(
            f"distribution tail mass {dist.tail_mass:.3g} ignored in moments",
            RuntimeWarning,
            stacklevel=2,
        )
    n = np.arange(len(dist.probs))
    norm = dist.probs.sum()
    mean = float(np.dot(n, dist.probs) / norm)
    var = float(np.dot((n - mean) ** 2, dist.probs) / norm)
    return mean, var


# --------------------------------------------------------------------------
# Two-mode displaced-core states
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DisplacedCoreState:
    """``D_H(delta_H) D_V(delta_V) core D^dag D^dag`` on modes H and V.

    ``core`` is a ``(d*d, d*d)`` density operator with ``d = cutoff + 1`` and
    flattened index ``n_H * d + n_V``.
    """

    delta: np.ndarray
    core: np.ndarray
    trace_deficit: float = 0.0
    _checked: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=complex).reshape(2)
        core = np.asarray(self.core, dtype=complex)
        dim = core.shape[0]
        d = math.isqrt(dim)
        if core.shape != (dim, dim) or d * d != dim or d < 1:
            raise ValidationError("core must be a square (d*d, d*d) matrix")
        if self._checked:
            if np.max(np.abs(core - core.conj().T), initial=0.0) > 1e-12:
                raise ValidationError("core is not Hermitian")
            tr = float(np.trace(core).real)
            if tr > 1 + 1e-12 or tr < 1 - self.trace_deficit - 1e-12:
                raise ValidationError(
                    f"core trace {tr!r} inconsistent with deficit {self.trace_deficit!r}"
                )
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "core", core)

    @property
    def cutoff(self):
        return math.isqrt(self.core.shape[0]) - 1

    @property
    def dim(self):
        return self.cutoff + 1

    def tensor(self):
        """Core reshaped to ``[h, v, h', v']``."""
        d = self.dim
        return self.core.reshape(d, d, d, d)

    def reduced_core(self, mode):
        """Single-mode core of ``mode`` (partial trace over the other)."""
        t = self.tensor()
        if mode_index(mode) == H:
            return np.einsum("avbv->ab", t)
        return np.einsum("hahb->ab", t)

    def trace(self):
        return float(np.trace(self.core).real)

    def with_delta(self, delta):
        return DisplacedCoreState(np.asarray(delta, dtype=complex), self.core, self.trace_deficit, False)

    def with_core(self, core, extra_deficit=0.0):
        core = 0.5 * (core + core.conj().T)
        return DisplacedCoreState(self.delta, core, self.trace_deficit + extra_deficit, False)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.core).min())

    @classmethod
    def from_fock_amplitudes(cls, amplitudes, delta=(0, 0), cutoff=DEFAULT_CORE_CUTOFF):
        """Pure core from ``{(n_H, n_V): amplitude}``."""
        d = cutoff + 1
        psi = np.zeros(d * d, dtype=complex)
        for (nh, nv), c in amplitudes.items():
            if nh > cutoff or nv > cutoff:
                raise ValidationError(f"|{nh},{nv}> exceeds core cutoff {cutoff}")
            psi[nh * d + nv] = c
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValidationError("zero state")
        psi = psi / norm
        return cls(np.asarray(delta, dtype=complex), np.outer(psi, psi.conj()))

    @classmethod
    def vacuum(cls, cutoff=DEFAULT_CORE_CUTOFF):
        return cls.from_fock_amplitudes({(0, 0): 1.0}, cutoff=cutoff)


def displace(state, beta, mode):
    """Add ``beta`` to the displacement of ``mode``; the core is untouched."""
    delta = state.delta.copy()
    delta[mode_index(mode)] += complex(beta)
    return state.with_delta(delta)


def number_distribution(state, mode, n_max=None):
    """Photon-number distribution of ``mode`` for a displaced-core state."""
    k = mode_index(mode)
    rho = state.reduced_core(k)
    delta = state.delta[k]
    if n_max is None:
        n_max = auto_cutoff(abs(delta) ** 2, state.cutoff)
    kern = kernel_matrix(delta, n_max, state.cutoff)
    probs = np.einsum("nm,mk,nk->n", kern, rho, kern.conj()).real
    probs = np.clip(probs, 0.0, None)
    return NumberDistribution(probs, max(0.0, 1.0 - probs.sum()))


def vacuum_probability(state, det_mode=None):
    """Probability of no photons in ``det_mode`` (or in both modes if None)."""
    d = state.dim
    kh = kernel_matrix(state.delta[H], [0], d - 1)[0]
    kv = kernel_matrix(state.delta[V], [0], d - 1)[0]
    if det_mode is None:
        v = np.kron(kh, kv)
        return float(np.real(v @ state.core @ v.conj()))
    k = mode_index(det_mode)
    rho = state.reduced_core(k)
    v = kh if k == H else kv
    return float(np.real(v @ rho @ v.conj()))


# --------------------------------------------------------------------------
# Passive transforms and loss
# --------------------------------------------------------------------------

def _check_unitary(U):
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise ValidationError("mode matrix must be 2x2")
    if np.max(np.abs(U.conj().T @ U - np.eye(2))) > 1e-12:
        raise ValidationError("mode matrix is not unitary")
    return U


def fock_unitary(U, cutoff):
    """Induced unitary of the 2x2 mode matrix ``U`` on the truncated core space.

    Components pushed beyond ``cutoff`` in either mode are dropped; the
    returned matrix is exact on states whose total photon number is at most
    ``cutoff``.
    """
    U = _check_unitary(U)
    d = cutoff + 1
    W = np.zeros((d * d, d * d), dtype=complex)
    logf = gammaln(np.arange(2 * d + 1) + 1)
    for nh in range(d):
        for nv in range(d):
            total = nh + nv
            norm = math.exp(-0.5 * (logf[nh] + logf[nv]))
            for i in range(nh + 1):
                ci = math.comb(nh, i) * U[0, 0] ** i * U[1, 0] ** (nh - i)
                for j in range(nv + 1):
                    cj = math.comb(nv, j) * U[0, 1] ** j * U[1, 1] ** (nv - j)
                    p = i + j
                    q = total - p
                    if p > cutoff or q > cutoff:
                        continue
                    amp = ci * cj * norm * math.exp(0.5 * (logf[p] + logf[q]))
                    W[p * d + q, nh * d + nv] += amp
    return W


def passive_transform(U, state, tol=DEFAULT_TRUNC_TOL):
    """Apply a passive two-mode unitary: ``delta -> U delta``, core conjugated
    by the induced Fock unitary."""
    U = _check_unitary(U)
    W = fock_unitary(U, state.cutoff)
    core = W @ state.core @ W.conj().T
    loss = state.trace() - float(np.trace(core).real)
    if loss > tol:
        raise CutoffError(f"core cutoff {state.cutoff} too small for passive transform "
                          f"(norm loss {loss:.3g})", 2 * state.cutoff)
    out = DisplacedCoreState(U @ state.delta, state.core, state.trace_deficit, False)
    return out.with_core(core, max(loss, 0.0))


def loss_kraus(eta, cutoff):
    """Kraus operators ``A_k`` of the pure-loss channel, shape ``(k, n_out, n_in)``."""
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"transmission {eta!r} outside [0, 1]")
    d = cutoff + 1
    ops = np.zeros((d, d, d))
    for n in range(d):
        for k in range(n + 1):
            ops[k, n - k, n] = math.sqrt(
                math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k
            )
    return ops


def pure_loss(eta, state, mode):
    """Pure-loss channel of transmission ``eta`` on ``mode``.

    Uses ``L_eta o D(delta) = D(sqrt(eta) delta) o L_eta``.
    """
    k = mode_index(mode)
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"transmission {eta!r} outside [0, 1]")
    if eta == 1.0:
        return state
    A = loss_kraus(eta, state.cutoff)
    t = state.tensor()
    if k == H:
        t = np.einsum("kah,hvgw,kbg->avbw", A, t, A)
    else:
        t = np.einsum("kav,hvgw,kbw->hagb", A, t, A)
    d = state.dim
    delta = state.delta.copy()
    delta[k] *= math.sqrt(eta)
    out = DisplacedCoreState(delta, state.core, state.trace_deficit, False)
    return out.with_core(t.reshape(d * d, d * d))


def attenuate(eta, state):
    """Pure loss of the same transmission on both modes."""
    return pure_loss(eta, pure_loss(eta, state, H), V)
