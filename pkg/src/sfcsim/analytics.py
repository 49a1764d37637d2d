"""Closed-form performance expressions for SFC, TDMA and slotted ALOHA.

Everything combinatorial is evaluated in the log domain.  Binomials go through
``betaln`` (accurate for large arguments, no lgamma cancellation) and occupancy
probabilities use the balls-into-bins recurrence instead of Stirling numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln
from scipy.stats import poisson

from .codebook import FrameParams


class TruncationError(ArithmeticError):
    """A Poisson sum could not reach the requested mass within the term cap."""

    def __init__(self, message: str, achieved_mass: float):
        super().__init__(f"{message} (achieved mass {achieved_mass:.12g})")
        self.achieved_mass = achieved_mass


@dataclass(frozen=True)
class AnalyticParams:
    N: int
    k: int
    R: int
    lam: float
    truncation_mass: float = 1e-9

    def __post_init__(self):
        FrameParams(self.N, self.k, self.R)  # validates N, k, R
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise ValueError(f"lambda must be a finite non-negative number, got {self.lam}")
        if not 0 < self.truncation_mass <= 1e-3:
            raise ValueError("truncation_mass must lie in (0, 1e-3]")

    @property
    def frame(self) -> FrameParams:
        return FrameParams(self.N, self.k, self.R)

    @property
    def size(self) -> int:
        """Number of possible transmission maps, R**k."""
        return self.R**self.k


@dataclass(frozen=True)
class BoundsPair:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= x <= self.upper + slack


@dataclass(frozen=True)
class SfcErrorResult:
    value: float
    certificate: float  # total probability mass dropped by truncation


def log_binom(n, m):
    """log C(n, m) for real n >= m >= 0, vectorised."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    return -np.log1p(n) - betaln(n - m + 1.0, m + 1.0)


def _frame(params) -> tuple[int, int, int]:
    if isinstance(params, (FrameParams, AnalyticParams)):
        return params.N, params.k, params.R
    N, k, R = params
    return int(N), int(k), int(R)


# ---------------------------------------------------------------------------
# Random-map error probabilities


EXACT_LIMIT = 512  # largest N - T evaluated with exact binomials


def hypergeom_pmf(E: int, Q: int, T: int, params) -> float:
    """Probability that exactly E untransmitted code words are fully energised.

    Q is the number of fully energised map patterns in the radio symbol and T
    the number of maps actually transmitted.
    """
    N, k, R = _frame(params)
    M = R**k
    if not (0 <= T <= N <= M and 0 <= E <= N - T and T + E <= Q <= M):
        raise ValueError(f"infeasible hypergeometric arguments E={E}, Q={Q}, T={T}, N={N}, R^k={M}")
    if N - T - E > M - Q:
        return 0.0
    if N - T <= EXACT_LIMIT:
        # exact integers; int / int rounds correctly
        return math.comb(Q - T, E) * math.comb(M - Q, N - T - E) / math.comb(M - T, N - T)
    logp = log_binom(Q - T, E) + log_binom(M - Q, N - T - E) - log_binom(M - T, N - T)
    return float(np.exp(logp))


def _log_no_error(Q, T: int, N: int, M: int):
    """log P[E=0 | Q, T] as a cancellation-free log1p sum, vectorised over Q.

    Returns -inf where the untransmitted maps cannot avoid the Q - T
    energised patterns.
    """
    Q = np.atleast_1d(np.asarray(Q, dtype=float))
    m = N - T
    if m == 0:
        return np.zeros_like(Q)
    extra = Q - T
    j = np.arange(m, dtype=float)
    denom = (M - T) - j
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.log1p(-extra[:, None] / denom[None, :])
    out = terms.sum(axis=1)
    out[(M - Q) < m] = -np.inf
    return out


def error_prob_exact(Q: int, T: int, params) -> float:
    """Probability that at least one untransmitted code word is decoded."""
    N, k, R = _frame(params)
    M = R**k
    if Q > M:
        raise ValueError(f"Q={Q} exceeds the number of possible maps R^k={M}")
    if not (0 <= T <= N and T <= Q):
        raise ValueError(f"need 0 <= T <= min(N, Q); got T={T}, Q={Q}, N={N}")
    return float(-np.expm1(_log_no_error(Q, T, N, M))[0])


def error_prob_product(Q: int, T: int, params) -> float:
    """Literal product form: 1 - C(M, N-T)/C(M-T, N-T) * prod_i (1 - (N-T)/(M-i+1)).

    O(Q); kept as an independent route for small frames.
    """
    N, k, R = _frame(params)
    M = R**k
    ratio = math.exp(float(log_binom(M, N - T) - log_binom(M - T, N - T)))
    prod = 1.0
    for i in range(1, Q + 1):
        prod *= 1.0 - (N - T) / (M - i + 1)
    return 1.0 - ratio * prod


def error_prob_bounds(Q: int, T: int, params) -> BoundsPair:
    """Geometric bracket around :func:`error_prob_exact`, clipped to [0, 1]."""
    N, k, R = _frame(params)
    M = R**k
    if Q > M:
        raise ValueError(f"Q={Q} exceeds the number of possible maps R^k={M}")
    if not (0 <= T <= N and T <= Q):
        raise ValueError(f"need 0 <= T <= min(N, Q); got T={T}, Q={Q}, N={N}")
    m = N - T
    ratio = math.exp(float(log_binom(M, m) - log_binom(M - T, m)))
    lo = 1.0 - (1.0 - m / (M + 1)) ** Q * ratio
    # once M - Q + 1 < m the untransmitted maps cannot all avoid the energised set
    hi = 1.0 - max(0.0, 1.0 - m / (M - Q + 1)) ** Q * ratio
    clip = lambda x: min(1.0, max(0.0, x))
    return BoundsPair(clip(lo), clip(hi))


def single_event_error(Q: int, T: int, params, p_theta0: float) -> float:
    """Joint probability that one idle sensor is falsely flagged."""
    N, k, R = _frame(params)
    M = R**k
    _check_single(Q, T, N, M, p_theta0)
    return (Q - T) / (M - T) * p_theta0


def single_event_bounds(Q: int, T: int, params, p_theta0: float) -> BoundsPair:
    N, k, R = _frame(params)
    M = R**k
    _check_single(Q, T, N, M, p_theta0)
    if M <= N:
        raise ValueError(f"upper bound needs R^k > N (R^k={M}, N={N})")
    return BoundsPair((Q - T) / M * p_theta0, (Q - T) / (M - N) * p_theta0)


def _check_single(Q, T, N, M, p0):
    if not (0 <= T <= Q <= M and T <= N):
        raise ValueError(f"need 0 <= T <= Q <= R^k and T <= N; got Q={Q}, T={T}")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p_theta0 must be a probability, got {p0}")


# ---------------------------------------------------------------------------
# Occupancy (balls into bins)


def occupancy_table(a_max: int, R: int) -> np.ndarray:
    """table[A, U] = P[U distinct slots filled | A uniform accesses over R slots]."""
    if R < 1 or a_max < 0:
        raise ValueError("need R >= 1 and a_max >= 0")
    tab = np.zeros((a_max + 1, R + 1))
    tab[0, 0] = 1.0
    u = np.arange(R + 1)
    for a in range(1, a_max + 1):
        prev = tab[a - 1]
        tab[a] = prev * u / R
        tab[a, 1:] += prev[:-1] * (R - u[1:] + 1) / R
    return tab


def occupancy_pmf(U: int, A: int, R: int) -> float:
    if R < 1 or A < 0 or not 0 <= U <= min(A, R) or (U == 0) != (A == 0):
        raise ValueError(f"invalid occupancy arguments U={U}, A={A}, R={R}")
    return float(occupancy_table(A, R)[A, U])


def expected_occupancy(A: int, R: int) -> float:
    return R * (1.0 - (1.0 - 1.0 / R) ** A)


# ---------------------------------------------------------------------------
# SFC error probability over the occupancy of a radio symbol


def _poisson_support(mu: float, tail: float, max_terms: int) -> np.ndarray:
    """Poisson pmf on 0..m with m the smallest count leaving at most `tail` outside."""
    if mu == 0:
        return np.array([1.0])
    m = int(poisson.isf(tail, mu)) + 1
    while poisson.sf(m, mu) > tail:
        m += 1
    if m > max_terms:
        achieved = float(poisson.cdf(max_terms, mu))
        raise TruncationError(
            f"Poisson({mu:.6g}) needs {m} terms for tail {tail:.3g}, cap is {max_terms}", achieved
        )
    return poisson.pmf(np.arange(m + 1), mu)


def _products(R: int, k: int) -> np.ndarray:
    s = {1}
    for _ in range(k):
        s = {a * b for a in s for b in range(1, R + 1)}
    return np.array(sorted(s), dtype=np.int64)


class _ProductSpace:
    """Dense index over every product of at most k factors drawn from 1..R."""

    def __init__(self, R: int, k: int):
        self.values = _products(R, k)
        lookup = {int(v): i for i, v in enumerate(self.values)}
        # mult[u, i] = index of values[i] * u (or -1 when it cannot occur)
        self.mult = np.full((R + 1, len(self.values)), -1, dtype=np.int64)
        for u in range(1, R + 1):
            for i, v in enumerate(self.values):
                self.mult[u, i] = lookup.get(int(v) * u, -1)


def _q_distribution(lam: float, k: int, R: int, t_fixed: int | None, tail: float, max_terms: int,
                    space: _ProductSpace):
    """Distribution of Q = prod_i U_{n+i} over the product space.

    Transmissions touching the window are split into the T maps starting at n,
    prefix transmissions (started before n) and suffix transmissions (started
    after n).  Rows are walked left to right with state (A_i, r_i), r_i being
    the prefix transmissions still on air; given r_{i-1}, the number leaving
    at row i is Binomial(r_{i-1}, 1/(k-i)).

    With ``t_fixed`` given the T maps are conditioned on; otherwise T is
    Poisson(lam) like every other start.  Returns (probabilities over
    space.values, dropped mass).
    """
    dropped = 0.0
    M = len(space.values)
    if t_fixed is None:
        start = _poisson_support(lam, tail, max_terms)
        dropped += 1.0 - start.sum()
    else:
        start = np.zeros(t_fixed + 1)
        start[t_fixed] = 1.0
    prefix = _poisson_support((k - 1) * lam, tail, max_terms)
    dropped += 1.0 - prefix.sum()
    arrivals = _poisson_support(lam, tail, max_terms)
    a_cap = len(start) + len(prefix) + (k - 1) * len(arrivals)
    occ = occupancy_table(a_cap, R)
    prune = tail * 1e-6

    # row 0: A_0 = T + r_0
    states: dict[tuple[int, int], np.ndarray] = {}
    zero_mass = 0.0
    for t, pt in enumerate(start):
        if pt == 0:
            continue
        for r, pr in enumerate(prefix):
            a = t + r
            w = pt * pr
            zero_mass += w * occ[a, 0]
            vec = states.setdefault((a, r), np.zeros(M))
            for u in range(1, min(a, R) + 1):
                vec[space.mult[u, 0]] += w * occ[a, u]

    for i in range(1, k):
        leave_p = 1.0 / (k - i)
        nxt: dict[tuple[int, int], np.ndarray] = {}
        kept = 0.0
        for (a, r), vec in states.items():
            mass = vec.sum()
            if mass < prune:
                dropped += mass
                continue
            kept += mass
            leave = _binom_pmf(r, leave_p)
            for d, pd in enumerate(leave):
                if pd == 0:
                    continue
                for s, ps in enumerate(arrivals):
                    key = (a - d + s, r - d)
                    acc = nxt.get(key)
                    if acc is None:
                        nxt[key] = vec * (pd * ps)
                    else:
                        acc += vec * (pd * ps)
        dropped += kept * (1.0 - arrivals.sum())
        states = {}
        for (a, r), vec in nxt.items():
            zero_mass += vec.sum() * occ[a, 0]
            out = np.zeros(M)
            for u in range(1, min(a, R) + 1):
                idx = space.mult[u]
                ok = idx >= 0
                out += np.bincount(idx[ok], weights=vec[ok] * occ[a, u], minlength=M)
            states[(a, r)] = out

    qdist = np.zeros(M)
    for vec in states.values():
        qdist += vec
    return qdist, zero_mass, dropped


def _binom_pmf(n: int, p: float) -> np.ndarray:
    if p >= 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    j = np.arange(n + 1)
    return np.exp(log_binom(n, j) + j * math.log(p) + (n - j) * math.log1p(-p))


def _clamped_error(q: np.ndarray, T: int, N: int, M: int) -> np.ndarray:
    """P_e(Q, T) with Q < T (coinciding transmitted maps) mapped to zero."""
    pe = -np.expm1(_log_no_error(np.maximum(q, T), T, N, M))
    pe[q < T] = 0.0
    return np.clip(pe, 0.0, 1.0)


def sfc_error_prob(p: AnalyticParams, *, conditional: bool = True, max_terms: int = 96) -> SfcErrorResult:
    """Probability that the decoded event vector of a radio symbol is wrong.

    Sums P_e(prod U, T) over T and the occupancy vector.  By default the
    occupancy law is conditioned on T, since the T maps starting at n are
    themselves accesses of every row; ``conditional=False`` treats the
    occupancy vector and T as independent.
    The certificate bounds the absolute truncation error (result is a lower
    estimate; the true value lies in [value, value + certificate]).
    """
    N, k, R, lam = p.N, p.k, p.R, p.lam
    M = p.size
    if lam == 0:
        return SfcErrorResult(0.0, 0.0)
    tail = p.truncation_mass / 2
    space = _ProductSpace(R, k)
    t_pmf = _poisson_support(lam, tail, max_terms)
    dropped = 1.0 - t_pmf[: N + 1].sum()
    t_pmf = t_pmf[: N + 1]
    total = 0.0
    if conditional:
        for T, pt in enumerate(t_pmf):
            qdist, _, d = _q_distribution(lam, k, R, T, tail, max_terms, space)
            total += pt * float(qdist @ _clamped_error(space.values, T, N, M))
            dropped += pt * d
    else:
        qdist, _, d = _q_distribution(lam, k, R, None, tail, max_terms, space)
        dropped += d
        for T, pt in enumerate(t_pmf):
            total += pt * float(qdist @ _clamped_error(space.values, T, N, M))
    cert = min(float(dropped), 1.0)
    return SfcErrorResult(float(total), cert)


# ---------------------------------------------------------------------------
# Baseline closed forms


def saloha_error_prob(p: AnalyticParams) -> float:
    """Probability that an ALOHA slot of length k*tau/R carries two or more packets."""
    x = p.k * p.lam / p.R
    return float(-np.expm1(-x) - x * np.exp(-x))


def tdma_error_prob(p: AnalyticParams) -> float:
    x = p.lam / p.R
    ok = x * math.exp(-2 * p.k * x) + math.exp(-x)
    return 1.0 - ok**p.R


def tdma_efficiency(p: AnalyticParams) -> float:
    return math.exp(-(2 * p.k - 1) * p.lam / p.R)


def saloha_efficiency(p: AnalyticParams) -> float:
    return math.exp(-(p.N - 1) * p.k * p.lam / (p.N * p.R))


# ---------------------------------------------------------------------------
# Single-event bracket for SFC

MAX_SUBSET_K = 20


def window_vectors(k: int) -> np.ndarray:
    """Row i marks which of the 2k-1 start offsets n-k+1..n+k-1 reach subsymbol n+i."""
    out = np.zeros((k, 2 * k - 1), dtype=np.int64)
    for i in range(k):
        out[i, i : i + k] = 1
    return out


def subset_vectors(k: int) -> tuple[np.ndarray, np.ndarray]:
    """All 2^k sums q_i of window vectors, with alpha_i = subset size.

    Subset bit l selects window vector l; row 0 is the empty subset.
    """
    if k > MAX_SUBSET_K:
        raise ValueError(f"k={k} exceeds the subset enumeration guard ({MAX_SUBSET_K})")
    w = window_vectors(k)
    masks = np.arange(2**k)
    bits = (masks[:, None] >> np.arange(k)[None, :]) & 1
    return bits @ w, bits.sum(axis=1)


def _beta(q: np.ndarray, alpha: int, R: int) -> float:
    total = 0.0
    for l in range(1, alpha + 1):
        total += (-R) ** (alpha - l) * sum(math.comb(int(qj), l) for qj in q)
    return total


def expected_q_fraction(lam: float, k: int, R: int) -> float:
    """E[Q] / R^k, i.e. sum_i (-1)^alpha_i exp(beta_i lam / (-R)^alpha_i)."""
    q, alpha = subset_vectors(k)
    total = 0.0
    for qi, ai in zip(q, alpha):
        ai = int(ai)
        total += (-1) ** ai * math.exp(_beta(qi, ai, R) * lam / (-R) ** ai)
    return total


def bracket_sides(p: AnalyticParams) -> tuple[float, float]:
    """The two sides (E[Q] - lam)/R^k and (E[Q] - lam)/(R^k - N), unclipped and unordered."""
    M = p.size
    if M <= p.N:
        raise ValueError(f"bracket needs R^k > N (R^k={M}, N={p.N})")
    s = expected_q_fraction(p.lam, p.k, p.R)
    return s - p.lam / M, (M * s - p.lam) / (M - p.N)


def false_alarm_bracket(p: AnalyticParams) -> BoundsPair:
    """Bracket on P[theta_hat = 1 | theta = 0] for one sensor, i.e. on 1 - F for SFC.

    Not clipped: the sides only use E[Q] - E[T], which is negative when the
    window cannot hold phantom maps (k = 1).
    """
    a, b = bracket_sides(p)
    return BoundsPair(min(a, b), max(a, b))


@dataclass(frozen=True)
class Efficiencies:
    F_tdma: float
    F_saloha: float
    F_sfc: BoundsPair
    sfc_false_alarm: BoundsPair


def efficiency_closed_forms(p: AnalyticParams) -> Efficiencies:
    fa = false_alarm_bracket(p)
    clip = lambda x: min(1.0, max(0.0, x))
    F_sfc = BoundsPair(clip(1.0 - fa.upper), clip(1.0 - fa.lower))
    return Efficiencies(tdma_efficiency(p), saloha_efficiency(p), F_sfc, fa)
