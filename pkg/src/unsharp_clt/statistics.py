"""Empirical distributions, the Gaussian-mixture approximation and the bounds it is checked against."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import InvalidInput
from .povm import Povm, moments
from .states import SeparableState

# Berry-Esseen constant for sums of independent, non-identically distributed terms.
BERRY_ESSEEN_C0 = 0.56
WILSON_Z95 = 1.959963984540054
# relative slack on the win radius, absorbs last-ulp error in eps * N**(1 - alpha)
_RADIUS_RTOL = 1e-12


def std_normal_cdf(x):
    """Standard normal CDF (scipy's ``ndtr``); accepts scalars or arrays."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class GaussianMixtureCdf:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        mu = np.asarray(self.means, dtype=float).ravel()
        sd = np.asarray(self.stds, dtype=float).ravel()
        if not (len(w) == len(mu) == len(sd) >= 1):
            raise InvalidInput("mixture needs matching, non-empty weight/mean/std lists")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInput("mixture weights must be positive and sum to 1")
        if np.any(sd <= 0):
            raise InvalidInput("mixture standard deviations must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", sd)

    def __call__(self, x):
        return mixture_cdf(self, x)


def mixture_cdf(mix: GaussianMixtureCdf, x):
    x = np.asarray(x, dtype=float)
    z = (x[..., None] - mix.means) / mix.stds
    out = ndtr(z) @ mix.weights
    return float(out) if out.ndim == 0 else out


def build_mixture(povm: Povm, state: SeparableState) -> GaussianMixtureCdf:
    """Normal approximation of ``R_N`` for each product component of ``state``.

    Component ``k`` has mean ``mu_{N,k}`` (average of per-site means) and
    standard deviation ``Sigma_{N,k}/sqrt(N)``.
    """
    means, stds = [], []
    for comp in state.components:
        flat = comp.factors.reshape(comp.n, 4)
        uniq, counts = np.unique(flat, axis=0, return_counts=True)
        site = [moments(povm, f.reshape(2, 2)) for f in uniq]
        mu = np.array([m.mean for m in site]) @ counts / comp.n
        var = np.array([m.variance for m in site]) @ counts / comp.n
        if var <= 0:
            raise InvalidInput("a component has zero variance; the measurement is not strictly unsharp on it")
        means.append(mu)
        stds.append(math.sqrt(var / comp.n))
    return GaussianMixtureCdf(state.weights, np.array(means), np.array(stds))


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Right-continuous step function: ``F(x) = cumulative[i]`` on ``[points[i], points[i+1])``."""

    points: np.ndarray
    cumulative: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.points, x, side="right")
        vals = np.concatenate([[0.0], self.cumulative])[idx]
        return float(vals) if vals.ndim == 0 else vals


def empirical_cdf(samples) -> EmpiricalCdf:
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    if s.size == 0:
        raise InvalidInput("empirical_cdf needs at least one sample")
    pts, counts = np.unique(s, return_counts=True)
    cum = np.cumsum(counts) / s.size
    cum[-1] = 1.0
    return EmpiricalCdf(pts, cum)


def ks_distance(empirical: EmpiricalCdf, model: Callable) -> float:
    """``sup_x |F_emp(x) - G(x)|`` for continuous ``G``, attained at a jump from one side."""
    g = np.asarray(model(empirical.points), dtype=float)
    before = np.concatenate([[0.0], empirical.cumulative[:-1]])
    return float(max(np.max(np.abs(empirical.cumulative - g)), np.max(np.abs(before - g))))


def theorem1_bound(n: int, m_bound: float, sigma_minus: float, c0: float = BERRY_ESSEEN_C0) -> float:
    """Uniform distance between the CDF of ``R_N`` and its Gaussian mixture: ``C0 M / (sigma_-^3 sqrt N)``."""
    if n < 1 or m_bound <= 0 or sigma_minus <= 0 or c0 <= 0:
        raise InvalidInput("theorem1_bound needs positive arguments")
    return c0 * m_bound / (sigma_minus**3 * math.sqrt(n))


def theorem2_bound(n: int, eps: float, alpha: float, sigma_minus: float, m_bound: float,
                   c0: float = BERRY_ESSEEN_C0) -> float:
    """Upper bound on the separable-input win probability."""
    if alpha <= 0.5:
        raise InvalidInput("theorem2_bound requires alpha > 1/2")
    if n < 1 or eps <= 0 or sigma_minus <= 0 or m_bound <= 0 or c0 <= 0:
        raise InvalidInput("theorem2_bound needs positive arguments")
    gaussian = math.sqrt(2 / math.pi) * eps / sigma_minus / n ** (alpha - 0.5)
    return gaussian + 2 * theorem1_bound(n, m_bound, sigma_minus, c0)


def chebyshev_lower(n: int, alpha: float, eps: float, var_xn: float) -> float:
    """``1 - N^{2(alpha-1)} Var[X^(N)] / eps^2``; negative values mean the bound is vacuous."""
    if eps <= 0 or var_xn < 0:
        raise InvalidInput("need eps > 0 and var_xn >= 0")
    return 1.0 - float(n) ** (2 * (alpha - 1)) * var_xn / eps**2


@dataclass(frozen=True)
class GameSpec:
    """Win iff ``|R_N - target| <= eps / N**alpha`` (inclusive)."""

    n: int
    eps: float
    alpha: float
    target: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.eps <= 0:
            raise InvalidInput("game needs n >= 1 and eps > 0")

    @property
    def radius(self) -> float:
        """Allowed deviation of the sum ``X^(N)`` from ``N * target``."""
        return self.eps * float(self.n) ** (1 - self.alpha)

    def wins(self, sum_value) -> bool:
        centre = self.n * self.target
        if isinstance(sum_value, (int, np.integer)) and float(centre).is_integer():
            limit = math.floor(self.radius * (1 + _RADIUS_RTOL))
            return abs(int(sum_value) - int(centre)) <= limit
        return abs(float(sum_value) - centre) <= self.radius * (1 + _RADIUS_RTOL)


@dataclass(frozen=True)
class WinEstimate:
    estimate: float
    low: float
    high: float
    wins: int
    trials: int

    @property
    def half_width(self) -> float:
        return 0.5 * (self.high - self.low)


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z95) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidInput("need 0 <= successes <= trials, trials >= 1")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def win_probability(results: Sequence, game: GameSpec) -> WinEstimate:
    """Fraction of trials that hit the target window, with a 95% Wilson interval.

    Accepts :class:`~unsharp_clt.sampler.TrialResult` objects.
    """
    if len(results) == 0:
        raise InvalidInput("no trials")
    wins = 0
    for r in results:
        if r.n != game.n:
            raise InvalidInput(f"trial of length {r.n} does not match game n={game.n}")
        wins += game.wins(r.sum_value)
    lo, hi = wilson_interval(wins, len(results))
    return WinEstimate(wins / len(results), lo, hi, wins, len(results))


@dataclass(frozen=True)
class BoundReport:
    """``observed <= bound`` check; ``tolerance`` is the statistical allowance used."""

    name: str
    n: int
    observed: float
    bound: float
    tolerance: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.observed <= self.bound + self.tolerance

    @property
    def slack(self) -> float:
        return self.bound - self.observed

    def to_dict(self) -> dict:
        d = asdict(self)
        d["satisfied"] = self.satisfied
        d["slack"] = self.slack
        return d


def empirical_distribution(values) -> dict:
    vals, counts = np.unique(np.asarray(values), return_counts=True)
    total = counts.sum()
    return {v.item(): c / total for v, c in zip(vals, counts)}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def loglog_slope(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])
