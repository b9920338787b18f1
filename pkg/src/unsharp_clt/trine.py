"""The three-outcome "trine" qubit POVM and the separable-vs-entangled game built on it.

Effects are ``E_i = (I + m_i . sigma)/3`` with ``m_0 = (1, 0, 0)`` and
``m_{+-1} = (-1/2, 0, +-sqrt(3)/2)``; outcome values are ``0, +1, -1``.  Then
``sum x_i E_i = sigma_z/sqrt(3)`` and ``sum x_i^2 E_i = 2I/3 - sigma_x/3``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .operators import bloch_density, pauli
from .povm import Povm
from .sampler import ProductPlan, SeparablePlan, run_trials, sample_symmetric
from .states import (
    ProductState,
    SeparableState,
    ansatz_cut,
    dicke_superposition,
    mean_xn_trine,
    q_bound,
    s_bound,
    variance_xn_trine,
)
from .statistics import (
    BERRY_ESSEEN_C0,
    GameSpec,
    chebyshev_lower,
    theorem2_bound,
    win_probability,
)

SQRT3 = math.sqrt(3.0)
TRINE_DIRECTIONS = np.array([[1.0, 0.0, 0.0], [-0.5, 0.0, SQRT3 / 2], [-0.5, 0.0, -SQRT3 / 2]])
TRINE_VALUES = np.array([0.0, 1.0, -1.0])
# |X| <= 1 and the largest E|X - mu|^3 over all states is 1 (attained at |->).
TRINE_THIRD_MOMENT_BOUND = 1.0
# A valid but looser std-deviation floor (the true floor is 1/2); bounds are also reported with it.
LOOSE_SIGMA_MINUS = 1.0 / 3.0


def trine_povm() -> Povm:
    sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
    effects = np.stack([(np.eye(2) + m[0] * sx + m[1] * sy + m[2] * sz) / 3 for m in TRINE_DIRECTIONS])
    return Povm(effects, TRINE_VALUES)


@dataclass(frozen=True)
class TrineClosedForm:
    bloch_x: float
    bloch_z: float
    variance: float


def trine_variance(bloch_x: float, bloch_z: float) -> TrineClosedForm:
    """``Var[X] = <B> - <A>^2 = 2/3 - x/3 - z^2/3`` for Bloch components ``x, z``."""
    if bloch_x**2 + bloch_z**2 > 1.0 + 1e-12:
        raise InvalidInput("Bloch vector outside the unit disk")
    return TrineClosedForm(bloch_x, bloch_z, 2.0 / 3.0 - bloch_x / 3.0 - bloch_z**2 / 3.0)


def trine_min_variance() -> TrineClosedForm:
    """Exact minimiser over the Bloch ball.

    On the boundary ``z^2 = 1 - x^2`` the variance is ``(1 - x + x^2)/3``,
    minimal at ``x = 1/2``; interior points are never better because the
    variance decreases outward in ``z``.
    """
    return trine_variance(0.5, SQRT3 / 2)


def separable_baseline(n: int) -> SeparableState:
    """``|+><+|^N``: zero mean per site and per-site variance 1/3."""
    if n < 1:
        raise InvalidInput("n must be positive")
    return SeparableState.pure_product(ProductState.iid(bloch_density(1.0, 0.0, 0.0), n))


def alternating_baseline(n: int) -> SeparableState:
    """Product state alternating the two variance-1/4 minimisers ``(1/2, 0, +-sqrt(3)/2)``.

    Site means are ``+-1/2``, so for even ``n`` the total mean is 0 and
    ``Var[X^(N)] = N/4``, smaller than for :func:`separable_baseline`.
    """
    if n < 1:
        raise InvalidInput("n must be positive")
    up = bloch_density(0.5, 0.0, SQRT3 / 2)
    down = bloch_density(0.5, 0.0, -SQRT3 / 2)
    factors = np.where((np.arange(n) % 2 == 0)[:, None, None], up, down)
    return SeparableState.pure_product(ProductState(factors))


def _version() -> str:
    from . import __version__

    return __version__


def run_game(n: int, beta: float, alpha: float, eps: float, trials: int, seed: int,
             threads: int = 1, c0: float = BERRY_ESSEEN_C0, sigma_minus: float | None = None,
             m_bound: float = TRINE_THIRD_MOMENT_BOUND, keep_results: bool = False) -> dict:
    """Play the game with the flat Dicke-window state ``L = round(N^beta)``.

    The record carries the Monte Carlo win estimate together with the exact
    variance of ``X^(N)``, the ``Q``/``s_N`` bounds, the Chebyshev lower bound
    and the separable upper bound at the same ``N``.
    """
    if n < 2 or n % 2:
        raise InvalidInput("run_game needs an even number of qubits")
    if trials < 1:
        raise InvalidInput("trials must be positive")
    l_cut = ansatz_cut(n, beta)
    state = dicke_superposition(n, l_cut)
    povm = trine_povm()
    game = GameSpec(n=n, eps=eps, alpha=alpha, target=0.0)
    results = run_trials(lambda rng, _t: sample_symmetric(povm, state, rng), trials, seed, threads)
    est = win_probability(results, game)
    var_exact = variance_xn_trine(state)
    record = {
        "kind": "entangled",
        "version": _version(),
        "n": n, "beta": beta, "l_cut": l_cut, "alpha": alpha, "eps": eps, "target": 0.0,
        "trials": trials, "seed": seed,
        "wins": est.wins, "win_estimate": est.estimate, "wilson_lo": est.low, "wilson_hi": est.high,
        "mean_exact": mean_xn_trine(state),
        "var_exact": var_exact,
        "q_bound": q_bound(n, l_cut),
        "s_bound": s_bound(n, l_cut, alpha, eps),
        "cheb_lower": chebyshev_lower(n, alpha, eps, var_exact),
        **_separable_bounds(n, alpha, eps, c0, sigma_minus, m_bound),
    }
    if keep_results:
        record["results"] = results
    return record


def _separable_bounds(n, alpha, eps, c0, sigma_minus, m_bound) -> dict:
    sm = math.sqrt(trine_min_variance().variance) if sigma_minus is None else sigma_minus
    out = {"sigma_minus": sm, "m_bound": m_bound, "c0": c0}
    if alpha > 0.5:
        out["thm2_bound"] = theorem2_bound(n, eps, alpha, sm, m_bound, c0)
        out["thm2_bound_loose_sigma"] = theorem2_bound(n, eps, alpha, LOOSE_SIGMA_MINUS, m_bound, c0)
    else:
        out["thm2_bound"] = out["thm2_bound_loose_sigma"] = None
    return out


def run_separable_game(state: SeparableState, alpha: float, eps: float, trials: int, seed: int,
                       threads: int = 1, c0: float = BERRY_ESSEEN_C0, sigma_minus: float | None = None,
                       m_bound: float = TRINE_THIRD_MOMENT_BOUND, target: float = 0.0,
                       keep_results: bool = False) -> dict:
    """Same game on a separable input; only outcome counts are sampled."""
    if trials < 1:
        raise InvalidInput("trials must be positive")
    n = state.n
    povm = trine_povm()
    plan = SeparablePlan(povm, state) if len(state.components) > 1 else ProductPlan(povm, state.components[0])
    if isinstance(plan, SeparablePlan):
        def one(rng, _t):
            return plan.sample(rng, record_outcomes=False)[1]
    else:
        def one(rng, _t):
            return plan.sample(rng, record_outcomes=False)
    results = run_trials(one, trials, seed, threads)
    game = GameSpec(n=n, eps=eps, alpha=alpha, target=target)
    est = win_probability(results, game)
    record = {
        "kind": "separable",
        "version": _version(),
        "n": n, "alpha": alpha, "eps": eps, "target": target,
        "trials": trials, "seed": seed,
        "wins": est.wins, "win_estimate": est.estimate, "wilson_lo": est.low, "wilson_hi": est.high,
        **_separable_bounds(n, alpha, eps, c0, sigma_minus, m_bound),
    }
    if keep_results:
        record["results"] = results
    return record
