"""Outcome sequences for repeated measurements on product, separable and symmetric inputs.

Randomness: trial ``t`` of a run with master seed ``s`` draws from its own
``numpy`` Philox stream keyed by ``(s, t)``.  Results therefore do not depend
on how trials are distributed over worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidInput, NumericFailure, ResourceLimit, Unsupported
from .povm import Povm, require_valid
from .states import ProductState, SeparableState, SymmetricState

PROB_TOL = 1e-9
BRUTE_FORCE_MAX_QUBITS = 12
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TrialResult:
    """One run of N measurements.

    ``outcomes`` holds effect indices, or is None when the sampler only
    tracked outcome counts.  ``sum_value`` is an exact ``int`` whenever all
    outcome values are integers.
    """

    n: int
    sum_value: int | float
    relative_frequency: float
    outcomes: np.ndarray | None = None


@dataclass(frozen=True)
class SplitState:
    """``|psi> = |1>|upper> + |0>|lower>`` with both parts on N-1 symmetric qubits."""

    upper: np.ndarray
    lower: np.ndarray


def trial_generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trial: Philox keyed by ``(seed, index)``."""
    if seed < 0 or index < 0:
        raise InvalidInput("seed and trial index must be non-negative")
    return np.random.Generator(np.random.Philox(key=(seed & _MASK64) | ((index & _MASK64) << 64)))


def _rekey(bitgen: np.random.Philox, seed: int, index: int):
    # same stream as trial_generator(seed, index), without building a new generator
    bitgen.state = {
        "bit_generator": "Philox",
        "state": {"counter": np.zeros(4, dtype=np.uint64),
                  "key": np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)},
        "buffer": np.zeros(4, dtype=np.uint64), "buffer_pos": 4, "has_uint32": 0, "uinteger": 0,
    }


def run_trials(fn: Callable[[np.random.Generator, int], object], n_trials: int, seed: int,
               threads: int = 1, start: int = 0) -> list:
    """Evaluate ``fn(rng, index)`` for ``index in [start, start + n_trials)`` in index order.

    ``rng`` is re-keyed in place between calls, so ``fn`` must not keep it.
    """
    if n_trials < 0:
        raise InvalidInput("n_trials must be non-negative")
    if threads < 1:
        raise InvalidInput("threads must be >= 1")
    if seed < 0 or start < 0:
        raise InvalidInput("seed and trial index must be non-negative")

    def chunk(bounds):
        lo, hi = bounds
        bitgen = np.random.Philox(key=0)
        rng = np.random.Generator(bitgen)
        out = []
        for t in range(lo, hi):
            _rekey(bitgen, seed, t)
            out.append(fn(rng, t))
        return out

    stop = start + n_trials
    if threads == 1 or n_trials < 2:
        return chunk((start, stop))
    size = max(1, -(-n_trials // (4 * threads)))
    chunks = [(lo, min(lo + size, stop)) for lo in range(start, stop, size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(chunk, chunks))
    return [r for part in parts for r in part]


def _result(povm: Povm, n: int, outcomes=None, counts=None) -> TrialResult:
    ints = povm.integer_values
    vals = ints if ints is not None else povm.values
    total = vals[outcomes].sum() if counts is None else counts @ vals
    total = int(total) if ints is not None else float(total)
    return TrialResult(n=n, sum_value=total, relative_frequency=total / n, outcomes=outcomes)


# --------------------------------------------------------------------------
# product and separable inputs
# --------------------------------------------------------------------------

class ProductPlan:
    """Per-site outcome probabilities of a product state, grouped by distinct site."""

    def __init__(self, povm: Povm, state: ProductState):
        require_valid(povm)
        if povm.dim != 2:
            raise Unsupported("product sampling is implemented for qubit POVMs")
        self.povm = povm
        self.n = state.n
        flat = state.factors.reshape(state.n, 4)
        uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        probs = np.einsum("ijk,skj->si", povm.effects, uniq.reshape(-1, 2, 2)).real
        dev = np.max(np.abs(probs.sum(axis=1) - 1.0))
        if dev > PROB_TOL:
            raise NumericFailure(f"outcome probabilities do not sum to 1 (deviation {dev:.3g})")
        self.group_probs = np.clip(probs, 0.0, None)
        self.group_probs /= self.group_probs.sum(axis=1, keepdims=True)
        self.group_counts = np.bincount(inverse, minlength=len(uniq))
        self.site_group = inverse
        self._site_probs = None

    @property
    def site_probs(self) -> np.ndarray:
        if self._site_probs is None:
            self._site_probs = np.ascontiguousarray(self.group_probs[self.site_group])
        return self._site_probs

    def sample(self, rng: np.random.Generator, record_outcomes: bool = True) -> TrialResult:
        if record_outcomes:
            outcomes = _kernels.categorical(self.site_probs, rng.random(self.n))
            return _result(self.povm, self.n, outcomes=outcomes)
        counts = np.zeros(self.povm.n_outcomes, dtype=np.int64)
        for c, p in zip(self.group_counts, self.group_probs):
            counts += rng.multinomial(c, p)
        return _result(self.povm, self.n, counts=counts)


def sample_product(povm: Povm, state: ProductState, rng: np.random.Generator,
                   record_outcomes: bool = True, plan: ProductPlan | None = None) -> TrialResult:
    """Independent site-by-site measurement of a product state.

    With ``record_outcomes=False`` only the outcome counts are drawn, one
    multinomial per group of identical sites; the sum has the same law.
    """
    plan = plan or ProductPlan(povm, state)
    return plan.sample(rng, record_outcomes)


class SeparablePlan:
    def __init__(self, povm: Povm, state: SeparableState):
        self.plans = [ProductPlan(povm, c) for c in state.components]
        self.cumulative = np.cumsum(state.weights)

    def sample(self, rng: np.random.Generator, record_outcomes: bool = True) -> tuple[int, TrialResult]:
        k = int(np.searchsorted(self.cumulative, rng.random() * self.cumulative[-1], side="right"))
        k = min(k, len(self.plans) - 1)
        return k, self.plans[k].sample(rng, record_outcomes)


def sample_separable(povm: Povm, state: SeparableState, rng: np.random.Generator,
                     record_outcomes: bool = True, plan: SeparablePlan | None = None) -> TrialResult:
    """Pick component ``k`` with probability ``lambda_k``, then sample that product state."""
    plan = plan or SeparablePlan(povm, state)
    return plan.sample(rng, record_outcomes)[1]


# --------------------------------------------------------------------------
# symmetric inputs
# --------------------------------------------------------------------------

def cg_split(state: SymmetricState) -> SplitState:
    """Decompose off the first qubit: ``|J,m> = a_m |1>|J-1/2, m-1/2> + b_m |0>|J-1/2, m+1/2>``."""
    n = state.n_qubits
    if n < 1:
        raise InvalidInput("cannot split a zero-qubit state")
    c = state.coeffs
    k = np.arange(n + 1)
    upper = (np.sqrt(k / n) * c)[1:]
    lower = (np.sqrt((n - k) / n) * c)[:-1]
    return SplitState(upper=upper, lower=lower)


def _check_qubit(povm: Povm):
    require_valid(povm)
    if povm.dim != 2:
        raise Unsupported("symmetric sampling needs a qubit POVM")


def measure_first_qubit(state: SymmetricState, povm: Povm,
                        rng: np.random.Generator) -> tuple[int, SymmetricState | None]:
    """Measure one qubit with Kraus ``sqrt(E_i)`` and keep one pure branch of the remainder.

    The unnormalised remainder is ``|1>u_i + |0>v_i`` with the measured qubit
    discarded, i.e. the mixture ``|u_i><u_i| + |v_i><v_i|``; one of the two is
    kept with probability proportional to its squared norm.  Returns None as the
    post-state when the last qubit is measured.
    """
    _check_qubit(povm)
    split = cg_split(state)
    u0, v0 = split.upper, split.lower
    kr = povm.kraus
    branches = [(k[1, 1] * u0 + k[1, 0] * v0, k[0, 1] * u0 + k[0, 0] * v0) for k in kr]
    p = np.array([np.vdot(u, u).real + np.vdot(v, v).real for u, v in branches])
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise NumericFailure(f"branch probabilities sum to {p.sum()!r}")
    rho1 = np.array([[np.vdot(v0, v0), np.vdot(u0, v0)], [np.vdot(v0, u0), np.vdot(u0, u0)]])
    direct = np.einsum("ijk,kj->i", povm.effects, rho1).real
    if np.max(np.abs(direct - p)) > PROB_TOL:
        raise NumericFailure("branch probabilities disagree with tr(rho_1 E_i)")
    cdf = np.cumsum(p)
    i = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), len(p) - 1)
    u, v = branches[i]
    nu = np.vdot(u, u).real
    keep = u if rng.random() * p[i] < nu else v
    if state.n_qubits == 1:
        return i, None
    return i, SymmetricState(state.n_qubits - 1, keep / np.linalg.norm(keep))


def sample_symmetric(povm: Povm, state: SymmetricState, rng: np.random.Generator) -> TrialResult:
    """Measure all N qubits of a symmetric state in sequence (O(N^2) per trial)."""
    _check_qubit(povm)
    n = state.n_qubits
    if n < 1:
        raise InvalidInput("state has no qubits")
    outcomes, dev = _kernels.symmetric_trial(state.coeffs, povm.kraus, povm.effects, rng.random(2 * n))
    if dev > PROB_TOL:
        raise NumericFailure(f"probability conservation violated by {dev:.3g}")
    return _result(povm, n, outcomes=outcomes)


def symmetric_sums(povm: Povm, state: SymmetricState, n_trials: int, seed: int,
                   threads: int = 1) -> np.ndarray:
    """``X^(N)`` for trials ``0..n_trials-1``; same streams as :func:`sample_symmetric`."""
    _check_qubit(povm)
    n = state.n_qubits
    if n < 1:
        raise InvalidInput("state has no qubits")
    ints = povm.integer_values
    vals = ints if ints is not None else povm.values
    coeffs, kraus, effects = state.coeffs, povm.kraus, povm.effects
    kernel = _kernels.symmetric_trial

    def one(rng, _t):
        outcomes, dev = kernel(coeffs, kraus, effects, rng.random(2 * n))
        if dev > PROB_TOL:
            raise NumericFailure(f"probability conservation violated by {dev:.3g}")
        return vals[outcomes].sum()

    return np.array(run_trials(one, n_trials, seed, threads), dtype=vals.dtype)


def symmetric_to_full(state: SymmetricState) -> np.ndarray:
    """Embed into the 2^N space; qubit 0 is the most significant bit."""
    n = state.n_qubits
    if n > BRUTE_FORCE_MAX_QUBITS:
        raise ResourceLimit(f"full-space embedding capped at {BRUTE_FORCE_MAX_QUBITS} qubits")
    basis = np.arange(2**n)
    ones = np.array([bin(b).count("1") for b in basis])
    norms = np.sqrt(np.array([comb(n, k) for k in range(n + 1)], dtype=float))
    return state.coeffs[ones] / norms[ones]


def product_to_full(kets: Sequence) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for k in kets:
        out = np.kron(out, np.asarray(k, dtype=complex))
    return out


def brute_force_distribution(povm: Povm, initial, kraus_twists: Sequence | None = None) -> dict:
    """Exact law of ``X^(N)`` by enumerating every outcome path in the full space.

    ``initial`` is a 2^N amplitude vector or a :class:`SymmetricState`.
    ``kraus_twists`` optionally supplies unitaries ``U_i`` so that outcome ``i``
    acts as ``U_i sqrt(E_i)``; the result must not depend on them.
    """
    _check_qubit(povm)
    psi = symmetric_to_full(initial) if isinstance(initial, SymmetricState) else np.asarray(initial, dtype=complex)
    n = int(round(np.log2(psi.size)))
    if 2**n != psi.size or n < 1:
        raise InvalidInput("state vector length must be a power of two")
    if n > BRUTE_FORCE_MAX_QUBITS:
        raise ResourceLimit(f"brute-force enumeration capped at {BRUTE_FORCE_MAX_QUBITS} qubits")
    if abs(np.vdot(psi, psi).real - 1.0) > PROB_TOL:
        raise InvalidInput("state vector is not normalized")
    ops = povm.kraus
    if kraus_twists is not None:
        ops = np.stack([np.asarray(u, dtype=complex) @ k for u, k in zip(kraus_twists, ops)])
    ints = povm.integer_values
    vals = ints if ints is not None else povm.values

    dist: dict = {}

    def walk(tensor, depth, acc):
        if depth == n:
            prob = np.vdot(tensor, tensor).real
            key = int(acc) if ints is not None else float(acc)
            dist[key] = dist.get(key, 0.0) + prob
            return
        for i, k in enumerate(ops):
            nxt = np.moveaxis(np.tensordot(k, tensor, axes=([1], [depth])), 0, depth)
            if np.vdot(nxt, nxt).real > 0.0:
                walk(nxt, depth + 1, acc + vals[i])

    walk(psi.reshape((2,) * n), 0, 0)
    total = sum(dist.values())
    if abs(total - 1.0) > PROB_TOL:
        raise NumericFailure(f"path probabilities sum to {total!r}")
    return dict(sorted(dist.items()))

