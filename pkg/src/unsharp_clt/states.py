"""Input states: product states, separable mixtures and spin-J symmetric states.

Symmetric states store amplitudes ``c[k]`` over ``|J, m>`` with ``k = m + J``,
``J = N/2``; ``k`` counts the qubits in ``|1>``.  The stretched state
``|J, J>`` is ``|1>^N``, so ``|1>`` is the local spin-up state and the
collective operators are ``S_x = sum sigma_x/2``, ``S_y = -sum sigma_y/2``,
``S_z = -sum sigma_z/2`` in terms of the standard Pauli matrices of
:mod:`unsharp_clt.operators` (basis order ``|0>, |1>``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidInput
from .operators import PSD_TOL


@dataclass(frozen=True, eq=False)
class ProductState:
    """``rho_1 (x) ... (x) rho_N`` stored as an ``(N, 2, 2)`` array."""

    factors: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=complex)
        if f.ndim != 3 or f.shape[1:] != (2, 2) or f.shape[0] < 1:
            raise InvalidInput(f"factors must have shape (N, 2, 2), got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise InvalidInput("factors have non-finite entries")
        uniq = np.unique(f.reshape(len(f), 4), axis=0).reshape(-1, 2, 2)
        if np.max(np.abs(uniq - uniq.conj().transpose(0, 2, 1))) > PSD_TOL:
            raise InvalidInput("factor not Hermitian")
        if np.max(np.abs(np.trace(uniq, axis1=1, axis2=2) - 1)) > PSD_TOL:
            raise InvalidInput("factor trace != 1")
        if np.linalg.eigvalsh(uniq).min() < -PSD_TOL:
            raise InvalidInput("factor not PSD")
        object.__setattr__(self, "factors", f)

    @classmethod
    def iid(cls, rho, n: int) -> "ProductState":
        if n < 1:
            raise InvalidInput("n must be positive")
        rho = np.asarray(rho, dtype=complex)
        return cls(np.broadcast_to(rho, (n, 2, 2)))

    @property
    def n(self) -> int:
        return self.factors.shape[0]


@dataclass(frozen=True, eq=False)
class SeparableState:
    """Convex mixture ``sum_k lambda_k rho_k`` of product states on N qubits."""

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        comps = tuple(self.components)
        if len(comps) == 0 or len(comps) != len(w):
            raise InvalidInput("need one positive weight per component")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInput("weights must be positive and sum to 1")
        if len({c.n for c in comps}) != 1:
            raise InvalidInput("all components must act on the same number of qubits")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @classmethod
    def pure_product(cls, state: ProductState) -> "SeparableState":
        return cls(np.ones(1), (state,))

    @property
    def n(self) -> int:
        return self.components[0].n


@dataclass(frozen=True, eq=False)
class SymmetricState:
    two_j: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).ravel()
        if int(self.two_j) != self.two_j or self.two_j < 0:
            raise InvalidInput("two_j must be a non-negative integer")
        if c.shape[0] != self.two_j + 1:
            raise InvalidInput(f"expected {self.two_j + 1} coefficients, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise InvalidInput("coefficients have non-finite entries")
        if abs(np.vdot(c, c).real - 1.0) > 1e-12:
            raise InvalidInput("coefficients are not normalized")
        object.__setattr__(self, "two_j", int(self.two_j))
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def stretched(cls, n: int, up: bool = True) -> "SymmetricState":
        """``|1>^N`` (``up``) or ``|0>^N``."""
        c = np.zeros(n + 1, dtype=complex)
        c[n if up else 0] = 1.0
        return cls(n, c)

    @property
    def n_qubits(self) -> int:
        return self.two_j

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.two_j + 1) - self.two_j / 2


@dataclass(frozen=True)
class SpinExpectations:
    sz_mean: float
    sz_var: float
    sx_mean: float
    sy_mean: float = 0.0


def dicke_superposition(n_qubits: int, l_cut: int) -> SymmetricState:
    """Flat superposition of ``|J, m>`` over ``|m| <= l_cut`` for ``J = n_qubits/2``."""
    if n_qubits < 1:
        raise InvalidInput("n_qubits must be positive")
    if n_qubits % 2:
        raise InvalidInput("the flat Dicke window needs integer m, i.e. an even number of qubits")
    if l_cut < 0 or 2 * l_cut > n_qubits:
        raise InvalidInput(f"l_cut must lie in [0, N/2], got {l_cut}")
    j = n_qubits // 2
    c = np.zeros(n_qubits + 1, dtype=complex)
    c[j - l_cut:j + l_cut + 1] = 1.0 / np.sqrt(2 * l_cut + 1)
    return SymmetricState(n_qubits, c)


def lowering_expectation(state: SymmetricState) -> complex:
    """``<psi| S_- |psi>`` via ``S_-|J,m> = sqrt(J(J+1) - m(m-1)) |J,m-1>``."""
    c = state.coeffs
    if len(c) < 2:
        return 0j
    j = state.j
    m = state.m_values[1:]
    ladder = np.sqrt(np.clip(j * (j + 1) - m * (m - 1), 0.0, None))
    return complex(np.sum(c[:-1].conj() * c[1:] * ladder))


def spin_expectations(state: SymmetricState) -> SpinExpectations:
    p = np.abs(state.coeffs) ** 2
    m = state.m_values
    sz = float(p @ m)
    var = float(max(p @ m**2 - sz * sz, 0.0))
    s_minus = lowering_expectation(state)
    return SpinExpectations(sz_mean=sz, sz_var=var, sx_mean=s_minus.real, sy_mean=-s_minus.imag)


def exact_sz_moments(weights, two_j: int) -> tuple[Fraction, Fraction]:
    """Mean and variance of ``S_z`` in exact rational arithmetic.

    ``weights`` are the populations ``|c_m|^2`` indexed like ``coeffs`` and must
    be Fractions (or ints) for the result to be exact.
    """
    weights = [Fraction(w) for w in weights]
    if len(weights) != two_j + 1:
        raise InvalidInput("need 2J+1 weights")
    ms = [Fraction(2 * k - two_j, 2) for k in range(two_j + 1)]
    mean = sum((w * m for w, m in zip(weights, ms)), Fraction(0))
    second = sum((w * m * m for w, m in zip(weights, ms)), Fraction(0))
    return mean, second - mean * mean


def dicke_populations_exact(n_qubits: int, l_cut: int) -> list[Fraction]:
    """``|c_m|^2`` of :func:`dicke_superposition` as Fractions."""
    state = dicke_superposition(n_qubits, l_cut)  # argument checks
    j = state.two_j // 2
    w = Fraction(1, 2 * l_cut + 1)
    return [w if abs(k - j) <= l_cut else Fraction(0) for k in range(n_qubits + 1)]


def reduced_qubit(state: SymmetricState) -> np.ndarray:
    """Single-qubit marginal, from ``|psi> = |1>|a> + |0>|b>``."""
    from .sampler import cg_split

    split = cg_split(state)
    a, b = split.upper, split.lower
    rho = np.array([[np.vdot(b, b), np.vdot(a, b)],
                    [np.vdot(b, a), np.vdot(a, a)]], dtype=complex)
    return 0.5 * (rho + rho.conj().T)


def mean_xn_trine(state: SymmetricState) -> float:
    """``<X^(N)>`` for the trine variable, ``sum_i <sigma_z,i>/sqrt(3) = -(2/sqrt 3) <S_z>``."""
    return -2.0 / np.sqrt(3.0) * spin_expectations(state).sz_mean + 0.0


def variance_xn_trine(state: SymmetricState) -> float:
    """Exact ``Var[X^(N)]`` of the summed trine outcomes on a symmetric state.

    Uses ``N/3 - (2/3)<S_x> + (4/3) Delta S_z^2``; only meaningful for the trine
    POVM of :mod:`unsharp_clt.trine`.
    """
    s = spin_expectations(state)
    return state.n_qubits / 3.0 - (2.0 / 3.0) * s.sx_mean + (4.0 / 3.0) * s.sz_var


def q_bound(n_qubits: int, l_cut: int) -> float:
    if n_qubits < 1:
        raise InvalidInput("n_qubits must be positive")
    if l_cut < 0 or 2 * l_cut > n_qubits:
        raise InvalidInput(f"l_cut must lie in [0, N/2], got {l_cut}")
    n, l = float(n_qubits), float(l_cut)
    return 4.0 / 9.0 * l * (l + 1) + n / (3.0 * (2 * l + 1)) + 4.0 * l * l / (9.0 * (n + 2))


def s_bound(n_qubits: int, l_cut: int, alpha: float, eps: float) -> float:
    """Chebyshev failure bound ``N^{2(alpha-1)} Q / eps^2``."""
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    if alpha <= 0.5:
        warnings.warn("alpha <= 1/2: the game is not in the regime the bound is meant for", stacklevel=2)
    return float(n_qubits) ** (2 * (alpha - 1)) * q_bound(n_qubits, l_cut) / eps**2


def ansatz_cut(n_qubits: int, beta: float) -> int:
    """``L = round(N^beta)``, clipped to the valid window ``[0, N/2]``."""
    if not 0 < beta < 0.5:
        raise InvalidInput("beta must lie in (0, 1/2)")
    return int(min(round(n_qubits**beta), n_qubits // 2))
