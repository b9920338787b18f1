"""POVMs, the outcome-valued random variable they generate, and its moments."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidInput, Unsupported
from .operators import PSD_TOL, as_operator, is_density_matrix, is_psd, pauli, psd_sqrt


@dataclass(frozen=True, eq=False)
class Povm:
    """Effects ``E_i`` paired with real outcome values ``x_i``.

    Construction only checks shapes; call :func:`validate` for the
    positivity/completeness invariants.
    """

    effects: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        effects = np.asarray(self.effects, dtype=complex)
        values = np.asarray(self.values, dtype=float).ravel()
        effects = effects.copy()
        values = values.copy()
        if effects.ndim != 3 or effects.shape[1] != effects.shape[2]:
            raise InvalidInput(f"effects must have shape (k, d, d), got {effects.shape}")
        if effects.shape[0] != values.shape[0]:
            raise InvalidInput("number of effects and outcome values differ")
        if not (np.all(np.isfinite(effects)) and np.all(np.isfinite(values))):
            raise InvalidInput("POVM has non-finite entries")
        effects.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.effects.shape[0]

    @cached_property
    def kraus(self) -> np.ndarray:
        """Positive square roots ``sqrt(E_i)``, stacked like ``effects``."""
        return np.stack([psd_sqrt(e) for e in self.effects])

    @cached_property
    def integer_values(self) -> np.ndarray | None:
        """Outcome values as int64 when all are integers, else None."""
        v = self.values
        if np.all(v == np.round(v)) and np.all(np.abs(v) < 2**52):
            return v.astype(np.int64)
        return None


@dataclass(frozen=True)
class StateMoments:
    mean: float
    variance: float
    third_abs_central: float


@dataclass(frozen=True)
class UnsharpnessProfile:
    """Variance extremes of a qubit POVM over all input states.

    ``sigma_minus``/``sigma_plus`` are standard deviations.  ``third_moment_bound``
    is the range cap ``(max x - min x)**3``; ``third_moment_grid_max`` is the
    searched maximum of ``E|X - mu|^3``.
    """

    sigma_minus: float
    sigma_plus: float
    third_moment_bound: float
    third_moment_grid_max: float
    argmin_bloch: tuple[float, float, float]

    def __post_init__(self):
        if not (0.0 <= self.sigma_minus <= self.sigma_plus):
            raise InvalidInput("need 0 <= sigma_minus <= sigma_plus")
        if self.sigma_plus <= 0 or self.third_moment_bound <= 0:
            raise InvalidInput("sigma_plus and third_moment_bound must be positive")

    @property
    def min_variance(self) -> float:
        return self.sigma_minus**2

    @property
    def max_variance(self) -> float:
        return self.sigma_plus**2

    @property
    def strictly_unsharp(self) -> bool:
        return self.sigma_minus > 0.0


def validate(povm: Povm, tol: float = PSD_TOL) -> list[str]:
    """Return a list of violated invariants; empty means valid."""
    problems = []
    if povm.n_outcomes < 2:
        problems.append("POVM needs at least two outcomes")
    for i, e in enumerate(povm.effects):
        if not is_psd(e, tol):
            problems.append(f"effect {i} not PSD")
    dev = np.max(np.abs(povm.effects.sum(axis=0) - np.eye(povm.dim)))
    if dev > tol:
        problems.append(f"sum != identity (max deviation {dev:.3g})")
    if len(np.unique(povm.values)) != len(povm.values):
        problems.append("outcome values not pairwise distinct")
    return problems


def require_valid(povm: Povm, tol: float = PSD_TOL) -> Povm:
    # arrays are read-only, so the default-tolerance verdict is cached on the instance
    if tol == PSD_TOL:
        problems = povm.__dict__.get("_problems")
        if problems is None:
            problems = povm.__dict__["_problems"] = validate(povm, tol)
    else:
        problems = validate(povm, tol)
    if problems:
        raise InvalidInput("invalid POVM: " + "; ".join(problems))
    return povm


def expectation_operator(povm: Povm) -> np.ndarray:
    require_valid(povm)
    a = np.einsum("i,ijk->jk", povm.values, povm.effects)
    return 0.5 * (a + a.conj().T)


def second_moment_operator(povm: Povm) -> np.ndarray:
    require_valid(povm)
    b = np.einsum("i,ijk->jk", povm.values**2, povm.effects)
    return 0.5 * (b + b.conj().T)


def uncertainty_operator(povm: Povm) -> np.ndarray:
    """``sum_i x_i^2 E_i - Xhat^2``, the measurement-induced excess variance."""
    a = expectation_operator(povm)
    d = second_moment_operator(povm) - a @ a
    if not is_psd(d, PSD_TOL):
        raise AssertionError("uncertainty operator is not PSD")
    return d


def outcome_probabilities(povm: Povm, rho) -> np.ndarray:
    rho = as_operator(rho)
    if rho.shape[0] != povm.dim:
        raise InvalidInput(f"state dim {rho.shape[0]} != POVM dim {povm.dim}")
    return np.einsum("ijk,kj->i", povm.effects, rho).real


def moments(povm: Povm, rho) -> StateMoments:
    """Mean, variance and third absolute central moment of X on state ``rho``.

    The variance is evaluated two ways (operator identity and outcome
    probabilities) and the two must agree.
    """
    rho = as_operator(rho)
    if rho.shape[0] != povm.dim:
        raise InvalidInput(f"state dim {rho.shape[0]} != POVM dim {povm.dim}")
    if not is_density_matrix(rho):
        raise InvalidInput("rho is not a density matrix")
    xhat = expectation_operator(povm)
    dxhat = uncertainty_operator(povm)
    mean = np.trace(rho @ xhat).real
    var_op = np.trace(rho @ xhat @ xhat).real - mean**2 + np.trace(rho @ dxhat).real

    p = outcome_probabilities(povm, rho)
    x = povm.values
    mean_p = p @ x
    var_p = p @ x**2 - mean_p**2
    if abs(var_op - var_p) > 1e-10:
        raise AssertionError(f"variance mismatch: operator {var_op!r} vs probabilities {var_p!r}")
    third = p @ np.abs(x - mean) ** 3
    return StateMoments(float(mean), float(max(var_p, 0.0)), float(max(third, 0.0)))


def _bloch_coefficients(povm: Povm) -> tuple[np.ndarray, np.ndarray]:
    # p_i(r) = t_i + e_i . r  for rho = (I + r.sigma)/2
    t = np.einsum("ijj->i", povm.effects).real / 2
    e = np.stack([np.einsum("ijk,kj->i", povm.effects, pauli(a)).real / 2 for a in "xyz"], axis=1)
    return t, e


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (1 + 5**0.5) * k
    rho = np.sqrt(1 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _spherical(params: np.ndarray) -> np.ndarray:
    radius, theta, phi = params
    return radius * np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def _to_spherical(r: np.ndarray) -> np.ndarray:
    radius = float(np.linalg.norm(r))
    if radius == 0.0:
        return np.array([0.0, 0.0, 0.0])
    return np.array([radius, np.arccos(np.clip(r[2] / radius, -1, 1)), np.arctan2(r[1], r[0])])


def sigma_bounds_qubit(povm: Povm, grid_resolution: int = 4096) -> UnsharpnessProfile:
    """Certify variance extremes of a qubit POVM by grid search plus refinement.

    The variance is concave in ``rho`` (a concave function of the outcome
    probabilities, which are linear in ``rho``), so its minimum is attained on
    pure states and the sphere search is exhaustive up to refinement accuracy.
    The maximum and the third-moment maximum may sit inside the Bloch ball, so
    those are searched over nested shells.
    """
    require_valid(povm)
    if povm.dim != 2:
        raise Unsupported("sigma_bounds_qubit requires a qubit POVM")
    if grid_resolution < 4:
        raise InvalidInput("grid_resolution must be at least 4")
    t, e = _bloch_coefficients(povm)
    x = povm.values

    def probs(r):
        return np.clip(t + r @ e.T, 0.0, None)

    def variance(r):
        p = probs(r)
        return p @ x**2 - (p @ x) ** 2

    def third(r):
        p = probs(r)
        mu = np.asarray(p @ x)
        return np.sum(p * np.abs(x - mu[..., None]) ** 3, axis=-1)

    sphere = _fibonacci_sphere(grid_resolution)
    shells = np.concatenate([s * sphere for s in np.linspace(0.0, 1.0, 9)[1:]] + [np.zeros((1, 3))])
    bounds = [(0.0, 1.0), (0.0, np.pi), (-4 * np.pi, 4 * np.pi)]
    opts = {"xatol": 1e-9, "fatol": 1e-15, "maxiter": 4000}

    def refine(fun, grid, sign, pure, n_starts=4):
        vals = sign * fun(grid)
        best_r, best_v = None, np.inf
        for idx in np.argsort(vals)[:n_starts]:
            start = _to_spherical(grid[idx])
            if pure:
                res = minimize(lambda q: sign * fun(_spherical(np.r_[1.0, q])), start[1:],
                               method="Nelder-Mead", bounds=bounds[1:], options=opts)
                r = _spherical(np.r_[1.0, res.x])
            else:
                res = minimize(lambda q: sign * fun(_spherical(q)), start,
                               method="Nelder-Mead", bounds=bounds, options=opts)
                r = _spherical(res.x)
            for cand in (r, grid[idx]):
                v = sign * fun(cand)
                if v < best_v:
                    best_r, best_v = cand, v
        return best_r, sign * best_v

    r_min, v_min = refine(variance, sphere, 1.0, pure=True)
    _, v_max = refine(variance, shells, -1.0, pure=False)
    _, r3_max = refine(third, shells, -1.0, pure=False)
    return UnsharpnessProfile(
        sigma_minus=float(np.sqrt(max(v_min, 0.0))),
        sigma_plus=float(np.sqrt(max(v_max, 0.0))),
        third_moment_bound=float((x.max() - x.min()) ** 3),
        third_moment_grid_max=float(r3_max),
        argmin_bloch=tuple(float(c) for c in r_min),
    )


def mean_variance(variances) -> float:
    v = np.asarray(variances, dtype=float)
    if v.size == 0:
        raise InvalidInput("mean_variance needs at least one variance")
    return float(v.mean())


def average_mean(means) -> float:
    m = np.asarray(means, dtype=float)
    if m.size == 0:
        raise InvalidInput("average_mean needs at least one mean")
    return float(m.mean())


def lindeberg_ratio(variances) -> float:
    """``max_i sigma_i^2 / sum_j sigma_j^2``; tends to 0 for bounded, strictly positive variances."""
    v = np.asarray(variances, dtype=float)
    if v.size == 0:
        raise InvalidInput("lindeberg_ratio needs at least one variance")
    if np.any(v <= 0):
        raise InvalidInput("all variances must be strictly positive")
    return float(v.max() / v.sum())
