"""Hot inner loops, each with a numba and a pure-numpy implementation.

The numba versions are used unless ``UNSHARP_CLT_DISABLE_NUMBA`` is set to a
truthy value or numba is not importable.  Both paths consume the same
pre-drawn uniforms, so they produce the same outcomes up to floating-point
summation order.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("UNSHARP_CLT_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = numba is not None and _FLAG in ("", "0", "false", "no")


def _support(psi):
    nz = np.nonzero(psi)[0]
    return (int(nz[0]), int(nz[-1])) if nz.size else (0, len(psi) - 1)


# --------------------------------------------------------------------------
# symmetric-subspace sequential measurement
# --------------------------------------------------------------------------

def symmetric_trial_numpy(coeffs, kraus, effects, uniforms):
    """Measure the qubits of a symmetric state one by one.

    Returns ``(outcomes, max_dev)`` where ``max_dev`` is the worst
    probability-conservation residual seen over all steps.
    """
    n = coeffs.shape[0] - 1
    psi = coeffs.astype(np.complex128).copy()
    outcomes = np.empty(n, dtype=np.int64)
    n_out = kraus.shape[0]
    lo, hi = _support(psi)
    max_dev = 0.0
    for step in range(n):
        nn = n - step
        k = np.arange(lo, hi + 1)
        seg = psi[lo:hi + 1]
        w = np.abs(seg) ** 2
        r11 = np.sum(w * k) / nn
        r00 = np.sum(w * (nn - k)) / nn
        # <0|rho|1> = sum_j conj(upper_j) lower_j, upper_j = sqrt((j+1)/nn) psi_{j+1}
        j = np.arange(lo, hi)
        r01 = np.sum(np.conj(psi[lo + 1:hi + 1]) * psi[lo:hi] * np.sqrt((j + 1) * (nn - j))) / nn
        p = (effects[:, 0, 0] * r00 + effects[:, 0, 1] * np.conj(r01)
             + effects[:, 1, 0] * r01 + effects[:, 1, 1] * r11).real
        p = np.maximum(p, 0.0)
        max_dev = max(max_dev, abs(p.sum() - 1.0))
        cdf = np.cumsum(p)
        i = int(np.searchsorted(cdf, uniforms[2 * step] * cdf[-1], side="right"))
        if i >= n_out:
            i = n_out - 1
        while p[i] <= 0.0:
            i -= 1
        outcomes[step] = i

        a, b = max(lo - 1, 0), min(hi, nn - 1)
        idx = np.arange(a, b + 1)
        nxt = np.zeros(idx.size, dtype=np.complex128)
        valid = idx + 1 <= hi
        nxt[valid] = psi[idx[valid] + 1]
        cur = psi[a:b + 1]
        upper = np.sqrt((idx + 1) / nn) * nxt
        lower = np.sqrt((nn - idx) / nn) * cur
        kr = kraus[i]
        u = kr[1, 1] * upper + kr[1, 0] * lower
        v = kr[0, 1] * upper + kr[0, 0] * lower
        nu = np.vdot(u, u).real
        nv = np.vdot(v, v).real
        max_dev = max(max_dev, abs(nu + nv - p[i]))
        if uniforms[2 * step + 1] * (nu + nv) < nu:
            new, norm = u, nu
        else:
            new, norm = v, nv
        psi[:] = 0.0
        psi[a:b + 1] = new / np.sqrt(norm)
        nz = np.nonzero(psi[a:b + 1])[0]
        lo, hi = (a + int(nz[0]), a + int(nz[-1])) if nz.size else (a, b)
    return outcomes, max_dev


def _symmetric_trial_loops(coeffs, kraus, effects, uniforms):
    n = coeffs.shape[0] - 1
    psi = coeffs.copy()
    outcomes = np.empty(n, dtype=np.int64)
    n_out = kraus.shape[0]
    p = np.empty(n_out)
    sq = np.sqrt(np.arange(n + 2).astype(np.float64))
    lo = 0
    while lo < n and psi[lo] == 0:
        lo += 1
    hi = n
    while hi > lo and psi[hi] == 0:
        hi -= 1
    max_dev = 0.0
    for step in range(n):
        nn = n - step
        inv_nn = 1.0 / nn
        inv_sq_nn = 1.0 / sq[nn]
        r11 = 0.0
        r00 = 0.0
        r01 = 0j
        for k in range(lo, hi + 1):
            w = psi[k].real ** 2 + psi[k].imag ** 2
            r11 += w * k
            r00 += w * (nn - k)
            if k < hi:
                r01 += np.conj(psi[k + 1]) * psi[k] * (sq[k + 1] * sq[nn - k])
        r11 *= inv_nn
        r00 *= inv_nn
        r01 *= inv_nn
        total = 0.0
        for i in range(n_out):
            val = (effects[i, 0, 0] * r00 + effects[i, 0, 1] * np.conj(r01)
                   + effects[i, 1, 0] * r01 + effects[i, 1, 1] * r11).real
            p[i] = val if val > 0.0 else 0.0
            total += p[i]
        dev = abs(total - 1.0)
        if dev > max_dev:
            max_dev = dev
        target = uniforms[2 * step] * total
        acc = 0.0
        pick = n_out - 1
        for i in range(n_out):
            acc += p[i]
            if target < acc:
                pick = i
                break
        while p[pick] <= 0.0:
            pick -= 1
        outcomes[step] = pick

        a = lo - 1 if lo > 0 else 0
        b = hi if hi < nn - 1 else nn - 1
        k11 = kraus[pick, 1, 1]
        k10 = kraus[pick, 1, 0]
        k01 = kraus[pick, 0, 1]
        k00 = kraus[pick, 0, 0]
        nu = 0.0
        nv = 0.0
        for j in range(a, b + 1):
            # psi is zero outside [lo, hi], and hi + 1 <= n stays in bounds
            up = (sq[j + 1] * inv_sq_nn) * psi[j + 1]
            low = (sq[nn - j] * inv_sq_nn) * psi[j]
            u = k11 * up + k10 * low
            v = k01 * up + k00 * low
            nu += u.real ** 2 + u.imag ** 2
            nv += v.real ** 2 + v.imag ** 2
        dev = abs(nu + nv - p[pick])
        if dev > max_dev:
            max_dev = dev
        if uniforms[2 * step + 1] * (nu + nv) < nu:
            c1, c0, scale = k11, k10, 1.0 / np.sqrt(nu)
        else:
            c1, c0, scale = k01, k00, 1.0 / np.sqrt(nv)
        old_hi = hi
        new_lo = -1
        new_hi = a
        # ascending j reads psi[j] and psi[j + 1] before psi[j + 1] is overwritten
        for j in range(a, b + 1):
            up = (sq[j + 1] * inv_sq_nn) * psi[j + 1]
            low = (sq[nn - j] * inv_sq_nn) * psi[j]
            val = (c1 * up + c0 * low) * scale
            psi[j] = val
            if val != 0:
                if new_lo < 0:
                    new_lo = j
                new_hi = j
        for j in range(b + 1, old_hi + 2):
            if j <= n:
                psi[j] = 0j
        if new_lo < 0:
            new_lo = a
            new_hi = b
        lo = new_lo
        hi = new_hi
    return outcomes, max_dev


# --------------------------------------------------------------------------
# independent categorical draws (product states)
# --------------------------------------------------------------------------

def categorical_numpy(probs, uniforms):
    """Row-wise inverse-CDF draws from an ``(n, k)`` probability table."""
    cdf = np.cumsum(probs, axis=1)
    out = np.sum(uniforms[:, None] * cdf[:, -1:] >= cdf, axis=1)
    return np.minimum(out, probs.shape[1] - 1).astype(np.int64)


def _categorical_loops(probs, uniforms):
    n, k = probs.shape
    out = np.empty(n, dtype=np.int64)
    for s in range(n):
        total = 0.0
        for i in range(k):
            total += probs[s, i]
        target = uniforms[s] * total
        acc = 0.0
        pick = k - 1
        for i in range(k):
            acc += probs[s, i]
            if target < acc:
                pick = i
                break
        out[s] = pick
    return out


if numba is not None:
    symmetric_trial_numba = numba.njit(cache=True, nogil=True, fastmath=True, error_model="numpy")(_symmetric_trial_loops)
    categorical_numba = numba.njit(cache=True, nogil=True)(_categorical_loops)
else:  # pragma: no cover
    symmetric_trial_numba = None
    categorical_numba = None

if USE_NUMBA:
    symmetric_trial = symmetric_trial_numba
    categorical = categorical_numba
else:
    symmetric_trial = symmetric_trial_numpy
    categorical = categorical_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
