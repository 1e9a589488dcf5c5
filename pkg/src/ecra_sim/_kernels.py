"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

Set ``ECRA_SIM_NO_NUMBA=1`` to force the numpy path (same results, slower).
``benchmarks/bench_kernels.py`` compares the two.
"""
from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("ECRA_SIM_NO_NUMBA", "0") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:   # pragma: no cover
        USE_NUMBA = False


def _corr_scan_np(y: np.ndarray, s: np.ndarray, osf: int) -> np.ndarray:
    """|sum_k conj(y[p + k*osf]) * s_k| for every start position p."""
    n_sw = len(s)
    n_pos = len(y) - (n_sw - 1) * osf
    acc = np.zeros(n_pos, dtype=np.complex128)
    for k in range(n_sw):
        acc += s[k] * np.conj(y[k * osf:k * osf + n_pos])
    return np.abs(acc)


def _tap_mean_np(occ: np.ndarray, n_sw: int, osf: int) -> np.ndarray:
    """Mean of occ over the n_sw symbol-spaced taps at every position."""
    n_pos = len(occ) - (n_sw - 1) * osf
    acc = np.zeros(n_pos, dtype=np.float64)
    for k in range(n_sw):
        acc += occ[k * osf:k * osf + n_pos]
    return acc / n_sw


if USE_NUMBA:

    @njit(cache=True)
    def _corr_scan_nb(y, s, osf):
        n_sw = len(s)
        n_pos = len(y) - (n_sw - 1) * osf
        out = np.empty(n_pos, dtype=np.float64)
        for p in range(n_pos):
            acc = 0.0 + 0.0j
            for k in range(n_sw):
                acc += s[k] * np.conj(y[p + k * osf])
            out[p] = abs(acc)
        return out

    @njit(cache=True)
    def _tap_mean_nb(occ, n_sw, osf):
        n_pos = len(occ) - (n_sw - 1) * osf
        out = np.empty(n_pos, dtype=np.float64)
        for p in range(n_pos):
            acc = 0.0
            for k in range(n_sw):
                acc += occ[p + k * osf]
            out[p] = acc / n_sw
        return out

    def corr_scan(y, s, osf):
        return _corr_scan_nb(np.ascontiguousarray(y), np.ascontiguousarray(s), osf)

    def tap_mean(occ, n_sw, osf):
        return _tap_mean_nb(np.ascontiguousarray(occ, dtype=np.float64), n_sw, osf)

else:
    corr_scan = _corr_scan_np

    def tap_mean(occ, n_sw, osf):
        return _tap_mean_np(np.asarray(occ, dtype=np.float64), n_sw, osf)
