"""Backend selection for the hot kernels.

The conditional-amplitude grid (a signed log-sum-exp over beam-splitter
branches, evaluated on every output cell) dominates the runtime of the
operational pipeline.  Two interchangeable implementations are provided:

* a numba ``@njit`` kernel (default when numba imports cleanly), and
* a pure-numpy fallback.

Selection is controlled by the ``MDF_BACKEND`` environment variable:
``auto`` (default), ``numba`` or ``numpy``.  Per-cell accumulation order is
fixed, so results are deterministic and independent of thread count for a
given backend.  ``benchmarks/bench_backends.py`` compares the two.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_ENV_FLAG = "MDF_BACKEND"


def _resolve_backend() -> str:
    choice = os.environ.get(_ENV_FLAG, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"{_ENV_FLAG} must be auto, numba or numpy (got {choice!r})")
    if choice == "numba" and numba is None:
        raise ImportError(f"{_ENV_FLAG}=numba but numba is not importable")
    if choice == "auto":
        return "numba" if numba is not None else "numpy"
    return choice


_ACTIVE = _resolve_backend()


def active_backend() -> str:
    return _ACTIVE


def set_backend(name: str) -> None:
    """Override the kernel backend at runtime (mainly for tests/benchmarks)."""
    global _ACTIVE
    if name not in ("numba", "numpy"):
        raise ValueError("backend must be numba or numpy")
    if name == "numba" and numba is None:
        raise ImportError("numba backend requested but numba is not importable")
    _ACTIVE = name


def _grid_block_numpy(pad_log, pad_sign, row_log, col_log, pref_log, pref_sign,
                      k0, k1, m1):
    """Two-pass (max, then rescaled sum) signed log-sum-exp over branches."""
    nv = pref_log.shape[0]
    nk = k1 - k0
    big = np.full((nk, m1), -np.inf)
    for v in range(nv):
        if pref_sign[v] == 0:
            continue
        w = nv - 1 - v
        sl = pad_sign[k0 + v:k1 + v, w:w + m1]
        t = pad_log[k0 + v:k1 + v, w:w + m1] + row_log[v, k0:k1, None] \
            + col_log[v, None, :] + pref_log[v]
        np.maximum(big, np.where(sl != 0, t, -np.inf), out=big)
    finite = np.isfinite(big)
    base = np.where(finite, big, 0.0)
    acc = np.zeros((nk, m1))
    for v in range(nv):
        if pref_sign[v] == 0:
            continue
        w = nv - 1 - v
        sl = pad_sign[k0 + v:k1 + v, w:w + m1]
        t = pad_log[k0 + v:k1 + v, w:w + m1] + row_log[v, k0:k1, None] \
            + col_log[v, None, :] + pref_log[v]
        term = np.where(sl != 0, t, -np.inf) - base
        acc += np.where(sl != 0, np.exp(term) * (sl * pref_sign[v]), 0.0)
    out_sign = np.sign(acc).astype(np.int8)
    out_sign[~finite] = 0
    with np.errstate(divide="ignore"):
        out_log = np.where(out_sign != 0, base + np.log(np.abs(np.where(acc == 0, 1.0, acc))),
                           -np.inf)
    return out_log, out_sign


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _grid_block_numba(pad_log, pad_sign, row_log, col_log, pref_log,
                          pref_sign, k0, k1, m1):  # pragma: no cover - jitted
        nv = pref_log.shape[0]
        nk = k1 - k0
        out_log = np.full((nk, m1), -np.inf)
        out_sign = np.zeros((nk, m1), dtype=np.int8)
        for ik in range(nk):
            k = k0 + ik
            for l in range(m1):
                m = -np.inf
                s = 0.0
                for v in range(nv):
                    pv = pref_sign[v]
                    if pv == 0:
                        continue
                    w = nv - 1 - v
                    sg = pad_sign[k + v, l + w]
                    if sg == 0:
                        continue
                    t = pad_log[k + v, l + w] + row_log[v, k] + col_log[v, l] + pref_log[v]
                    if t == -np.inf:
                        continue
                    sv = float(sg * pv)
                    if t <= m:
                        s += sv * np.exp(t - m)
                    else:
                        s = s * np.exp(m - t) + sv
                        m = t
                if m > -np.inf and s != 0.0:
                    out_log[ik, l] = m + np.log(np.abs(s))
                    out_sign[ik, l] = 1 if s > 0 else -1
        return out_log, out_sign

else:  # pragma: no cover
    _grid_block_numba = None


def grid_block(pad_log, pad_sign, row_log, col_log, pref_log, pref_sign,
               k0, k1, m1, backend=None):
    """Signed amplitudes on output rows [k0, k1) of the conditional grid.

    ``pad_log[k+v, l+w]`` holds the input log-magnitude gathered by branch
    ``v`` (``w = nv-1-v``); rows/cols/pref carry the per-branch factors.
    Returns ``(log|amp|, sign)`` arrays of shape ``(k1-k0, m1)``.
    """
    name = backend or _ACTIVE
    if name == "numba":
        return _grid_block_numba(pad_log, pad_sign, row_log, col_log,
                                 pref_log, pref_sign, k0, k1, m1)
    return _grid_block_numpy(pad_log, pad_sign, row_log, col_log,
                             pref_log, pref_sign, k0, k1, m1)
