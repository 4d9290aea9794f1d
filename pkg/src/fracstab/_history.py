"""Backend selection for the solver's memory-term convolution.

The compiled extension is preferred; a vectorized numpy implementation is
the fallback.  Set FRACSTAB_PURE_PYTHON=1 to force the fallback (used by
the backend-equivalence tests and the benchmark).
"""

import os

import numpy as np


def _weighted_history_numpy(F, W, n, j0, out):
    """out[i] = sum_{j=j0..n} W[n-j, i] * F[j, i]."""
    np.einsum("ji,ji->i", F[j0 : n + 1], W[n - j0 :: -1], out=out)
    return out


if os.environ.get("FRACSTAB_PURE_PYTHON") == "1":
    weighted_history = _weighted_history_numpy
    BACKEND = "numpy"
else:
    try:
        from ._history_ext import weighted_history  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        weighted_history = _weighted_history_numpy
        BACKEND = "numpy"
