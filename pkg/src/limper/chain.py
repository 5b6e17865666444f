"""Backend selection for the transfer-chain kernels.

The compiled kernel is preferred when importable; set LIMPER_PURE=1 to
force the pure backend.  Both backends implement the same renormalization
policy and produce bit-identical entries and exponents.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import _chain_py
from .scaled import BatchScaled, ScaledMatrix2

_LN2 = math.log(2.0)

if os.environ.get("LIMPER_PURE", "") not in ("", "0"):
    _impl = _chain_py
else:
    try:
        from . import _chain_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _chain_py

BACKEND: str = _impl.BACKEND


def chain_transfer(E: float, values) -> ScaledMatrix2:
    """Ordered product of one-step matrices over a potential-value run."""
    vals = np.ascontiguousarray(values, dtype=np.float64)
    a, b, c, d, ex = _impl.chain_scalar(float(E), vals, 1.0, 0.0, 0.0, 1.0, 0)
    return ScaledMatrix2(float(a), float(b), float(c), float(d), ex * _LN2)


def chain_transfer_batch(E, values) -> BatchScaled:
    """Same chain evaluated for a whole energy grid at once."""
    Ea = np.ascontiguousarray(E, dtype=np.float64)
    vals = np.ascontiguousarray(values, dtype=np.float64)
    n = Ea.shape[0]
    a = np.ones(n)
    b = np.zeros(n)
    c = np.zeros(n)
    d = np.ones(n)
    ex = np.zeros(n, dtype=np.int64)
    _impl.chain_batch(Ea, vals, a, b, c, d, ex)
    return BatchScaled(a, b, c, d, ex * _LN2)
