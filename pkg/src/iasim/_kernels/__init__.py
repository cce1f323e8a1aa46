"""Backend selection for the subset-utility kernel.

The compiled extension is preferred when it imported cleanly; the pure-numpy
fallback is always available. Set IASIM_KERNEL=fallback or IASIM_KERNEL=native
to force a choice (forcing native raises if the extension is missing).
"""

from __future__ import annotations

import os

import numpy as np

from . import fallback as _fallback

try:
    from . import _zfkern as _native
except ImportError:  # extension not built on this interpreter
    _native = None

has_native = _native is not None

_forced = os.environ.get("IASIM_KERNEL", "").strip().lower()
if _forced == "fallback":
    _impl = _fallback
elif _forced == "native":
    if _native is None:
        raise ImportError(
            "IASIM_KERNEL=native requested but the compiled kernel is not available"
        )
    _impl = _native
elif _forced:
    raise ImportError(f"IASIM_KERNEL must be 'native' or 'fallback', got {_forced!r}")
else:
    _impl = _native if _native is not None else _fallback

backend_name: str = _impl.backend_name


def subset_utilities(
    gram: np.ndarray,
    gains: np.ndarray,
    weights: np.ndarray,
    subsets: np.ndarray,
    rate_cap: float,
    sinr_scale: float = 1.0,
    cross_power: float = 1.0,
    cond_limit: float = 1e8,
) -> np.ndarray:
    """Batched weighted sum rates for candidate subsets (see fallback module)."""
    subsets = np.asarray(subsets)
    if subsets.size == 0:
        n_rows = subsets.shape[0] if subsets.ndim == 2 else 0
        return np.full(n_rows, -np.inf)
    return _impl.subset_utilities(
        gram, gains, weights, subsets, rate_cap, sinr_scale, cross_power, cond_limit
    )


__all__ = ["subset_utilities", "backend_name", "has_native"]
