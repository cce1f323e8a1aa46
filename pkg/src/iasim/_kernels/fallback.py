"""Pure-numpy batched evaluation of scheduler subset utilities.

Given the Gram matrix of a candidate-direction pool, the weighted sum rate of
any zero-forced subset follows from the subset's own Gram block: stream k's
direction overlaps its normalized beam with squared gain 1 / (A^{-1})_kk,
where A is the block. This avoids forming any beamformer while scanning
subsets; only the winning subset is ever re-expanded into precoders.
"""

from __future__ import annotations

import numpy as np

backend_name = "fallback"


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
    """Weighted sum rate of each row of `subsets`; -inf when ill-conditioned.

    gram is the (n, n) Hermitian pool Gram matrix of unit directions, gains
    and weights are per-entry (n,) vectors, and subsets is (B, s) integer
    indices into the pool (all rows the same size).
    """
    gram = np.asarray(gram)
    gains = np.asarray(gains, dtype=float)
    weights = np.asarray(weights, dtype=float)
    subsets = np.asarray(subsets)
    if subsets.ndim != 2:
        raise ValueError("subsets must be a 2-D index array")
    n_rows, s = subsets.shape
    out = np.full(n_rows, -np.inf)
    if n_rows == 0 or s == 0:
        return out

    sub = gram[subsets[:, :, None], subsets[:, None, :]]
    eig = np.linalg.eigvalsh(sub)
    good = (eig[:, 0] > 0.0) & (eig[:, -1] <= cond_limit * eig[:, 0])
    if not np.any(good):
        return out

    inv = np.linalg.inv(sub[good])
    diag = inv[:, np.arange(s), np.arange(s)].real
    ok = np.all(diag > 0.0, axis=1)

    cross = (1.0 / np.where(diag > 0.0, diag, 1.0)) ** cross_power
    lam = gains[subsets[good]]
    om = weights[subsets[good]]
    rate = np.minimum(rate_cap, np.log2(1.0 + sinr_scale * lam * cross))
    out[good] = np.where(ok, (om * rate).sum(axis=1), -np.inf)
    return out
