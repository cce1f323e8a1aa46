"""Receive-side processing and feedback generation.

Two receiver families are provided. The null-space decoder zero-forces the
dominant interferers outright; the MMSE decoder whitens against a structured
interference-plus-noise covariance. Both reduce the link to a reduced-space
equivalent channel whose eigen-directions are what the UE feeds back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    LTooLargeError,
    NoNullSpaceError,
    ZeroDirectionError,
)
from .precoding import MixingMatrix

_PHASE_TOL = 1e-12


def canonical_phase(vec: np.ndarray, tol: float = _PHASE_TOL) -> np.ndarray:
    """Rotate a vector so its first non-negligible entry is real positive."""
    v = np.asarray(vec)
    for entry in v.flat:
        if abs(entry) > tol:
            return v * (entry.conjugate() / abs(entry))
    return v


def null_space_basis(columns: np.ndarray, rank_tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the left null space of a stacked column matrix."""
    a = np.atleast_2d(np.asarray(columns, dtype=complex))
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    cutoff = rank_tol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return u[:, rank:]


def zf_null_decoder(
    h_int_effs: list[np.ndarray] | np.ndarray,
    h_direct_eff: np.ndarray | None = None,
    rank_tol: float = 1e-9,
) -> np.ndarray:
    """Unit decoders orthogonal to the given interferer effective channels.

    h_int_effs holds one (n_dims, n_cols) effective channel H P per nulled
    interferer. The returned columns span the common left null space. When
    the UE's own effective channel is supplied, the basis is rotated so the
    columns capture the desired channel best-first (the leading column is
    the strongest interference-free receive direction).
    """
    if isinstance(h_int_effs, np.ndarray) and h_int_effs.ndim == 2:
        h_int_effs = [h_int_effs]
    if len(h_int_effs) == 0:
        if h_direct_eff is None:
            raise DimensionMismatchError(
                "need either interferer channels or a direct channel to size the decoder"
            )
        basis = np.eye(h_direct_eff.shape[0], dtype=complex)
    else:
        stacked = np.concatenate([np.asarray(h) for h in h_int_effs], axis=1)
        basis = null_space_basis(stacked, rank_tol=rank_tol)
    if basis.shape[1] == 0:
        raise NoNullSpaceError(
            f"interference occupies all {stacked.shape[0]} receive dimensions"
        )
    if h_direct_eff is not None:
        m = basis.conj().T @ h_direct_eff
        rot, _, _ = np.linalg.svd(m, full_matrices=True)
        basis = basis @ rot
    out = np.empty_like(basis)
    for j in range(basis.shape[1]):
        out[:, j] = canonical_phase(basis[:, j])
    return out


def in_covariance(
    h_strong: np.ndarray,
    mixing: MixingMatrix,
    tx_power: float,
    n_streams: int,
    noise_power: float,
    inr_rem: float = 0.0,
    interferer_effective: np.ndarray | None = None,
) -> np.ndarray:
    """Interference-plus-noise covariance seen by one UE.

    Models the strongest interferer in full spatial color and lumps everything
    else into a white residual term. By default the interferer's beamformer
    set is approximated as isotropic over the mixing-matrix columns; passing
    its actual effective precoder columns replaces that approximation.
    """
    n_dims = mixing.n_dims
    phi = (noise_power + inr_rem) * np.eye(n_dims, dtype=complex)
    if h_strong is not None:
        basis = mixing.p if interferer_effective is None else interferer_effective
        hb = h_strong @ basis
        phi = phi + (tx_power / n_streams) * (hb @ hb.conj().T)
    return 0.5 * (phi + phi.conj().T)


def equivalent_channel(
    phi: np.ndarray, h_direct: np.ndarray, mixing: MixingMatrix
) -> np.ndarray:
    """Whitened reduced-space channel Gram matrix P^H H^H Phi^{-1} H P."""
    hp = h_direct @ mixing.p
    g = hp.conj().T @ np.linalg.solve(phi, hp)
    return 0.5 * (g + g.conj().T)


def init_vector(g: np.ndarray) -> np.ndarray:
    """Dominant eigenvector of a reduced-space channel Gram matrix."""
    w, v = np.linalg.eigh(np.asarray(g))
    return canonical_phase(v[:, -1])


def mmse_decoder(
    phi: np.ndarray,
    h_direct: np.ndarray,
    mixing: MixingMatrix,
    v0: np.ndarray,
    tol: float = 1e-30,
) -> np.ndarray:
    """Unit-norm whitened matched filter for one transmit direction."""
    u = np.linalg.solve(phi, h_direct @ (mixing.p @ v0))
    norm = np.linalg.norm(u)
    if norm <= tol:
        raise ZeroDirectionError("decoder direction has vanishing norm")
    return u / norm


def final_decoder(
    phi: np.ndarray, h_direct: np.ndarray, mixing: MixingMatrix, c_cols: np.ndarray
) -> np.ndarray:
    """MMSE decoders for each scheduled direction, one unit column per stream."""
    c = np.atleast_2d(np.asarray(c_cols))
    if c.shape[0] != mixing.n_cols:
        c = c.T
    u = np.linalg.solve(phi, h_direct @ (mixing.p @ c))
    norms = np.linalg.norm(u, axis=0, keepdims=True)
    if np.any(norms <= 1e-30):
        raise ZeroDirectionError("a scheduled direction produced a zero decoder")
    return u / norms


def eigen_directions(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-pairs of a Hermitian Gram matrix, strongest first.

    Gains are clipped at zero (the matrix is PSD up to round-off) and each
    direction carries the canonical phase so repeated runs agree bitwise.
    """
    w, v = np.linalg.eigh(np.asarray(g))
    w = np.maximum(w[::-1], 0.0)
    v = v[:, ::-1]
    dirs = np.empty_like(v)
    for j in range(v.shape[1]):
        dirs[:, j] = canonical_phase(v[:, j])
    return w, dirs


@dataclass(frozen=True)
class FeedbackEntry:
    """One fed-back transmit direction with its reported power gain."""

    ue: int                # global UE index
    direction: np.ndarray  # (n_cols,) unit vector in the reduced space
    gain: float            # eigenvalue of the whitened channel Gram matrix
    rank: int              # 0 for the UE's strongest direction


def build_feedback(ue: int, g: np.ndarray, n_best: int) -> list[FeedbackEntry]:
    """Top eigen-directions of one UE's equivalent channel, strongest first."""
    g = np.asarray(g)
    if n_best > g.shape[0]:
        raise LTooLargeError(
            f"requested {n_best} directions from a {g.shape[0]}-dimensional channel"
        )
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatchError("equivalent channel must be square")
    gains, dirs = eigen_directions(g)
    return [
        FeedbackEntry(ue=ue, direction=dirs[:, r].copy(), gain=float(gains[r]), rank=r)
        for r in range(n_best)
    ]
