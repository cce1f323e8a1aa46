"""Transmit-side processing: common mixing matrices and zero-forcing beamforming.

The mixing matrix multiplies every BS's transmit vector. With kappa = 0 it has
M_K - N_f orthonormal columns, so N_f signal dimensions are guaranteed free of
interference at every receiver regardless of scheduling; kappa in (0, 1]
trades that protection back for transmit dimensions by keeping the trailing
columns at reduced weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (
    DimensionMismatchError,
    HadamardUnavailableError,
    IllConditionedError,
    InvalidKappaError,
)


@dataclass(frozen=True)
class MixingMatrix:
    """A common precoding matrix shared by all BSs."""

    p: np.ndarray    # (n_dims, n_cols) complex
    kappa: float     # trailing-column weight; 0 means the columns are dropped
    family: str      # "fourier" or "hadamard"
    n_freed: int     # dimensions freed (or de-weighted) at every receiver

    @property
    def n_dims(self) -> int:
        return self.p.shape[0]

    @property
    def n_cols(self) -> int:
        return self.p.shape[1]

    @property
    def orthonormal_cols(self) -> bool:
        """True when P^H P = I, i.e. kappa is exactly 0 or 1."""
        return self.kappa in (0.0, 1.0)


def unitary_base(n_dims: int, family: str) -> np.ndarray:
    if family == "fourier":
        return scipy.linalg.dft(n_dims, scale="sqrtn")
    if family == "hadamard":
        if n_dims & (n_dims - 1) or n_dims < 1:
            raise HadamardUnavailableError(
                f"hadamard mixing needs a power-of-two dimension, got {n_dims}"
            )
        return scipy.linalg.hadamard(n_dims).astype(complex) / np.sqrt(n_dims)
    raise InvalidKappaError(f"unknown mixing family {family!r}")


def make_mixing_matrix(
    n_dims: int, n_freed: int, kappa: float = 0.0, family: str = "fourier"
) -> MixingMatrix:
    """Build the shared mixing matrix.

    kappa = 0 truncates the trailing n_freed columns of a unitary base;
    kappa > 0 keeps them scaled by kappa (kappa = 1 recovers the full
    unitary matrix, i.e. no alignment).
    """
    if not 0.0 <= kappa <= 1.0:
        raise InvalidKappaError(f"kappa must be in [0, 1], got {kappa}")
    if not 0 <= n_freed < n_dims:
        raise DimensionMismatchError(
            f"n_freed must satisfy 0 <= n_freed < n_dims, got {n_freed} of {n_dims}"
        )
    base = unitary_base(n_dims, family)
    if kappa == 0.0:
        p = base[:, : n_dims - n_freed].copy()
    else:
        weights = np.ones(n_dims)
        weights[n_dims - n_freed:] = kappa
        p = base * weights[None, :]
    return MixingMatrix(p=p, kappa=kappa, family=family, n_freed=n_freed)


@dataclass(frozen=True)
class PrecoderSet:
    """Zero-forcing beamformers for one scheduled stream set."""

    raw: np.ndarray        # (n_cols, s): columns v_k in the reduced space
    effective: np.ndarray  # (n_dims, s): unit-norm columns of P @ raw

    @property
    def n_streams(self) -> int:
        return self.raw.shape[1]

    @property
    def raw_unit(self) -> np.ndarray:
        """Raw columns normalized in the reduced space."""
        return self.raw / np.linalg.norm(self.raw, axis=0, keepdims=True)


def zf_beamform(
    c_rows: np.ndarray, mixing: MixingMatrix, cond_limit: float = 1e8
) -> PrecoderSet:
    """Pseudo-inverse beamforming against the stacked fed-back directions.

    c_rows is (s, n_cols) with unit-norm rows c_k^H. The raw beamformer is
    C^H (C C^H)^{-1}, so stream k sees zero gain along every other scheduled
    direction. Effective columns are the mixed beams normalized to unit power.
    """
    c_rows = np.atleast_2d(np.asarray(c_rows))
    s, n_cols = c_rows.shape
    if n_cols != mixing.n_cols:
        raise DimensionMismatchError(
            f"directions have {n_cols} entries, mixing matrix has {mixing.n_cols} columns"
        )
    if s > n_cols:
        raise DimensionMismatchError(f"cannot zero-force {s} streams in {n_cols} dimensions")

    gram = c_rows @ c_rows.conj().T
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 0.0 or w[-1] / w[0] > cond_limit:
        raise IllConditionedError(
            f"direction stack condition number exceeds {cond_limit:g}"
        )
    raw = c_rows.conj().T @ np.linalg.inv(gram)
    eff = mixing.p @ raw
    eff = eff / np.linalg.norm(eff, axis=0, keepdims=True)
    return PrecoderSet(raw=raw, effective=eff)


def precoder_cross_gain(c: np.ndarray, v_raw: np.ndarray, squared: bool = True) -> float:
    """Gain of a fed-back direction along its own normalized raw beam.

    This is the factor multiplying the direction's reported power gain when
    other streams are zero-forced: 1 for a lone stream, less as the scheduled
    directions crowd each other.
    """
    v = np.asarray(v_raw)
    overlap = abs(np.vdot(c, v)) / np.linalg.norm(v)
    return float(overlap**2) if squared else float(overlap)
