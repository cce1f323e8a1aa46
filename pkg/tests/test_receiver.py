"""Receive filtering, interference covariance, and eigen feedback."""

import numpy as np
import pytest

from iasim import (
    build_feedback,
    eigen_directions,
    equivalent_channel,
    in_covariance,
    make_mixing_matrix,
    mmse_decoder,
    zf_null_decoder,
)
from iasim.exceptions import LTooLargeError, NoNullSpaceError
from iasim.receiver import canonical_phase, final_decoder, null_space_basis


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def test_null_space_basis_spans_the_complement():
    rng = np.random.default_rng(21)
    cols = crandn(rng, 5, 2)
    basis = null_space_basis(cols)
    assert basis.shape == (5, 3)
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(3), atol=1e-12)
    assert np.linalg.norm(basis.conj().T @ cols) <= 1e-12


def test_null_decoder_is_orthogonal_to_interference():
    rng = np.random.default_rng(22)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    h_int = crandn(rng, 4, 4)
    h_dir = crandn(rng, 4, 4)
    u = zf_null_decoder([h_int @ mix.p], h_direct_eff=h_dir @ mix.p)
    assert u.shape == (4, 1)
    assert np.linalg.norm(u[:, 0].conj() @ (h_int @ mix.p)) <= 1e-10


def test_null_decoder_orders_columns_by_desired_gain():
    rng = np.random.default_rng(23)
    mix = make_mixing_matrix(6, 2, kappa=0.0)
    # Rank-2 interferer in 6 receive dimensions leaves a 2D-or-wider null space.
    h_int = crandn(rng, 6, 2) @ crandn(rng, 2, 6)
    h_dir = crandn(rng, 6, 6)
    basis = zf_null_decoder([h_int @ mix.p], h_direct_eff=h_dir @ mix.p)
    assert basis.shape[1] >= 2
    gains = np.linalg.norm(basis.conj().T @ (h_dir @ mix.p), axis=1)
    assert np.all(np.diff(gains) <= 1e-9)


def test_null_decoder_raises_when_nothing_is_free():
    rng = np.random.default_rng(24)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    ints = [crandn(rng, 4, 4) @ mix.p, crandn(rng, 4, 4) @ mix.p]
    with pytest.raises(NoNullSpaceError):
        zf_null_decoder(ints)


def test_in_covariance_matches_its_formula():
    rng = np.random.default_rng(25)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    h = crandn(rng, 4, 4)
    phi = in_covariance(h, mix, tx_power=2.0, n_streams=3,
                        noise_power=1e-3, inr_rem=0.5)
    hb = h @ mix.p
    want = (1e-3 + 0.5) * np.eye(4) + (2.0 / 3.0) * hb @ hb.conj().T
    np.testing.assert_allclose(phi, want, atol=1e-12)
    np.testing.assert_allclose(phi, phi.conj().T, atol=1e-14)


def test_in_covariance_accepts_actual_interferer_beams():
    rng = np.random.default_rng(26)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    h = crandn(rng, 4, 4)
    beams = crandn(rng, 4, 2)
    phi = in_covariance(h, mix, 1.0, 3, 1e-6, interferer_effective=beams)
    hb = h @ beams
    want = 1e-6 * np.eye(4) + (1.0 / 3.0) * hb @ hb.conj().T
    np.testing.assert_allclose(phi, want, atol=1e-12)


def test_in_covariance_without_interferer_is_white():
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    phi = in_covariance(None, mix, 1.0, 3, 1e-6, inr_rem=0.25)
    np.testing.assert_allclose(phi, (1e-6 + 0.25) * np.eye(4), atol=1e-15)


def test_equivalent_channel_matches_the_whitened_gram():
    rng = np.random.default_rng(27)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    h = crandn(rng, 4, 4)
    phi = in_covariance(crandn(rng, 4, 4), mix, 1.0, 3, 1e-6)
    g = equivalent_channel(phi, h, mix)
    hp = h @ mix.p
    want = hp.conj().T @ np.linalg.inv(phi) @ hp
    np.testing.assert_allclose(g, want, atol=1e-9)
    w = np.linalg.eigvalsh(g)
    assert w.min() >= -1e-10


def test_mmse_decoder_is_the_whitened_matched_filter():
    rng = np.random.default_rng(28)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    h = crandn(rng, 4, 4)
    phi = in_covariance(crandn(rng, 4, 4), mix, 1.0, 3, 1e-6)
    v0 = crandn(rng, 3)
    v0 /= np.linalg.norm(v0)
    u = mmse_decoder(phi, h, mix, v0)
    assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)
    ref = np.linalg.solve(phi, h @ (mix.p @ v0))
    ref /= np.linalg.norm(ref)
    # same direction up to phase
    assert abs(np.vdot(ref, u)) == pytest.approx(1.0, abs=1e-10)


def test_final_decoder_one_unit_column_per_stream():
    rng = np.random.default_rng(29)
    mix = make_mixing_matrix(4, 1, kappa=0.0)
    h = crandn(rng, 4, 4)
    phi = in_covariance(crandn(rng, 4, 4), mix, 1.0, 3, 1e-6)
    c = crandn(rng, 3, 2)
    u = final_decoder(phi, h, mix, c)
    assert u.shape == (4, 2)
    np.testing.assert_allclose(np.linalg.norm(u, axis=0), 1.0, atol=1e-12)


def test_eigen_directions_descending_and_lossless():
    rng = np.random.default_rng(30)
    a = crandn(rng, 4, 4)
    g = a @ a.conj().T
    gains, dirs = eigen_directions(g)
    assert np.all(np.diff(gains) <= 1e-12)
    np.testing.assert_allclose((dirs * gains) @ dirs.conj().T, g, atol=1e-10)
    # canonical phase: leading entries real and non-negative
    for j in range(4):
        lead = dirs[np.flatnonzero(np.abs(dirs[:, j]) > 1e-12)[0], j]
        assert abs(lead.imag) <= 1e-12 and lead.real > 0


def test_canonical_phase_is_idempotent():
    rng = np.random.default_rng(31)
    v = crandn(rng, 4)
    once = canonical_phase(v)
    np.testing.assert_allclose(canonical_phase(once), once, atol=1e-15)


def test_build_feedback_ranks_and_limits():
    rng = np.random.default_rng(32)
    a = crandn(rng, 3, 3)
    g = a @ a.conj().T
    entries = build_feedback(7, g, 2)
    assert [e.rank for e in entries] == [0, 1]
    assert all(e.ue == 7 for e in entries)
    assert entries[0].gain >= entries[1].gain
    with pytest.raises(LTooLargeError):
        build_feedback(7, g, 4)
