import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualpol.channel import (
    PolarizationModel,
    RngStream,
    _synthesize,
    corrupt_csit,
    draw_channel,
    draw_mismatched_channel,
    draw_single_pol_channel,
    mix_csit,
)
from dualpol.corrstats import GroupGeometry, one_ring_covariance, ula
from dualpol.errors import InvalidInputError


@pytest.fixture(scope="module")
def stats():
    return one_ring_covariance(GroupGeometry(0.2, math.pi / 8), ula(8, 0.5))


def test_chi_zero_vertical_user_has_empty_horizontal_block(stats):
    entry = draw_channel(stats, PolarizationModel(0.0), 6, RngStream(1, 0))
    half = stats.dim
    assert np.all(entry.H[half:, :3] == 0.0)   # vertical users, lower block
    assert np.all(entry.H[:half, 3:] == 0.0)   # horizontal users, upper block


def test_reconstruction_invariant(stats):
    entry = draw_channel(stats, PolarizationModel(0.37), 6, RngStream(5, 2))
    rebuilt = _synthesize(stats, 0.37, entry.G, 1.0, None, dual=True)
    assert np.abs(rebuilt - entry.H).max() < 1e-12


def test_determinism(stats):
    a = draw_channel(stats, PolarizationModel(0.5), 4, RngStream(11, 3))
    b = draw_channel(stats, PolarizationModel(0.5), 4, RngStream(11, 3))
    assert np.array_equal(a.H, b.H) and np.array_equal(a.Z, b.Z)
    c = draw_channel(stats, PolarizationModel(0.5), 4, RngStream(11, 4))
    assert not np.array_equal(a.H, c.H)


def test_odd_user_count_rejected(stats):
    with pytest.raises(InvalidInputError):
        draw_channel(stats, PolarizationModel(0.0), 5, RngStream(1, 0))


def test_nonzero_rxp_rejected():
    with pytest.raises(InvalidInputError):
        PolarizationModel(0.1, r_xp=0.2)


def _column_sample_cov(stats, chi, n_draws, cols, theta_max=None, seed=3):
    gen = RngStream(seed, 0).generator()
    dim = 2 * stats.dim
    acc = np.zeros((dim, dim), dtype=complex)
    count = 0
    pol = PolarizationModel(chi)
    for _ in range(n_draws):
        if theta_max is None:
            entry = draw_channel(stats, pol, 8, gen)
        else:
            entry = draw_mismatched_channel(stats, pol, theta_max, 8, gen)
        H = entry.H[:, cols]
        acc += H @ H.conj().T
        count += len(cols)
    return acc / count


def test_chi_one_column_covariance(stats):
    # chi = 1: every column has covariance blockdiag(R, R); 1e5 samples, 2 %.
    R = stats.matrix
    target = np.block([[R, np.zeros_like(R)], [np.zeros_like(R), R]])
    sample = _column_sample_cov(stats, 1.0, 25000, [0, 1, 2, 3])
    err = np.linalg.norm(sample - target) / np.linalg.norm(target)
    assert err < 0.02


def test_group_covariance_sums_to_closed_form(stats):
    # R_gv + R_gh = (1+chi) I_2 (x) R^s
    chi = 0.3
    R = stats.matrix
    z = np.zeros_like(R)
    target = (1 + chi) * np.block([[R, z], [z, R]])
    cov_v = _column_sample_cov(stats, chi, 15000, [0, 1, 2, 3], seed=4)
    cov_h = _column_sample_cov(stats, chi, 15000, [4, 5, 6, 7], seed=5)
    err = np.linalg.norm(cov_v + cov_h - target) / np.linalg.norm(target)
    assert err < 0.03


def test_mismatched_subgroup_covariance(stats):
    # c_eff * blockdiag(R, chi_eff R) for the vertical subgroup.
    from dualpol.corrstats import mismatch_effective_stats

    chi, theta_max = 0.2, 0.3 * math.pi
    ms = mismatch_effective_stats(chi, theta_max)
    R = stats.matrix
    z = np.zeros_like(R)
    target = ms.c_eff * np.block([[R, z], [z, ms.chi_eff * R]])
    sample = _column_sample_cov(stats, chi, 25000, [0, 1, 2, 3], theta_max=theta_max)
    err = np.linalg.norm(sample - target) / np.linalg.norm(target)
    assert err < 0.02


def test_mismatch_zero_angle_matches_plain_draw(stats):
    pol = PolarizationModel(0.4)
    plain = draw_channel(stats, pol, 6, RngStream(9, 1))
    matched = draw_mismatched_channel(stats, pol, 0.0, 6, RngStream(9, 1))
    assert np.abs(matched.H - plain.H).max() < 1e-15


def test_quarter_turn_moves_vertical_user_to_horizontal_block(stats):
    # chi = 0 and theta = pi/2: cos factor vanishes, all energy in the
    # cross-polarized block.
    r = stats.effective_rank
    gen = RngStream(2, 0).generator()
    from dualpol.channel import complex_normal

    G = complex_normal(gen, (2 * r, 4))
    H = _synthesize(stats, 0.0, G, 1.0, np.full(4, math.pi / 2), dual=True)
    assert np.abs(H[:stats.dim, :2]).max() < 1e-12
    assert np.abs(H[stats.dim:, :2]).max() > 0.0


def test_single_pol_draw(stats):
    entry = draw_single_pol_channel(stats, 4, RngStream(3, 0))
    assert entry.H.shape == (stats.dim, 4)
    assert entry.pol_labels is None


class TestCorruptCsit:
    def test_tau_zero_is_identity(self):
        G = np.arange(12).reshape(3, 4) + 0j
        assert np.array_equal(corrupt_csit(G, 0.0, RngStream(1, 0)), G)

    def test_tau_one_is_independent(self):
        gen = RngStream(8, 0).generator()
        from dualpol.channel import complex_normal

        G = complex_normal(gen, (250, 400))
        G_hat = corrupt_csit(G, 1.0, RngStream(8, 1))
        corr = np.abs(np.vdot(G, G_hat)) / (np.linalg.norm(G) * np.linalg.norm(G_hat))
        assert corr < 0.01

    def test_tau_06_correlation(self):
        # corr(G_hat, G) = sqrt(1 - 0.36) = 0.8 within 1 % over 1e5 entries
        gen = RngStream(8, 2).generator()
        from dualpol.channel import complex_normal

        G = complex_normal(gen, (250, 400))
        G_hat = corrupt_csit(G, 0.6, RngStream(8, 3))
        corr = np.real(np.vdot(G, G_hat)) / (np.linalg.norm(G) * np.linalg.norm(G_hat))
        assert corr == pytest.approx(0.8, rel=0.01)

    @given(tau=st.floats(0.0, 1.0))
    @settings(max_examples=20, deadline=None)
    def test_variance_preserved(self, tau):
        gen = np.random.default_rng(17)
        from dualpol.channel import complex_normal

        G = complex_normal(gen, (200, 250))
        Z = complex_normal(gen, (200, 250))
        mixed = mix_csit(G, Z, tau)
        assert np.mean(np.abs(mixed) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_rejects_bad_tau(self):
        with pytest.raises(InvalidInputError):
            mix_csit(np.zeros((2, 2)), np.zeros((2, 2)), 1.5)
