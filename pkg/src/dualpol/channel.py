"""Channel realizations and the imperfect-CSIT model.

Channels live in the Karhunen-Loeve domain: a group's channel is built from
its covariance eigenmodes times a white inner Gaussian factor. CSIT
imperfection corrupts that inner factor, and polarization mismatch applies a
per-user random rotation between the two polarization blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corrstats import SpatialCovariance
from .errors import InvalidInputError

__all__ = [
    "PolarizationModel",
    "RngStream",
    "GroupChannel",
    "ChannelSet",
    "draw_channel",
    "draw_mismatched_channel",
    "draw_single_pol_channel",
    "corrupt_csit",
    "mix_csit",
]


@dataclass(frozen=True)
class PolarizationModel:
    """Inverse XPD chi in [0, 1]; cross-polar correlation is fixed at zero."""

    chi: float
    r_xp: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.chi <= 1.0:
            raise InvalidInputError("chi must lie in [0, 1]")
        if self.r_xp != 0.0:
            raise InvalidInputError("nonzero cross-polar correlation is unsupported")


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream: identical (seed, stream_id) => identical draws."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1): (x + jy)/sqrt(2) with x, y standard normal."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class GroupChannel:
    """One group's realization: true channel, inner factor, corruption noise.

    The first half of the columns are vertically polarized users, the second
    half horizontally polarized ones (``pol_labels`` state it explicitly).
    For single-polarized scenarios ``pol_labels`` is None and the inner factor
    has ``r`` rows instead of ``2r``.
    """

    H: np.ndarray
    G: np.ndarray
    Z: np.ndarray = field(repr=False)
    stats: SpatialCovariance = field(repr=False)
    chi: float = 0.0
    gain: float = 1.0
    pol_labels: tuple | None = None
    mismatch_angles: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return self.H.shape[1]

    def g_hat(self, tau: float) -> np.ndarray:
        return mix_csit(self.G, self.Z, tau)

    def h_hat(self, tau: float) -> np.ndarray:
        """Imperfect CSIT of H: corrupted inner factor, aligned synthesis.

        The transmitter knows the long-term statistics and the fed-back inner
        factor but not the users' polarization rotations, so mismatched
        channels are reconstructed with the aligned-polarization factors;
        the rotation acts as an unmodeled CSIT error.
        """
        if tau == 0.0 and self.mismatch_angles is None:
            return self.H
        return _synthesize(
            self.stats, self.chi, self.g_hat(tau), self.gain,
            None, dual=self.pol_labels is not None,
        )


@dataclass(frozen=True)
class ChannelSet:
    """Per-group channel realizations for one coherence block."""

    groups: tuple

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, g):
        return self.groups[g]

    def __len__(self):
        return len(self.groups)


def _synthesize(stats, chi, G, gain, angles, dual):
    A = gain * stats.factor()
    if not dual:
        return A @ G
    r = stats.effective_rank
    top, bot = G[:r], G[r:]
    n2 = G.shape[1] // 2
    sq = np.sqrt(chi)
    if angles is None:
        fac_top = np.concatenate([np.ones(n2), sq * np.ones(n2)])
        fac_bot = np.concatenate([sq * np.ones(n2), np.ones(n2)])
    else:
        c, s = np.cos(angles), np.sin(angles)
        # Vertical users: (cos - sqrt(chi) sin, sin + sqrt(chi) cos);
        # horizontal users: (sqrt(chi) cos - sin, sqrt(chi) sin + cos).
        fac_top = np.concatenate([c[:n2] - sq * s[:n2], sq * c[n2:] - s[n2:]])
        fac_bot = np.concatenate([s[:n2] + sq * c[:n2], sq * s[n2:] + c[n2:]])
    return np.vstack([A @ (top * fac_top), A @ (bot * fac_bot)])


def _draw(stats, pol, n_users, rng, theta_max=None, gain=1.0):
    if n_users % 2 != 0:
        raise InvalidInputError("n_users must be even")
    if stats.effective_rank < 1:
        raise InvalidInputError("covariance has no significant eigenmode")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    r = stats.effective_rank
    G = complex_normal(gen, (2 * r, n_users))
    Z = complex_normal(gen, (2 * r, n_users))
    angles = None
    if theta_max is not None:
        angles = gen.uniform(-theta_max, theta_max, size=n_users)
    H = _synthesize(stats, pol.chi, G, gain, angles, dual=True)
    labels = ("v",) * (n_users // 2) + ("h",) * (n_users // 2)
    return GroupChannel(H=H, G=G, Z=Z, stats=stats, chi=pol.chi, gain=gain,
                        pol_labels=labels, mismatch_angles=angles)


def draw_channel(stats: SpatialCovariance, pol: PolarizationModel,
                 n_users: int, rng, gain: float = 1.0) -> GroupChannel:
    """Draw one group's dual-polarized channel.

    H = [[A Gvv, sqrt(chi) A Ghv], [sqrt(chi) A Gvh, A Ghh]] with
    A = U Lambda^(1/2) and i.i.d. CN(0,1) inner blocks.
    """
    return _draw(stats, pol, n_users, rng, gain=gain)


def draw_mismatched_channel(stats: SpatialCovariance, pol: PolarizationModel,
                            theta_max: float, n_users: int, rng,
                            gain: float = 1.0) -> GroupChannel:
    """Like draw_channel but each user gets a rotation angle ~ U[-theta_max, theta_max]."""
    if not 0.0 <= theta_max <= np.pi / 2:
        raise InvalidInputError("theta_max must lie in [0, pi/2]")
    return _draw(stats, pol, n_users, rng, theta_max=theta_max, gain=gain)


def draw_single_pol_channel(stats: SpatialCovariance, n_users: int, rng,
                            gain: float = 1.0) -> GroupChannel:
    """Co-polarized baseline: H = U Lambda^(1/2) G over the full array."""
    if n_users < 1:
        raise InvalidInputError("n_users must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    r = stats.effective_rank
    G = complex_normal(gen, (r, n_users))
    Z = complex_normal(gen, (r, n_users))
    H = gain * (stats.factor() @ G)
    return GroupChannel(H=H, G=G, Z=Z, stats=stats, chi=0.0, gain=gain,
                        pol_labels=None)


def mix_csit(G: np.ndarray, Z: np.ndarray, tau: float) -> np.ndarray:
    """sqrt(1 - tau^2) G + tau Z: variance-preserving CSIT corruption."""
    if not 0.0 <= tau <= 1.0:
        raise InvalidInputError("tau must lie in [0, 1]")
    if tau == 0.0:
        return G
    return np.sqrt(1.0 - tau * tau) * G + tau * Z


def corrupt_csit(G: np.ndarray, tau: float, rng) -> np.ndarray:
    """Corrupt an inner factor with freshly drawn noise of matching shape."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    Z = complex_normal(gen, np.shape(G))
    return mix_csit(np.asarray(G), Z, tau)
