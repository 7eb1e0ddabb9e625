"""Dual-structured precoders.

The outer preprocessor projects each group onto the dominant eigenspace that
is orthogonal to the other groups' dominant eigenvectors (block
diagonalization); the inner precoder is regularized zero-forcing on the
effective channel estimate. BDS splits each group into co-polarized
subgroups that only consume co-polarized CSIT.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InvalidConfigurationError, InvalidInputError
from .scenario import GroupScenario

__all__ = [
    "Preprocessor",
    "InnerPrecoder",
    "PrecoderSet",
    "bd_preprocessor",
    "bds_preprocessor",
    "build_preprocessors",
    "rzf_precoder",
    "build_all",
]

_NULLSPACE_TOL = 1e-10


@dataclass(frozen=True)
class Preprocessor:
    """Outer matrix of one group.

    ``B_s`` is the per-polarization block (M/2 x B_bar/2); the BD matrix is
    I_2 (x) B_s and the BDS pair stacks B_s over a zero block. Single-pol
    scenarios store the full matrix in ``B_s`` directly.
    """

    B_s: np.ndarray
    r_trunc: int
    dual_pol: bool = True

    @property
    def bd(self) -> np.ndarray:
        if not self.dual_pol:
            return self.B_s
        return np.kron(np.eye(2), self.B_s)

    @property
    def bds_v(self) -> np.ndarray:
        z = np.zeros_like(self.B_s)
        return np.vstack([self.B_s, z])

    @property
    def bds_h(self) -> np.ndarray:
        z = np.zeros_like(self.B_s)
        return np.vstack([z, self.B_s])


@dataclass(frozen=True)
class InnerPrecoder:
    """RZF inner precoder with its normalization and cached resolvent."""

    P: np.ndarray
    xi_sq: float
    alpha: float
    K_hat: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PrecoderSet:
    """All inner precoders of one realization, keyed per group (BD) or
    per (group, polarization) (BDS)."""

    mode: str
    preprocessors: tuple
    inner: tuple  # BD: one InnerPrecoder per group; BDS: tuple (v, h) per group

    def transmit_matrix(self, g: int) -> np.ndarray:
        """B_g P_g with columns ordered like the group's users."""
        pre = self.preprocessors[g]
        if self.mode == "BD":
            return pre.bd @ self.inner[g].P
        pv, ph = self.inner[g]
        return np.hstack([pre.bds_v @ pv.P, pre.bds_h @ ph.P])


def _null_space_basis(U_minus: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(U_minus)."""
    if U_minus.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    u, s, _ = np.linalg.svd(U_minus, full_matrices=True)
    rank = int(np.count_nonzero(s >= _NULLSPACE_TOL * s[0]))
    return u[:, rank:]


def bd_preprocessor(all_stats, g: int, r: int, b_bar: int,
                    dual_pol: bool = True) -> Preprocessor:
    """Block-diagonalization preprocessor of group ``g``.

    Stacks the other groups' top-r eigenvectors, takes the orthogonal
    complement E0, and picks the top B_bar/2 eigenmodes of the compressed
    covariance E0^H R_g E0 (B_bar for single polarization).
    """
    n_cols = b_bar // 2 if dual_pol else b_bar
    G = len(all_stats)
    stats = all_stats[g]
    dim = stats.dim
    room = dim - (G - 1) * r
    if n_cols > room:
        raise InvalidConfigurationError(
            f"violated b_bar <= {'2' if dual_pol else '1'}*(array - (G-1) r): "
            f"{n_cols} columns > {room} free dimensions"
        )
    if r > min(s.effective_rank for s in all_stats):
        raise InvalidConfigurationError("violated r <= min effective rank")
    U_minus = np.hstack([all_stats[l].dominant_eigvecs(r)
                         for l in range(G) if l != g]) if G > 1 else np.zeros((dim, 0))
    E0 = _null_space_basis(U_minus, dim)
    R_tilde = E0.conj().T @ stats.matrix @ E0
    vals, vecs = np.linalg.eigh((R_tilde + R_tilde.conj().T) / 2.0)
    order = np.argsort(vals)[::-1]
    F1 = vecs[:, order[:n_cols]]
    return Preprocessor(B_s=E0 @ F1, r_trunc=r, dual_pol=dual_pol)


def bds_preprocessor(bd: Preprocessor) -> Preprocessor:
    """BDS reuses the same B_s; the zero-padded stacking happens on access."""
    if not bd.dual_pol:
        raise InvalidInputError("BDS requires a dual-polarized preprocessor")
    return bd


def build_preprocessors(scenario: GroupScenario) -> tuple:
    return tuple(
        bd_preprocessor(scenario.covariances, g, scenario.r, scenario.b_bar,
                        scenario.dual_pol)
        for g in range(scenario.G)
    )


def rzf_precoder(H_eff_hat: np.ndarray, alpha: float, n_streams: int) -> InnerPrecoder:
    """Regularized ZF on the effective channel estimate.

    K = (H H^H + dim alpha I)^-1 with dim the row count; P = xi K H with
    xi^2 = n_streams / tr(H^H K^H K H), which fixes the transmit power.
    """
    if alpha <= 0.0:
        raise InvalidInputError("alpha must be positive")
    dim = H_eff_hat.shape[0]
    K = np.linalg.inv(H_eff_hat @ H_eff_hat.conj().T + dim * alpha * np.eye(dim))
    KH = K @ H_eff_hat
    norm = float(np.sum(np.abs(KH) ** 2))
    if norm <= 0.0:
        raise DegenerateInputError("all-zero effective channel cannot be normalized")
    xi_sq = n_streams / norm
    return InnerPrecoder(P=np.sqrt(xi_sq) * KH, xi_sq=xi_sq, alpha=alpha, K_hat=K)


def build_all(scenario: GroupScenario, channels, mode: str,
              tau: float = 0.0, preprocessors=None) -> PrecoderSet:
    """Assemble the outer/inner precoders of every group for one realization.

    BD computes one RZF per group on B_g^H H_hat_g with regularizer
    B_bar alpha = n_bar / P; BDS computes one RZF per co-polarized subgroup
    on (B_g^s)^H H_hat_g^{pp}, consuming only co-polarized CSIT. The BDS
    blocks keep the same absolute regularizer n_bar / P (the MMSE value for
    half the streams at half the power), which is what makes BDS coincide
    with BD when the polarizations do not leak into each other.
    """
    if preprocessors is None:
        preprocessors = build_preprocessors(scenario)
    if mode not in ("BD", "BDS"):
        raise InvalidInputError(f"unknown precoding mode {mode!r}")
    if mode == "BDS" and not scenario.dual_pol:
        raise InvalidInputError("BDS requires a dual-polarized scenario")
    alpha = scenario.alpha
    n_bar = scenario.n_bar
    inner = []
    for g, entry in enumerate(channels):
        pre = preprocessors[g]
        if mode == "BD":
            H_hat = entry.h_hat(tau)
            inner.append(rzf_precoder(pre.bd.conj().T @ H_hat, alpha, n_bar))
        else:
            # Only the co-polarized CSIT blocks are read: the vertical
            # subgroup uses the upper blocks of its users' estimates, the
            # horizontal one the lower blocks.
            r = entry.stats.effective_rank
            n2 = n_bar // 2
            A = entry.gain * entry.stats.factor()
            Bs = pre.B_s
            G_hat = entry.g_hat(tau)
            Hvv_hat = A @ G_hat[:r, :n2]
            Hhh_hat = A @ G_hat[r:, n2:]
            pv = rzf_precoder(Bs.conj().T @ Hvv_hat, 2.0 * alpha, n2)
            ph = rzf_precoder(Bs.conj().T @ Hhh_hat, 2.0 * alpha, n2)
            inner.append((pv, ph))
    return PrecoderSet(mode=mode, preprocessors=tuple(preprocessors),
                       inner=tuple(inner))
