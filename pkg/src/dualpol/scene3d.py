"""3D dual-structured precoding over a uniform planar array.

Elevation is handled by a per-region prefilter: a unit vector on the
vertical axis that nulls the other regions' elevation eigenspaces. After the
prefilter, each region reduces to an ordinary 2D azimuth scenario whose
channels are scaled by sqrt(lambda_tilde * path_loss), and the regular
BD/BDS/switching machinery applies region by region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .corrstats import (
    GroupGeometry,
    SpatialCovariance,
    elevation_covariance,
    one_ring_covariance,
    ula,
)
from .errors import InfeasibleRegionError, InvalidInputError
from .metrics import McSummary, run_paired
from .scenario import GroupScenario, default_theta_grid

__all__ = [
    "ElevationRegion",
    "Scenario3D",
    "elevation_prefilter",
    "path_loss",
    "reduce_to_2d",
    "make_scenario_3d",
    "run_3d",
    "run_3d_paired",
]


def path_loss(distance: float, reference: float = 60.0) -> float:
    """Distance-based power loss 1 / (1 + (d / 60)^3)."""
    return 1.0 / (1.0 + (distance / reference) ** 3)


@dataclass(frozen=True)
class ElevationRegion:
    """One elevation ring: its vertical statistics, prefilter, and path loss."""

    cov_elev: SpatialCovariance
    distance: float
    height: float
    scatter_radius: float
    q: np.ndarray = field(repr=False)
    lambda_tilde: float
    path_loss: float


@dataclass(frozen=True)
class Scenario3D:
    """Planar-array cell: elevation regions, each carrying a 2D group scenario.

    The array has m_e vertical times m_a horizontal dual-polarized positions
    (2 m_e m_a antenna elements); every region gets an equal share of the
    total power.
    """

    m_e: int
    m_a: int
    power: float
    regions: tuple
    azimuth_scenario: GroupScenario = field(repr=False)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def with_power_db(self, snr_db: float) -> "Scenario3D":
        return replace(self, power=10.0 ** (snr_db / 10.0))

    def with_chi(self, chi: float) -> "Scenario3D":
        return replace(self, azimuth_scenario=self.azimuth_scenario.with_chi(chi))


def elevation_prefilter(region_covs, l: int, r_trunc: int = 1):
    """Prefilter of region l: the strongest direction orthogonal to the other
    regions' dominant elevation eigenvectors.

    Returns (q, lambda_tilde) with q unit-norm, q^H U_{-lE} = 0 and
    lambda_tilde = q^H R_lE q maximal over the feasible null space. Each
    elevation ring is nearly rank one here (the rings subtend narrow,
    closely spaced angle intervals on a short vertical array), so only the
    top r_trunc eigenvectors per other region are nulled; nulling their full
    effective-rank eigenspaces would also annihilate the own region.
    """
    own = region_covs[l]
    others = [c for i, c in enumerate(region_covs) if i != l]
    if others:
        U_minus = np.hstack([c.dominant_eigvecs(min(r_trunc, c.effective_rank))
                             for c in others])
        u, s, _ = np.linalg.svd(U_minus, full_matrices=True)
        rank = int(np.count_nonzero(s >= 1e-10 * s[0])) if s.size else 0
        nullspace = u[:, rank:]
    else:
        nullspace = np.eye(own.dim, dtype=complex)
    if nullspace.shape[1] == 0:
        raise InfeasibleRegionError(
            f"region {l}: other regions' eigenspaces fill the vertical array")
    compressed = nullspace.conj().T @ own.matrix @ nullspace
    vals, vecs = np.linalg.eigh((compressed + compressed.conj().T) / 2.0)
    q = nullspace @ vecs[:, -1]
    q = q / np.linalg.norm(q)
    lam = float((q.conj() @ own.matrix @ q).real)
    return q, lam


def make_scenario_3d(
    m_e: int = 10,
    m_a: int = 50,
    height: float = 60.0,
    distances=(30.0, 60.0, 100.0),
    G: int = 4,
    n_bar: int = 8,
    spread: float = math.pi / 12,
    spacing: float = 0.5,
    chi: float = 0.0,
    power: float = 1.0,
    b_bar: int | None = None,
    r: int | None = None,
    elevation_r: int = 1,
    rank_tol: float = 1e-6,
    scenario_id: str = "scene3d",
) -> Scenario3D:
    """Build the planar-array scenario: one elevation ring per distance, all
    regions sharing the azimuth group layout.

    The scatter-ring radius follows the azimuth spread (s = d tan(spread)),
    so nearer regions subtend wider elevation intervals.
    """
    vertical = ula(m_e, spacing)
    covs_elev = []
    for d in distances:
        s = d * math.tan(spread)
        covs_elev.append(elevation_covariance(height, d, s, vertical, rank_tol))
    horizontal = ula(m_a, spacing)
    covs_az = tuple(
        one_ring_covariance(GroupGeometry(theta, spread), horizontal, rank_tol)
        for theta in default_theta_grid(G)
    )
    azimuth = GroupScenario(
        M=2 * m_a, n_bar=n_bar,
        b_bar=b_bar if b_bar is not None else _default_b_bar(covs_az, n_bar),
        r=r if r is not None else _default_r(covs_az, n_bar, m_a, G),
        covariances=covs_az, chi=chi, power=power, dual_pol=True,
        scenario_id=scenario_id,
    )
    regions = []
    for l, d in enumerate(distances):
        q, lam = elevation_prefilter(covs_elev, l, elevation_r)
        regions.append(ElevationRegion(
            cov_elev=covs_elev[l], distance=float(d), height=height,
            scatter_radius=d * math.tan(spread), q=q, lambda_tilde=lam,
            path_loss=path_loss(d)))
    return Scenario3D(m_e=m_e, m_a=m_a, power=power, regions=tuple(regions),
                      azimuth_scenario=azimuth)


def _default_r(covs, n_bar, half, G):
    r = min(c.effective_rank for c in covs)
    b_bar = min(2 * n_bar, 2 * r)
    cap = (half - b_bar // 2) // (G - 1) if G > 1 else r
    return min(r, cap)


def _default_b_bar(covs, n_bar):
    r = min(c.effective_rank for c in covs)
    return min(2 * n_bar, 2 * r)


def reduce_to_2d(scenario3d: Scenario3D, l: int) -> GroupScenario:
    """Effective 2D scenario of region l.

    Channel amplitudes carry sqrt(lambda_tilde * path_loss); the region is
    granted an equal share of the total power.
    """
    if not 0 <= l < scenario3d.n_regions:
        raise InvalidInputError(f"no region {l}")
    region = scenario3d.regions[l]
    gain = math.sqrt(region.lambda_tilde * region.path_loss)
    base = scenario3d.azimuth_scenario
    return replace(
        base,
        power=scenario3d.power / scenario3d.n_regions,
        gains=(gain,) * base.G,
        scenario_id=f"{base.scenario_id}-region{l}",
    )


def run_3d_paired(scenario3d: Scenario3D, modes, n_trials: int, seed: int,
                  **kwargs) -> dict:
    """All schemes over all regions on shared draws; per-trial region sums."""
    modes = list(modes)
    totals = {m: np.zeros(n_trials) for m in modes}
    for l in range(scenario3d.n_regions):
        sc = reduce_to_2d(scenario3d, l)
        results = run_paired(sc, modes, n_trials, seed,
                             stream_base=l * n_trials, **kwargs)
        for m in modes:
            totals[m] += results[m].trial_sum_rates
    return {m: McSummary.from_trials(m, totals[m]) for m in modes}


def run_3d(scenario3d: Scenario3D, mode: str, n_trials: int, seed: int,
           **kwargs) -> McSummary:
    """Monte Carlo sum rate of one scheme over the whole 3D cell."""
    return run_3d_paired(scenario3d, [mode], n_trials, seed, **kwargs)[mode]
