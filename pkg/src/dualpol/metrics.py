"""Instantaneous SINRs, sum rates, and the Monte Carlo harness.

The per-user SINR decomposition follows the closed forms of the two schemes
exactly: signal, intra-(sub)group, cross-polarized (BDS only) and
inter-group interference powers, with the noise power fixed at one. Monte
Carlo trials share channel draws across schemes (common random numbers) so
scheme comparisons are paired.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelSet,
    PolarizationModel,
    RngStream,
    draw_channel,
    draw_mismatched_channel,
    draw_single_pol_channel,
)
from .errors import InvalidInputError
from .precode import build_all, build_preprocessors
from .scenario import GroupScenario

__all__ = ["SinrReport", "McSummary", "sinr_bd", "sinr_bds", "bds_tau_sq",
           "run_monte_carlo", "run_paired", "draw_trial"]


@dataclass(frozen=True)
class SinrReport:
    """Per-user SINRs (linear), rates, and the interference decomposition."""

    sinr: np.ndarray
    signal: np.ndarray = field(repr=False)
    intra: np.ndarray = field(repr=False)
    cross: np.ndarray = field(repr=False)
    inter: np.ndarray = field(repr=False)

    @property
    def rates(self) -> np.ndarray:
        return np.log2(1.0 + self.sinr)

    @property
    def sum_rate(self) -> float:
        return float(self.rates.sum())

    @property
    def noise(self) -> float:
        return 1.0


@dataclass(frozen=True)
class McSummary:
    """Mean sum rate with its standard error over independent trials."""

    scheme: str
    n_trials: int
    sum_rate: float
    stderr: float
    trial_sum_rates: np.ndarray = field(repr=False)
    mean_user_sinr: float = float("nan")
    extras: dict = field(default_factory=dict, repr=False)

    @staticmethod
    def from_trials(scheme, sums, user_sinr=None, extras=None):
        sums = np.asarray(sums, dtype=float)
        n = sums.size
        std = sums.std(ddof=1) if n > 1 else 0.0
        return McSummary(
            scheme=scheme, n_trials=n, sum_rate=float(sums.mean()),
            stderr=float(std / np.sqrt(n)), trial_sum_rates=sums,
            mean_user_sinr=float(np.mean(user_sinr)) if user_sinr is not None else float("nan"),
            extras=extras or {},
        )


def _interference_powers(channels, precoders, per_stream_power):
    """|h_gk^H (B_l P_l)_j|^2 tables for every (g, l) group pair."""
    tx = [precoders.transmit_matrix(g) for g in range(len(channels))]
    tables = {}
    for g, entry in enumerate(channels):
        for l in range(len(channels)):
            amp = entry.H.conj().T @ tx[l]
            tables[(g, l)] = per_stream_power * np.abs(amp) ** 2
    return tables


def sinr_bd(channels: ChannelSet, precoders, power: float) -> SinrReport:
    """SINR decomposition of the BD scheme for one realization."""
    if precoders.mode != "BD":
        raise InvalidInputError("sinr_bd needs BD-mode precoders")
    return _sinr_common(channels, precoders, power, split_cross=False)


def sinr_bds(channels: ChannelSet, precoders, power: float) -> SinrReport:
    """SINR decomposition of the BDS scheme for one realization."""
    if precoders.mode != "BDS":
        raise InvalidInputError("sinr_bds needs BDS-mode precoders")
    return _sinr_common(channels, precoders, power, split_cross=True)


def _sinr_common(channels, precoders, power, split_cross):
    n_total = sum(entry.n_users for entry in channels)
    per_stream = power / n_total
    tables = _interference_powers(channels, precoders, per_stream)
    G = len(channels)
    signal = []
    intra = []
    cross = []
    inter = []
    for g, entry in enumerate(channels):
        n = entry.n_users
        own = tables[(g, g)]
        diag = np.diag(own).real
        if split_cross:
            n2 = n // 2
            same_block = np.zeros(n)
            cross_g = np.zeros(n)
            same_block[:n2] = own[:n2, :n2].sum(axis=1)
            same_block[n2:] = own[n2:, n2:].sum(axis=1)
            cross_g[:n2] = own[:n2, n2:].sum(axis=1)
            cross_g[n2:] = own[n2:, :n2].sum(axis=1)
            intra_g = same_block - diag
        else:
            intra_g = own.sum(axis=1) - diag
            cross_g = np.zeros(n)
        inter_g = sum(tables[(g, l)].sum(axis=1) for l in range(G) if l != g)
        if G == 1:
            inter_g = np.zeros(n)
        signal.append(diag)
        intra.append(intra_g)
        cross.append(cross_g)
        inter.append(inter_g)
    signal = np.concatenate(signal)
    intra = np.concatenate(intra)
    cross = np.concatenate(cross)
    inter = np.concatenate(inter)
    sinr = signal / (intra + cross + inter + 1.0)
    return SinrReport(sinr=sinr, signal=signal, intra=intra, cross=cross, inter=inter)


def bds_tau_sq(tau_sq_bd: float) -> float:
    """Equal-feedback CSIT quality of BDS given BD's tau^2.

    Halving the quantized dimension squares the distortion bound, so the
    same bit budget that leaves BD at tau^2 leaves BDS at (tau^2)^2.
    """
    return min(tau_sq_bd * tau_sq_bd, 1.0)


def draw_trial(scenario: GroupScenario, rng, chi=None, theta_max=0.0):
    """All groups' channels for one coherence block, in group order."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    chi = scenario.chi if chi is None else chi
    entries = []
    for g, cov in enumerate(scenario.covariances):
        gain = scenario.gains[g]
        if not scenario.dual_pol:
            entries.append(draw_single_pol_channel(cov, scenario.n_bar, gen, gain))
        elif theta_max > 0.0:
            entries.append(draw_mismatched_channel(
                cov, PolarizationModel(chi), theta_max, scenario.n_bar, gen, gain))
        else:
            entries.append(draw_channel(cov, PolarizationModel(chi),
                                        scenario.n_bar, gen, gain))
    return ChannelSet(groups=tuple(entries))


def _evaluate_scheme(scenario, channels, preprocessors, mode, tau_bd, tau_bds):
    if mode == "BD":
        pre = build_all(scenario, channels, "BD", tau=tau_bd,
                        preprocessors=preprocessors)
        return sinr_bd(channels, pre, scenario.power)
    pre = build_all(scenario, channels, "BDS", tau=tau_bds,
                    preprocessors=preprocessors)
    return sinr_bds(channels, pre, scenario.power)


def run_paired(scenario: GroupScenario, modes, n_trials: int, seed: int,
               *, tau_sq=0.0, n_bits=None, theta_max=0.0,
               chi_dist=None, tau_sq_dist=None, switch_chi="eff",
               base=None, stream_base: int = 0) -> dict:
    """Run all requested schemes on shared channel draws.

    ``modes`` may contain BD, BDS, SWITCH, and SWITCH_RAW. CSIT quality comes
    either from ``n_bits`` (exact RVQ bounds for each scheme) or from
    ``tau_sq`` interpreted as BD's quality, with BDS at its equal-feedback
    equivalent. ``chi_dist``/``tau_sq_dist`` draw those parameters per
    trial. ``stream_base`` offsets the per-trial RNG streams so independent
    sub-experiments (e.g. elevation regions) stay decorrelated.
    """
    if n_trials < 1:
        raise InvalidInputError("n_trials must be at least 1")
    modes = list(modes)
    preprocessors = build_preprocessors(scenario)
    switch_modes = [m for m in modes if m.startswith("SWITCH")]
    decision_stats = None
    if switch_modes:
        from .modeswitch import chi_crossover_scale

        if base is None:
            from .rmt import asym_bds

            base = asym_bds(scenario.with_chi(0.0), tau_sq=0.0)
        decision_stats = chi_crossover_scale(base)

    sums = {m: np.empty(n_trials) for m in modes}
    user_sinrs = {m: np.empty(n_trials) for m in modes}
    picks = {m: [None] * n_trials for m in switch_modes}

    def one_trial(t):
        gen = RngStream(seed, stream_base + t).generator()
        chi_t = float(gen.uniform(*chi_dist)) if chi_dist else scenario.chi
        tau_t = float(gen.uniform(*tau_sq_dist)) if tau_sq_dist else tau_sq
        if n_bits is not None:
            from .modeswitch import FeedbackBudget, tau_from_bits

            budget = FeedbackBudget(n_bits=n_bits, r=scenario.r)
            tau_bd = np.sqrt(tau_from_bits(budget, "BD"))
            tau_bds = np.sqrt(tau_from_bits(budget, "BDS"))
        else:
            tau_bd = np.sqrt(min(tau_t, 1.0))
            tau_bds = np.sqrt(bds_tau_sq(min(tau_t, 1.0)))
        channels = draw_trial(scenario, gen, chi=chi_t, theta_max=theta_max)
        reports = {}
        for mode in modes:
            if mode in ("BD", "BDS"):
                reports[mode] = _evaluate_scheme(
                    scenario, channels, preprocessors, mode, tau_bd, tau_bds)
            else:
                chi_used = chi_t
                if mode == "SWITCH" and switch_chi == "eff" and theta_max > 0.0:
                    from .corrstats import mismatch_effective_stats

                    chi_used = mismatch_effective_stats(chi_t, theta_max).chi_eff
                chosen = "BDS" if chi_used <= decision_stats * tau_bd ** 2 else "BD"
                picks[mode][t] = chosen
                if chosen in reports:
                    reports[mode] = reports[chosen]
                else:
                    reports[mode] = _evaluate_scheme(
                        scenario, channels, preprocessors, chosen, tau_bd, tau_bds)
        for mode in modes:
            sums[mode][t] = reports[mode].sum_rate
            user_sinrs[mode][t] = reports[mode].sinr.mean()

    workers = min(thread_count(), n_trials)
    if workers > 1:
        # Per-trial RNG streams keep the result independent of scheduling.
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one_trial, range(n_trials)))
    else:
        for t in range(n_trials):
            one_trial(t)
    out = {}
    for mode in modes:
        extras = {}
        if mode in picks:
            chosen = picks[mode]
            extras["bds_fraction"] = chosen.count("BDS") / len(chosen)
        out[mode] = McSummary.from_trials(mode, sums[mode], user_sinrs[mode], extras)
    return out


def run_monte_carlo(scenario: GroupScenario, mode: str, n_trials: int,
                    seed: int, **kwargs) -> McSummary:
    """Monte Carlo mean sum rate of one scheme; deterministic in the seed."""
    return run_paired(scenario, [mode], n_trials, seed, **kwargs)[mode]


def thread_count() -> int:
    """Worker count for trial-level parallelism (DUALPOL_THREADS overrides)."""
    env = os.environ.get("DUALPOL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
