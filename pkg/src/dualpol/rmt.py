"""Deterministic equivalents of the dual-structured precoding SINRs.

Large-system limits are computed from the resolvent fixed point: each user
class contributes a scalar e_i solving a self-consistent trace equation, and
every SINR ingredient (signal strength m, power normalization Psi, intra and
inter interference Upsilon) follows from the fixed point and closed linear
systems for the resolvent derivatives. No numerical differentiation is used
anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError, NonConvergenceError, NumericalError
from .precode import build_preprocessors
from .scenario import GroupScenario

__all__ = [
    "FixedPointProblem",
    "FixedPointResult",
    "AsymptoticSolution",
    "solve_fixed_point",
    "asym_bd",
    "asym_bd_simplified",
    "asym_bds",
    "approx_bd_chi",
    "approx_bds_chi",
    "bds_c0",
]

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 2000


@dataclass(frozen=True)
class FixedPointProblem:
    """Resolvent fixed point data: user-class covariances with multiplicities,
    a Hermitian shift S, the (negative) argument z, and the trace normalizer M."""

    covariances: tuple
    multiplicities: tuple
    S: np.ndarray | None
    z: float
    M: int

    def __post_init__(self):
        if self.z >= 0.0:
            raise InvalidInputError("z must be negative")
        if len(self.covariances) != len(self.multiplicities):
            raise InvalidInputError("one multiplicity per covariance class")
        object.__setattr__(self, "covariances", tuple(np.asarray(R) for R in self.covariances))
        object.__setattr__(self, "multiplicities", tuple(int(n) for n in self.multiplicities))


@dataclass(frozen=True)
class FixedPointResult:
    e: np.ndarray
    T: np.ndarray = field(repr=False)
    iterations: int
    residual: float


def solve_fixed_point(problem: FixedPointProblem, tol: float = FIXED_POINT_TOL,
                      max_iter: int = FIXED_POINT_MAX_ITER) -> FixedPointResult:
    """Solve e_i = (1/M) tr(R_i T(e)) with T(e) = ((1/M) sum_j n_j R_j/(1+e_j) + S - zI)^-1.

    Fixed-point iteration from e = 1/alpha with step damping when the
    residual stops decreasing.
    """
    k = len(problem.covariances)
    if problem.covariances:
        dim = problem.covariances[0].shape[0]
    elif problem.S is not None:
        dim = problem.S.shape[0]
    else:
        dim = problem.M
    S = problem.S if problem.S is not None else np.zeros((dim, dim))
    base = S - problem.z * np.eye(dim)
    if k == 0:
        T = np.linalg.inv(base)
        return FixedPointResult(e=np.zeros(0), T=T, iterations=0, residual=0.0)
    alpha = -problem.z
    e = np.full(k, 1.0 / alpha)
    damp = 1.0
    prev_res = np.inf

    def resolvent(ev):
        acc = base.copy().astype(complex)
        for R, n, ej in zip(problem.covariances, problem.multiplicities, ev):
            acc += (n / (problem.M * (1.0 + ej))) * R
        return np.linalg.inv(acc)

    for it in range(1, max_iter + 1):
        T = resolvent(e)
        e_new = np.array([np.trace(R @ T).real / problem.M for R in problem.covariances])
        res = float(np.max(np.abs(e_new - e)))
        if res < tol:
            return FixedPointResult(e=e_new, T=resolvent(e_new),
                                    iterations=it, residual=res)
        if res > prev_res:
            damp = 0.5
        e = damp * e_new + (1.0 - damp) * e
        prev_res = res
    raise NonConvergenceError(
        f"fixed point not converged after {max_iter} iterations", residual=res)


@dataclass(frozen=True)
class AsymptoticSolution:
    """Converged deterministic-equivalent quantities of one scheme.

    Arrays are indexed (group, polarization) with polarization order (v, h).
    ``upsilon_intra`` is the raw intra-(sub)group term (to be weighted by the
    own xi^2); ``upsilon_cross`` and ``upsilon_inter`` are already weighted by
    the interfering precoders' xi^2.
    """

    scheme: str
    tau_sq: float
    power: float
    n_streams: int
    n_bar: int
    m0: np.ndarray
    m_prime: np.ndarray
    xi_sq: np.ndarray
    psi: np.ndarray
    upsilon_intra: np.ndarray
    upsilon_cross: np.ndarray
    upsilon_inter: np.ndarray
    gamma: np.ndarray
    sum_rate: float
    iterations: int
    residual: float
    extras: dict = field(default_factory=dict, repr=False)

    def at_tau(self, tau_sq: float) -> "AsymptoticSolution":
        """Re-assemble the SINR at another CSIT quality; the fixed point,
        derivatives and xi are tau-independent."""
        gamma = _assemble_gamma(
            self.power, self.n_streams, tau_sq, self.m0, self.xi_sq,
            self.upsilon_intra, self.upsilon_cross, self.upsilon_inter)
        return replace(self, tau_sq=tau_sq, gamma=gamma,
                       sum_rate=_sum_rate(gamma, self.n_bar))

    def mean_gamma(self) -> float:
        return float(self.gamma.mean())


def _assemble_gamma(power, n_streams, tau_sq, m0, xi_sq, ups_intra,
                    ups_cross, ups_inter):
    u = (1.0 + m0) ** 2
    signal = (power / n_streams) * xi_sq * (1.0 - tau_sq) * m0 ** 2
    intra = xi_sq * ups_intra * (1.0 - tau_sq * (1.0 - u))
    other = (1.0 + ups_cross + ups_inter) * u
    return signal / (intra + other)


def _sum_rate(gamma, n_bar):
    return float((n_bar / 2.0) * np.log2(1.0 + gamma).sum())


def _projected_covariances(scenario: GroupScenario, preprocessors):
    """C[g] = B_g^s^H R_g^s B_g^s and D[g][l] = B_l^s^H R_g^s B_l^s (gain-scaled)."""
    G = scenario.G
    C = []
    D = [[None] * G for _ in range(G)]
    for g in range(G):
        R = scenario.covariances[g].matrix * scenario.gains[g] ** 2
        for l in range(G):
            Bs = preprocessors[l].B_s
            proj = Bs.conj().T @ R @ Bs
            if l == g:
                C.append(proj)
            else:
                D[g][l] = proj
    return C, D


def _pol_blockdiag(C, chi, p):
    """R_bar of polarization p: blockdiag(C, chi C) for v, mirrored for h."""
    if p == 0:
        return np.block([[C, np.zeros_like(C)], [np.zeros_like(C), chi * C]])
    return np.block([[chi * C, np.zeros_like(C)], [np.zeros_like(C), C]])


def asym_bd(scenario: GroupScenario, tau_sq: float = 0.0,
            preprocessors=None) -> AsymptoticSolution:
    """Full deterministic equivalent of the BD scheme (both polarizations)."""
    if preprocessors is None:
        preprocessors = build_preprocessors(scenario)
    G, n_bar, b_bar = scenario.G, scenario.n_bar, scenario.b_bar
    P, N, alpha = scenario.power, scenario.n_users, scenario.alpha
    C, D = _projected_covariances(scenario, preprocessors)
    chi = scenario.chi

    Rbar = [[_pol_blockdiag(C[g], chi, p) for p in range(2)] for g in range(G)]
    m0 = np.zeros((G, 2))
    T = []
    iterations = 0
    residual = 0.0
    for g in range(G):
        prob = FixedPointProblem(
            covariances=(Rbar[g][0], Rbar[g][1]),
            multiplicities=(n_bar // 2, n_bar // 2),
            S=None, z=-alpha, M=b_bar)
        res = solve_fixed_point(prob)
        m0[g] = res.e
        T.append(res.T)
        iterations = max(iterations, res.iterations)
        residual = max(residual, res.residual)

    def trace(A, B):
        return np.trace(A @ B).real

    J = []
    for g in range(G):
        Jg = np.zeros((2, 2))
        for p in range(2):
            for q in range(2):
                Jg[p, q] = (n_bar / (2.0 * b_bar)) * trace(
                    Rbar[g][p] @ T[g], Rbar[g][q] @ T[g]) / (
                    b_bar * (1.0 + m0[g, q]) ** 2)
        J.append(Jg)

    def derivative(g, pert):
        """Solve the 2x2 linear system for the derivative traces against a
        perturbation matrix (inhomogeneous term tr(Rbar_gq T pert T)/B)."""
        v = np.array([trace(Rbar[g][q] @ T[g], pert @ T[g]) / b_bar for q in range(2)])
        mat = np.eye(2) - J[g]
        try:
            return np.linalg.solve(mat, v)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular (I - J) derivative system") from exc

    m_prime = np.zeros((G, 2))
    psi = np.zeros(G)
    for g in range(G):
        v_g = np.array([trace(Rbar[g][q] @ T[g], T[g]) / b_bar for q in range(2)])
        mp = np.linalg.solve(np.eye(2) - J[g], v_g)
        m_prime[g] = mp
        psi[g] = (P / (2.0 * b_bar * G)) * np.sum(mp / (1.0 + m0[g]) ** 2)
    xi_sq_g = P / (G * psi)

    ups_intra = np.zeros((G, 2))
    for g in range(G):
        for p in range(2):
            mp_gg = derivative(g, Rbar[g][p])
            q = 1 - p
            ups_intra[g, p] = (
                (n_bar / 2.0 - 1.0) / b_bar * (P / N) * mp_gg[p] / (1.0 + m0[g, p]) ** 2
                + n_bar / (2.0 * b_bar) * (P / N) * mp_gg[q] / (1.0 + m0[g, q]) ** 2)

    ups_inter = np.zeros((G, 2))
    for g in range(G):
        for p in range(2):
            total = 0.0
            for l in range(G):
                if l == g:
                    continue
                pert = _pol_blockdiag(D[g][l], chi, p)
                mp_gl = derivative(l, pert)
                ups_glp = (P / (2.0 * N)) * (n_bar / b_bar) * np.sum(
                    mp_gl / (1.0 + m0[l]) ** 2)
                total += xi_sq_g[l] * ups_glp
            ups_inter[g, p] = total

    xi_sq = np.repeat(xi_sq_g[:, None], 2, axis=1)
    gamma = _assemble_gamma(P, N, tau_sq, m0, xi_sq, ups_intra,
                            np.zeros((G, 2)), ups_inter)
    return AsymptoticSolution(
        scheme="BD", tau_sq=tau_sq, power=P, n_streams=N, n_bar=n_bar,
        m0=m0, m_prime=m_prime, xi_sq=xi_sq,
        psi=np.repeat(psi[:, None], 2, axis=1),
        upsilon_intra=ups_intra, upsilon_cross=np.zeros((G, 2)),
        upsilon_inter=ups_inter, gamma=gamma,
        sum_rate=_sum_rate(gamma, n_bar), iterations=iterations,
        residual=residual)


def asym_bd_simplified(scenario: GroupScenario, tau_sq: float = 0.0,
                       preprocessors=None) -> AsymptoticSolution:
    """Scalar-per-group deterministic equivalent for co-located polarizations.

    With the same spatial covariance on both polarizations the two
    polarizations share one fixed point, and every 2x2 derivative system
    diagonalizes in the symmetric/antisymmetric polarization channels with
    eigenvalue factors (1 +- chi)^2. All quantities reduce to scalar quotient
    forms on the (B_bar/2)-dimensional blocks; the result matches the full
    solver to machine precision.
    """
    if preprocessors is None:
        preprocessors = build_preprocessors(scenario)
    G, n_bar, b_bar = scenario.G, scenario.n_bar, scenario.b_bar
    P, N, alpha = scenario.power, scenario.n_users, scenario.alpha
    C, D = _projected_covariances(scenario, preprocessors)
    chi = scenario.chi
    s_plus = (1.0 + chi) ** 2
    s_minus = (1.0 - chi) ** 2

    m0 = np.zeros(G)
    T = []
    iterations = 0
    residual = 0.0
    for g in range(G):
        prob = FixedPointProblem(covariances=((1.0 + chi) * C[g],),
                                 multiplicities=(n_bar // 2,),
                                 S=None, z=-alpha, M=b_bar)
        res = solve_fixed_point(prob)
        m0[g] = res.e[0]
        T.append(res.T)
        iterations = max(iterations, res.iterations)
        residual = max(residual, res.residual)

    def trace(A, B):
        return np.trace(A @ B).real

    u = (1.0 + m0) ** 2
    tr_sq = np.array([trace(C[g] @ T[g], C[g] @ T[g]) for g in range(G)])
    tr_res = np.array([trace(C[g] @ T[g], T[g]) for g in range(G)])
    j = (n_bar / (2.0 * b_bar)) * tr_sq / (b_bar * u)
    den_plus = 1.0 - j * s_plus
    den_minus = 1.0 - j * s_minus

    m_prime = (1.0 + chi) * tr_res / (b_bar * den_plus)
    psi = (P / (G * b_bar)) * m_prime / u
    xi_sq_g = (b_bar * u) / m_prime

    # Intra-group interference: n_bar/2 - 1 same-polarization users plus
    # n_bar/2 cross-polarized ones, via the two symmetry channels.
    sym = (tr_sq / (2.0 * b_bar)) * s_plus / den_plus
    anti = (tr_sq / (2.0 * b_bar)) * s_minus / den_minus
    mp_same = sym + anti
    mp_cross = sym - anti
    ups_intra_g = (P / N) * ((n_bar / 2.0 - 1.0) * mp_same
                             + (n_bar / 2.0) * mp_cross) / (b_bar * u)

    # Inter-group interference keeps only the symmetric channel.
    ups_inter_g = np.zeros(G)
    for g in range(G):
        total = 0.0
        for l in range(G):
            if l == g:
                continue
            trD = trace(C[l] @ T[l], D[g][l] @ T[l])
            mp_gl_sum = (trD / b_bar) * s_plus / den_plus[l]
            total += xi_sq_g[l] * (P / (2.0 * N)) * (n_bar / b_bar) * mp_gl_sum / u[l]
        ups_inter_g[g] = total

    def spread(a):
        return np.repeat(np.asarray(a)[:, None], 2, axis=1)

    gamma = _assemble_gamma(P, N, tau_sq, spread(m0), spread(xi_sq_g),
                            spread(ups_intra_g), np.zeros((G, 2)),
                            spread(ups_inter_g))
    return AsymptoticSolution(
        scheme="BD_SIMPLE", tau_sq=tau_sq, power=P, n_streams=N, n_bar=n_bar,
        m0=spread(m0), m_prime=spread(m_prime), xi_sq=spread(xi_sq_g),
        psi=spread(psi), upsilon_intra=spread(ups_intra_g),
        upsilon_cross=np.zeros((G, 2)), upsilon_inter=spread(ups_inter_g),
        gamma=gamma, sum_rate=_sum_rate(gamma, n_bar), iterations=iterations,
        residual=residual)


def asym_bds(scenario: GroupScenario, tau_sq: float = 0.0,
             preprocessors=None) -> AsymptoticSolution:
    """Full deterministic equivalent of the BDS scheme.

    Each co-polarized subgroup has a scalar fixed point on its (B_bar/2)-dim
    effective system; cross-polarized and inter-group interference enter
    through chi-weighted projected covariances. The subgroup regularizer
    matches the precoder (n_bar / P absolute, i.e. twice alpha per
    dimension), which makes the chi = 0 solution coincide with BD's exactly.
    """
    if preprocessors is None:
        preprocessors = build_preprocessors(scenario)
    G, n_bar, b_bar = scenario.G, scenario.n_bar, scenario.b_bar
    P, N, alpha = scenario.power, scenario.n_users, scenario.alpha
    beta = b_bar // 2
    C, D = _projected_covariances(scenario, preprocessors)
    chi = scenario.chi
    alpha_eff = 2.0 * alpha

    m0 = np.zeros((G, 2))
    T = []
    iterations = 0
    residual = 0.0
    for g in range(G):
        prob = FixedPointProblem(covariances=(C[g],), multiplicities=(n_bar // 2,),
                                 S=None, z=-alpha_eff, M=beta)
        res = solve_fixed_point(prob)
        m0[g, :] = res.e[0]
        T.append(res.T)
        iterations = max(iterations, res.iterations)
        residual = max(residual, res.residual)

    def trace(A, B):
        return np.trace(A @ B).real

    denom = np.array([
        1.0 - (n_bar / b_bar) * trace(C[g] @ T[g], C[g] @ T[g])
        / (beta * (1.0 + m0[g, 0]) ** 2)
        for g in range(G)])
    m_prime_g = np.array([(2.0 / b_bar) * trace(C[g] @ T[g], T[g])
                          for g in range(G)]) / denom
    psi_g = (P / (G * b_bar)) * m_prime_g / (1.0 + m0[:, 0]) ** 2
    # Deterministic equivalent of the per-subgroup normalization
    # xi^2 = (n_bar/2) / tr(H^H K^H K H), i.e. P / (2 G Psi).
    xi_sq_g = P / (2.0 * G * psi_g)

    m_prime_gg = np.array([(2.0 / b_bar) * trace(C[g] @ T[g], C[g] @ T[g])
                           for g in range(G)]) / denom
    ups_intra_g = ((n_bar / 2.0 - 1.0) / beta) * (P / N) * m_prime_gg / (1.0 + m0[:, 0]) ** 2

    # Interference of subgroup (l, q) onto users of (g, p): the projected
    # covariance is B_lq^H R_gp B_lq = C or D scaled by chi when q != p, so
    # the weighted interference sum is affine in chi with slope chi_slope.
    ups_cross_g = np.zeros(G)
    ups_inter_g = np.zeros(G)
    chi_slope_g = np.zeros(G)
    for g in range(G):
        mp_cross_unit = (2.0 / b_bar) * trace(C[g] @ T[g], C[g] @ T[g]) / denom[g]
        cross_unit = xi_sq_g[g] * (P / N) * (n_bar / b_bar) * mp_cross_unit / (1.0 + m0[g, 0]) ** 2
        ups_cross_g[g] = chi * cross_unit
        total = 0.0
        slope = cross_unit
        for l in range(G):
            if l == g:
                continue
            mp_unit = (2.0 / b_bar) * trace(C[l] @ T[l], D[g][l] @ T[l]) / denom[l]
            ups_unit = xi_sq_g[l] * (P / N) * (n_bar / b_bar) * mp_unit / (1.0 + m0[l, 0]) ** 2
            total += (1.0 + chi) * ups_unit
            slope += ups_unit
        ups_inter_g[g] = total
        chi_slope_g[g] = slope

    def spread(a):
        return np.repeat(np.asarray(a)[:, None], 2, axis=1)

    xi_sq = spread(xi_sq_g)
    gamma = _assemble_gamma(P, N, tau_sq, m0, xi_sq, spread(ups_intra_g),
                            spread(ups_cross_g), spread(ups_inter_g))
    return AsymptoticSolution(
        scheme="BDS", tau_sq=tau_sq, power=P, n_streams=N, n_bar=n_bar,
        m0=m0, m_prime=spread(m_prime_g), xi_sq=xi_sq, psi=spread(psi_g),
        upsilon_intra=spread(ups_intra_g), upsilon_cross=spread(ups_cross_g),
        upsilon_inter=spread(ups_inter_g), gamma=gamma,
        sum_rate=_sum_rate(gamma, n_bar), iterations=iterations,
        residual=residual, extras={"chi_slope": spread(chi_slope_g)})


def approx_bd_chi(solution_at_zero: AsymptoticSolution, chi: float) -> AsymptoticSolution:
    """BD's SINR is approximately flat in chi: the approximation is constancy."""
    return solution_at_zero


def bds_c0(solution_at_zero: AsymptoticSolution) -> float:
    """Interference growth coefficient of the BDS SINR in chi.

    The weighted interference sum is affine in chi, so per subgroup the SINR
    obeys gamma(chi) = gamma(0) / (1 + c chi) exactly with
    c = slope * (1+m)^2 / denominator(0); c0 averages c over (g, p). (The
    compact closed-form coefficient replaces the cross-polarized multiplicity
    n_bar/2 by n_bar/2 - 1 and drops inter-group leakage, which overshoots
    the decay for small groups; the slope form is exact.)
    """
    tau_sq = solution_at_zero.tau_sq
    m0 = solution_at_zero.m0
    slope = solution_at_zero.extras["chi_slope"]
    b0 = solution_at_zero.xi_sq * solution_at_zero.upsilon_intra
    u = (1.0 + m0) ** 2
    denom0 = b0 * (tau_sq * (u - 1.0) + 1.0) / u + 1.0 + solution_at_zero.upsilon_inter
    c0 = slope / denom0
    return float(c0.mean())


def approx_bds_chi(solution_at_zero: AsymptoticSolution, chi: float) -> AsymptoticSolution:
    """Hyperbolic chi-decay law: gamma(chi) = gamma(0) / (1 + c0 chi)."""
    c0 = bds_c0(solution_at_zero)
    gamma = solution_at_zero.gamma / (1.0 + c0 * chi)
    return replace(solution_at_zero, gamma=gamma,
                   sum_rate=_sum_rate(gamma, solution_at_zero.n_bar))
