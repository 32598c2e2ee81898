"""Robust transmit and passive beamforming via successive convex steps.

Each nonconvex worst-case constraint is replaced by a tangent quadratic
minorant at the current iterate and certified over the uncertainty balls
with S-procedure / sign-definiteness LMIs; the resulting conic subproblems
are maximized and the loop repeats until the surrogate objective stalls.

All quadratic surrogates share one template: the link value is affine in
the stacked uncertainty, value = s(x) + row(x) @ delta, where s and row
are affine in the real decision vector x (re/im pairs of w or psi).  The
template `_quad_families` produces the (Q0, g0, p0) families for
"worst-case |value|^2 >= rhs(x)"; builders only pick row/s and the balls.

Builders accept a single ChannelSet/UncertaintyModel or a list of them
(one per primary user).  With several users the objective becomes an
epigraph over the per-user surrogate rates; with one, the problems are
identical to the direct single-user construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as dc_replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .conic import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    AffineFamily,
    ConicProblem,
    LogEpigraph,
    LogTerm,
    SocBlock,
    VariableRegistry,
    affine_matrix_family,
    hermitian_lmi,
    s_procedure_lmi,
    sign_definiteness_lmi,
    solve_conic,
)
from .geometry import ChannelSet
from .rates import CSR, PSR, ScenarioConfig, multi_pu_objective, robust_rate_lower_bound, worst_case_secondary_snr, secondary_qos_threshold
from .uncertainty import UncertaintyModel, worst_case_cascaded_amplitude

LN2 = math.log(2.0)

# relative slack when re-checking the secondary QoS outside the solver;
# the constraint binds at optimality so solver-tolerance dips are expected
QOS_RTOL = 1e-6

ChannelsArg = Union[ChannelSet, Sequence[ChannelSet]]
UncertaintyArg = Union[UncertaintyModel, Sequence[UncertaintyModel]]


def _as_list(x, cls):
    if isinstance(x, cls):
        return [x]
    return list(x)


def _snr_normalized(
    chans: list[ChannelSet], uncs: list[UncertaintyModel], scenario: ScenarioConfig,
    *, use_direct: bool = True,
) -> tuple[list[ChannelSet], list[UncertaintyModel], ScenarioConfig, float]:
    """Rescale a subproblem so the strongest participating channel has unit norm.

    Dividing every channel and ball radius by a common factor s0 while
    dividing the noise power by s0^2 leaves all SNR ratios, and with them
    the constraint set, the optimal w / psi, and the rate objective,
    unchanged.  Picking s0 as the largest channel norm puts the amplitude
    quantities at O(1), where the interior-point solver is well conditioned;
    raw watt-scale data (noise 1e-12, pathloss 1e-4) makes it stall.  Stages
    whose constraints only touch the cascaded channel (use_direct=False)
    normalize by the cascade norm alone, since the much stronger direct
    channel would otherwise push the cascade entries back toward zero.  The
    power variables come back in s0^2 units; multiply by the returned scale
    to restore watts.
    """
    def _norm(ch: ChannelSet) -> float:
        nH = float(np.linalg.norm(ch.H_bs))
        return max(float(np.linalg.norm(ch.h_u)), nH) if use_direct else nH

    s0 = max(_norm(ch) for ch in chans)
    if s0 <= 0.0:
        s0 = math.sqrt(scenario.noise_power) or 1.0
    scale = s0 * s0
    chans = [
        dc_replace(ch, h_u=ch.h_u / s0, H_r_h=ch.H_r_h / s0, H_bs=ch.H_bs / s0)
        for ch in chans
    ]
    uncs = [dc_replace(u, xi_bs=u.xi_bs / s0, xi_u=u.xi_u / s0) for u in uncs]
    return chans, uncs, dc_replace(scenario, noise_power=scenario.noise_power / scale), scale


# ---------------------------------------------------------------------------
# phase grid helpers
# ---------------------------------------------------------------------------

def grid_phases(n_levels: int) -> np.ndarray:
    """The discrete phase alphabet e^{j 2 pi i / n_levels}, i = 0..n_levels-1."""
    if n_levels < 1:
        raise ValueError("need at least one phase level")
    return np.exp(2j * np.pi * np.arange(n_levels) / n_levels)


def phases_from_indices(indices: np.ndarray, n_levels: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=int)
    if np.any(indices < 0) or np.any(indices >= n_levels):
        raise ValueError("phase index out of range")
    return np.exp(2j * np.pi * indices / n_levels)


def project_to_grid(psi: np.ndarray, n_levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nearest grid phase per element (ties to the smallest index)."""
    alphabet = grid_phases(n_levels)
    dist = np.abs(psi[:, None] - alphabet[None, :])
    indices = np.argmin(dist, axis=1)
    return indices, alphabet[indices]


# ---------------------------------------------------------------------------
# warm starts
# ---------------------------------------------------------------------------

def matched_filter_init(channels: ChannelsArg, power: float) -> np.ndarray:
    """Full-power matched filter to the (first user's) direct channel."""
    ch = _as_list(channels, ChannelSet)[0]
    h = ch.h_u
    nrm = np.linalg.norm(h)
    if nrm == 0:
        w = np.ones(h.size, dtype=complex) / math.sqrt(h.size)
        return math.sqrt(power) * w
    return math.sqrt(power) * h / nrm


def aligned_phase_init(channels: ChannelsArg, w0: np.ndarray, n_levels: int) -> np.ndarray:
    """Grid phases making each cascaded term add in phase with the direct one."""
    ch = _as_list(channels, ChannelSet)[0]
    direct = np.vdot(ch.h_u, w0)
    through = ch.H_bs @ w0  # (M,)
    target = np.angle(through) - np.angle(direct)
    psi = np.exp(1j * target)
    indices, _ = project_to_grid(psi, n_levels)
    return indices


def random_grid_init(rng: np.random.Generator, n_ris: int, n_levels: int) -> np.ndarray:
    return rng.integers(0, n_levels, size=n_ris)


# ---------------------------------------------------------------------------
# result containers and typed failures
# ---------------------------------------------------------------------------

class SubproblemInfeasible(RuntimeError):
    """A robust subproblem admits no feasible point (QoS floor unattainable)."""

    def __init__(self, stage: str, family: str, diagnostics: Optional[dict] = None):
        super().__init__(f"{stage}: infeasible ({family})")
        self.stage = stage
        self.family = family
        self.diagnostics = diagnostics or {}


@dataclass(eq=False)
class ScaState:
    """Expansion bookkeeping for one surrogate iteration."""

    iteration: int
    expansion: np.ndarray  # w^(n) or psi^(r)
    eps_H_exp: Optional[list[float]]
    trace: list[float] = field(default_factory=list)


@dataclass(eq=False)
class TransmitResult:
    w: np.ndarray
    eps_u: list[float]
    eps_H: list[float]
    objective: float
    trace: list[float]
    true_rates: list[float]
    n_iterations: int
    status: str


@dataclass(eq=False)
class PhaseSelection:
    """Relaxed selectors (n_levels x M) and the recovered grid indices."""

    c: np.ndarray
    indices: np.ndarray

    def binariness(self) -> float:
        """max_m min distance of the element's selector column from {0,1}."""
        return float(np.max(np.min(np.minimum(self.c, 1.0 - self.c), axis=0), initial=0.0))


@dataclass(eq=False)
class PassiveResult:
    psi: np.ndarray
    indices: np.ndarray
    selection: PhaseSelection
    eps_u: list[float]
    eps_H: list[float]
    objective: float
    trace: list[float]
    true_rates: list[float]
    n_iterations: int
    status: str
    polish_evaluations: int = 0


@dataclass(frozen=True)
class ObjectiveReport:
    """Closed-form robust objective and QoS feasibility at a design point."""

    rate: float
    feasible: bool
    per_user_rates: tuple[float, ...]
    per_user_secondary_snr: tuple[float, ...]


def closed_form_objective(
    scenario: ScenarioConfig,
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    w: np.ndarray,
    psi: np.ndarray,
) -> ObjectiveReport:
    """Worst-case rate (min over users) and secondary-QoS check, no solver."""
    chans = _as_list(channels, ChannelSet)
    uncs = _as_list(uncertainty, UncertaintyModel)
    rates, snrs = [], []
    threshold = secondary_qos_threshold(scenario)
    feasible = True
    for ch, unc in zip(chans, uncs):
        rates.append(robust_rate_lower_bound(scenario, ch, w, psi, unc))
        snr = worst_case_secondary_snr(scenario, ch, w, psi, unc)
        snrs.append(snr)
        feasible &= snr >= threshold * (1.0 - QOS_RTOL)
    return ObjectiveReport(
        rate=multi_pu_objective(rates), feasible=feasible,
        per_user_rates=tuple(rates), per_user_secondary_snr=tuple(snrs),
    )


# ---------------------------------------------------------------------------
# surrogate family template
# ---------------------------------------------------------------------------

def _quad_families(
    n_vars: int,
    row_of: Callable[[np.ndarray], np.ndarray],
    s_of: Callable[[np.ndarray], complex],
    row_exp: np.ndarray,
    s_exp: complex,
    rhs_of: Callable[[np.ndarray], float],
) -> dict:
    """Families for: worst-case of the tangent minorant of |s + row @ d|^2 >= rhs.

    The minorant at the expansion (row_exp, s_exp) is, per uncertainty d,
        2 Re{(s_e + row_e d)^H (s + row d)} - |s_e + row_e d|^2,
    quadratic in d with affine-in-x coefficients:
        Q0 = row_e^H row + row^H row_e - row_e^H row_e
        g0 = row^H s_e + row_e^H s - row_e^H s_e
        p0 = 2 Re{s_e^H s} - |s_e|^2 - rhs
    """
    re = np.asarray(row_exp)
    se = complex(s_exp)

    def q0_fn(x):
        r = row_of(x)
        return np.outer(re.conj(), r) + np.outer(r.conj(), re) - np.outer(re.conj(), re)

    def g0_fn(x):
        r = row_of(x)
        return r.conj() * se + re.conj() * s_of(x) - re.conj() * se

    def p0_fn(x):
        return np.asarray(2.0 * np.real(np.conj(se) * s_of(x)) - abs(se) ** 2 - rhs_of(x), dtype=complex)

    def rhs_fn(x):
        return np.asarray(rhs_of(x), dtype=complex)

    return {
        "q0": affine_matrix_family(q0_fn, n_vars),
        "g0": affine_matrix_family(g0_fn, n_vars),
        "p0": affine_matrix_family(p0_fn, n_vars),
        "rhs": affine_matrix_family(rhs_fn, n_vars),
    }


def _ball(dim: int, xi: float) -> tuple[np.ndarray, np.ndarray, float]:
    return np.eye(dim), np.zeros(dim), -float(xi) ** 2


def _sub_ball(dim: int, start: int, size: int, xi: float) -> tuple[np.ndarray, np.ndarray, float]:
    q = np.zeros((dim, dim))
    q[start:start + size, start:start + size] = np.eye(size)
    return q, np.zeros(dim), -float(xi) ** 2


# ---------------------------------------------------------------------------
# PSR transmit subproblem
# ---------------------------------------------------------------------------

def build_psr_transmit_subproblem(
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    scenario: ScenarioConfig,
    psi: np.ndarray,
    w_exp: np.ndarray,
    *,
    power: float,
    eps_H_exp: Optional[Sequence[float]] = None,
) -> ConicProblem:
    """Surrogate transmit step: maximize the robust-SINR lower bound.

    Variables: re/im of w; per user eps_u (worst-case direct power floor),
    eps_H (worst-case cascade power cap), two S-procedure multipliers and
    the sign-definiteness multiplier.  The problem's `meta` dict carries
    variable slices, the surrogate families, and expansion bookkeeping.
    """
    chans = _as_list(channels, ChannelSet)
    uncs = _as_list(uncertainty, UncertaintyModel)
    if scenario.scenario != PSR:
        raise ValueError("scenario must be PSR")
    chans, uncs, scenario, noise_scale = _snr_normalized(chans, uncs, scenario)
    n_pu = len(chans)
    K = chans[0].h_u.size
    sig2 = scenario.noise_power

    if eps_H_exp is None:
        eps_H_exp = [
            worst_case_cascaded_amplitude(ch.H_bs, psi, w_exp, unc.xi_bs, "max") ** 2
            for ch, unc in zip(chans, uncs)
        ]
    else:
        eps_H_exp = [float(v) / noise_scale for v in eps_H_exp]
    eps_H_exp = [float(v) for v in eps_H_exp]

    reg = VariableRegistry()
    sw_re = reg.add("re_w", K)
    sw_im = reg.add("im_w", K)
    pu_vars = []
    for p in range(n_pu):
        tag = f"[{p}]" if n_pu > 1 else ""
        pu_vars.append({
            "eps_u": reg.add(f"eps_u{tag}", lower=0.0).start,
            "eps_H": reg.add(f"eps_H{tag}", lower=0.0).start,
            "om_cascade": reg.add(f"om_cascade{tag}", lower=0.0).start,
            "om_direct": reg.add(f"om_direct{tag}", lower=0.0).start,
            "cap_mult": reg.add(f"cap_mult{tag}", lower=0.0).start,
        })
    if n_pu > 1:
        t_idx = reg.add("t_min").start
        y_idx = [reg.add(f"y[{p}]").start for p in range(n_pu)]
    n = reg.n

    def w_of(x):
        return x[sw_re] + 1j * x[sw_im]

    soc_A = np.zeros((2 * K, n))
    soc_A[:K, sw_re] = np.eye(K)
    soc_A[K:, sw_im] = np.eye(K)
    socs = [SocBlock("transmit-power", A=soc_A, b=np.zeros(2 * K), c=np.zeros(n), d=math.sqrt(power))]

    lmis = []
    families = {}
    linear = np.zeros(n)
    obj_const = 0.0
    logs: list[LogTerm] = []
    epis: list[LogEpigraph] = []
    ineq_rows: list[np.ndarray] = []
    ineq_rhs: list[float] = []

    for p, (ch, unc, pv) in enumerate(zip(chans, uncs, pu_vars)):
        tag = f"[{p}]" if n_pu > 1 else ""
        H, h = ch.H_bs, ch.h_u
        M = H.shape[0]
        psi_c = psi.conj()

        # worst-case secondary QoS: |psi^H (H+D) w|^2 >= gamma sigma^2.
        # The constraint sees D only through the scalar psi^H D w, so the
        # Frobenius ball compresses isometrically onto a K-dim ball acting
        # through ||psi|| w; same certified set, far smaller LMI.
        nrm_psi = float(np.linalg.norm(psi))
        row_exp = nrm_psi * w_exp
        s_exp = psi_c @ H @ w_exp
        fam = _quad_families(
            n, lambda x: nrm_psi * w_of(x), lambda x: psi_c @ H @ w_of(x),
            row_exp, s_exp, lambda x: scenario.gamma_pmin * sig2,
        )
        q1, g1, p1 = _ball(K, uncs[p].xi_bs)
        lmis.append(s_procedure_lmi(fam["q0"], fam["g0"], fam["p0"], q1, g1, p1, pv["om_cascade"], balance=True, name=f"secondary-qos{tag}"))
        families[f"secondary-qos{tag}"] = fam

        # worst-case direct floor: |(h+d)^H w|^2 >= eps_u
        row_exp_d = w_exp.conj()
        s_exp_d = np.conj(np.vdot(h, w_exp))
        i_eu = pv["eps_u"]
        fam = _quad_families(
            n, lambda x: w_of(x).conj(), lambda x: np.conj(np.vdot(h, w_of(x))),
            row_exp_d, s_exp_d, lambda x, i=i_eu: x[i],
        )
        q1, g1, p1 = _ball(K, unc.xi_u)
        lmis.append(s_procedure_lmi(fam["q0"], fam["g0"], fam["p0"], q1, g1, p1, pv["om_direct"], balance=True, name=f"direct-floor{tag}"))
        families[f"direct-floor{tag}"] = fam

        # worst-case cascade cap: eps_H >= max |psi^H (H+D) w|^2 (exact, convex)
        i_eH = pv["eps_H"]

        def B_fn(x, H=H, i=i_eH):
            s = psi_c @ H @ w_of(x)
            return np.array([[x[i], s], [np.conj(s), 1.0]], dtype=complex)

        def U_fn(x):
            return np.column_stack([np.zeros(K), w_of(x)])

        V = np.column_stack([psi, np.zeros(M)])
        lmis.append(sign_definiteness_lmi(
            affine_matrix_family(B_fn, n), affine_matrix_family(U_fn, n), V,
            unc.xi_bs, pv["cap_mult"], name=f"cascade-cap{tag}",
        ))

        # surrogate rate: log2(eps_u + eps_H + s2) - linearized log2(eps_H + s2)
        alpha = 1.0 / (LN2 * (sig2 + eps_H_exp[p]))
        const_p = -math.log2(sig2 + eps_H_exp[p]) + eps_H_exp[p] * alpha
        a = np.zeros(n)
        a[pv["eps_u"]] = 1.0
        a[pv["eps_H"]] = 1.0
        if n_pu == 1:
            logs.append(LogTerm(1.0 / LN2, a, sig2))
            linear[pv["eps_H"]] -= alpha
            obj_const += const_p
        else:
            epis.append(LogEpigraph(y_idx[p], a, sig2))
            # t <= y/ln2 - alpha eps_H + const_p
            row = np.zeros(n)
            row[t_idx] = 1.0
            row[y_idx[p]] = -1.0 / LN2
            row[pv["eps_H"]] = alpha
            ineq_rows.append(row)
            ineq_rhs.append(const_p)

    if n_pu > 1:
        linear[t_idx] = 1.0

    lower, upper = reg.bounds()
    problem = ConicProblem(
        n_vars=n, var_names=reg.names, linear_objective=linear, objective_constant=obj_const,
        log_terms=logs, log_epigraphs=epis,
        ineq_G=np.array(ineq_rows) if ineq_rows else None,
        ineq_h=np.array(ineq_rhs) if ineq_rhs else None,
        soc_blocks=socs, lmi_blocks=lmis, lower=lower, upper=upper,
    )
    problem.meta = {
        "stage": "transmit-psr",
        "w": (sw_re, sw_im),
        "pu_vars": pu_vars,
        "eps_H_exp": eps_H_exp,
        "noise_scale": noise_scale,
        "families": families,
        "infeasibility_hint": "secondary-qos",
    }
    return problem


# ---------------------------------------------------------------------------
# CSR transmit subproblem
# ---------------------------------------------------------------------------

def build_csr_transmit_subproblem(
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    scenario: ScenarioConfig,
    psi: np.ndarray,
    w_exp: np.ndarray,
    *,
    power: float,
) -> ConicProblem:
    """Surrogate transmit step for the commensal mode.

    The stacked direct/cascade uncertainty feeds one two-ball S-procedure
    LMI per combining sign; eps_u / eps_H floor the + and - combination
    powers and enter the exact concave objective (no linearization needed).
    """
    chans = _as_list(channels, ChannelSet)
    uncs = _as_list(uncertainty, UncertaintyModel)
    if scenario.scenario != CSR:
        raise ValueError("scenario must be CSR")
    chans, uncs, scenario, noise_scale = _snr_normalized(chans, uncs, scenario)
    n_pu = len(chans)
    K = chans[0].h_u.size
    sig2 = scenario.noise_power

    reg = VariableRegistry()
    sw_re = reg.add("re_w", K)
    sw_im = reg.add("im_w", K)
    pu_vars = []
    for p in range(n_pu):
        tag = f"[{p}]" if n_pu > 1 else ""
        pu_vars.append({
            "eps_u": reg.add(f"eps_u{tag}", lower=0.0).start,
            "eps_H": reg.add(f"eps_H{tag}", lower=0.0).start,
            "om_cascade": reg.add(f"om_cascade{tag}", lower=0.0).start,
            "om_plus_u": reg.add(f"om_plus_u{tag}", lower=0.0).start,
            "om_plus_bs": reg.add(f"om_plus_bs{tag}", lower=0.0).start,
            "om_minus_u": reg.add(f"om_minus_u{tag}", lower=0.0).start,
            "om_minus_bs": reg.add(f"om_minus_bs{tag}", lower=0.0).start,
        })
    if n_pu > 1:
        t_idx = reg.add("t_min").start
        y_idx = [(reg.add(f"y_plus[{p}]").start, reg.add(f"y_minus[{p}]").start) for p in range(n_pu)]
    n = reg.n

    def w_of(x):
        return x[sw_re] + 1j * x[sw_im]

    soc_A = np.zeros((2 * K, n))
    soc_A[:K, sw_re] = np.eye(K)
    soc_A[K:, sw_im] = np.eye(K)
    socs = [SocBlock("transmit-power", A=soc_A, b=np.zeros(2 * K), c=np.zeros(n), d=math.sqrt(power))]

    lmis = []
    families = {}
    linear = np.zeros(n)
    obj_const = -math.log2(sig2)
    logs: list[LogTerm] = []
    epis: list[LogEpigraph] = []
    ineq_rows: list[np.ndarray] = []
    ineq_rhs: list[float] = []

    for p, (ch, unc, pv) in enumerate(zip(chans, uncs, pu_vars)):
        tag = f"[{p}]" if n_pu > 1 else ""
        H, h = ch.H_bs, ch.h_u
        M = H.shape[0]
        psi_c = psi.conj()

        # secondary QoS, identical structure to the parasitic mode but with
        # the combining-gain-scaled threshold; same ball compression
        nrm_psi = float(np.linalg.norm(psi))
        row_exp = nrm_psi * w_exp
        s_exp = psi_c @ H @ w_exp
        fam = _quad_families(
            n, lambda x: nrm_psi * w_of(x), lambda x: psi_c @ H @ w_of(x),
            row_exp, s_exp, lambda x: scenario.gamma_cmin * sig2 / scenario.symbol_span,
        )
        q1, g1, p1 = _ball(K, unc.xi_bs)
        lmis.append(s_procedure_lmi(fam["q0"], fam["g0"], fam["p0"], q1, g1, p1, pv["om_cascade"], balance=True, name=f"secondary-qos{tag}"))
        families[f"secondary-qos{tag}"] = fam

        # per-sign combined floors over the stacked ball pair; the cascade
        # ball again compressed onto its K-dim image through sign * psi
        dim = 2 * K
        for sign, eps_key, mu, mb, label in (
            (+1.0, "eps_u", pv["om_plus_u"], pv["om_plus_bs"], "combined-plus"),
            (-1.0, "eps_H", pv["om_minus_u"], pv["om_minus_bs"], "combined-minus"),
        ):
            def u_of(x, sign=sign):
                w = w_of(x)
                return np.concatenate([w, sign * nrm_psi * w])

            def s_of(x, sign=sign, h=h, H=H):
                w = w_of(x)
                return np.conj(np.vdot(h, w) + sign * (psi_c @ H @ w))

            u_exp = np.concatenate([w_exp, sign * nrm_psi * w_exp])
            s_exp_c = np.conj(np.vdot(h, w_exp) + sign * (psi_c @ H @ w_exp))
            i_eps = pv[eps_key]
            fam = _quad_families(
                n, lambda x, u_of=u_of: u_of(x).conj(), s_of,
                u_exp.conj(), s_exp_c, lambda x, i=i_eps: x[i],
            )
            qa, ga, pa = _sub_ball(dim, 0, K, unc.xi_u)
            qb, gb, pb = _sub_ball(dim, K, K, unc.xi_bs)
            lmis.append(s_procedure_lmi(
                fam["q0"], fam["g0"], fam["p0"], qa, ga, pa, mu,
                extra_balls=[(qb, gb, pb, mb)], balance=True, name=f"{label}{tag}",
            ))
            families[f"{label}{tag}"] = fam

        # exact concave objective: half log per combining sign
        a_u = np.zeros(n)
        a_u[pv["eps_u"]] = 1.0
        a_H = np.zeros(n)
        a_H[pv["eps_H"]] = 1.0
        if n_pu == 1:
            logs.append(LogTerm(0.5 / LN2, a_u, sig2))
            logs.append(LogTerm(0.5 / LN2, a_H, sig2))
        else:
            epis.append(LogEpigraph(y_idx[p][0], a_u, sig2))
            epis.append(LogEpigraph(y_idx[p][1], a_H, sig2))
            row = np.zeros(n)
            row[t_idx] = 1.0
            row[y_idx[p][0]] = -0.5 / LN2
            row[y_idx[p][1]] = -0.5 / LN2
            ineq_rows.append(row)
            ineq_rhs.append(-math.log2(sig2))

    if n_pu > 1:
        linear[t_idx] = 1.0
        obj_const = 0.0

    lower, upper = reg.bounds()
    problem = ConicProblem(
        n_vars=n, var_names=reg.names, linear_objective=linear, objective_constant=obj_const,
        log_terms=logs, log_epigraphs=epis,
        ineq_G=np.array(ineq_rows) if ineq_rows else None,
        ineq_h=np.array(ineq_rhs) if ineq_rhs else None,
        soc_blocks=socs, lmi_blocks=lmis, lower=lower, upper=upper,
    )
    problem.meta = {
        "stage": "transmit-csr",
        "w": (sw_re, sw_im),
        "pu_vars": pu_vars,
        "noise_scale": noise_scale,
        "families": families,
        "infeasibility_hint": "secondary-qos",
    }
    return problem


# ---------------------------------------------------------------------------
# passive subproblems (shared selector scaffolding)
# ---------------------------------------------------------------------------

def _selector_scaffold(reg: VariableRegistry, M: int, n_levels: int):
    """Register psi re/im and the per-element selector block."""
    sp_re = reg.add("re_psi", M)
    sp_im = reg.add("im_psi", M)
    sc = reg.add("c", n_levels * M, lower=0.0, upper=1.0)
    return sp_re, sp_im, sc


def _selector_constraints(n: int, sp_re, sp_im, sc, M: int, n_levels: int):
    """psi_m = sum_i c[i,m] f_i (equalities) and sum_i c[i,m] <= 1 per element."""
    alphabet = grid_phases(n_levels)
    eq_rows, eq_rhs = [], []
    ineq_rows, ineq_rhs = [], []
    for m in range(M):
        row_re = np.zeros(n)
        row_im = np.zeros(n)
        row_re[sp_re.start + m] = 1.0
        row_im[sp_im.start + m] = 1.0
        row_sum = np.zeros(n)
        for i in range(n_levels):
            j = sc.start + m * n_levels + i
            row_re[j] = -alphabet[i].real
            row_im[j] = -alphabet[i].imag
            row_sum[j] = 1.0
        eq_rows += [row_re, row_im]
        eq_rhs += [0.0, 0.0]
        ineq_rows.append(row_sum)
        ineq_rhs.append(1.0)
    return eq_rows, eq_rhs, ineq_rows, ineq_rhs


def _selector_matrix(x: np.ndarray, sc, M: int, n_levels: int) -> np.ndarray:
    """Selector values as an (n_levels, M) matrix."""
    return x[sc].reshape(M, n_levels).T.copy()


def _selector_penalty(n: int, sc, M: int, n_levels: int, c_exp: np.ndarray, weight: float):
    """Linear surrogate of weight * sum(c^2 - c): pushes selectors to {0,1}."""
    linear = np.zeros(n)
    const = 0.0
    for m in range(M):
        for i in range(n_levels):
            j = sc.start + m * n_levels + i
            ce = float(c_exp[i, m])
            linear[j] += weight * (2.0 * ce - 1.0)
            const += -weight * ce * ce
    return linear, const


def one_hot_selection(indices: np.ndarray, n_levels: int) -> np.ndarray:
    M = indices.size
    c = np.zeros((n_levels, M))
    c[np.asarray(indices, int), np.arange(M)] = 1.0
    return c


def build_psr_passive_subproblem(
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    scenario: ScenarioConfig,
    w_star: np.ndarray,
    psi_exp: np.ndarray,
    eps_u_star: Union[float, Sequence[float]],
    *,
    n_levels: int,
    c_exp: Optional[np.ndarray] = None,
    penalty: float = 25.0,
    eps_H_exp: Optional[Sequence[float]] = None,
) -> ConicProblem:
    """Passive step: reshape the relaxed phases to cut worst-case interference.

    eps_u_star is carried fixed from the transmit step; the stage minimizes
    the certified cascade cap eps_H subject to the robust secondary QoS,
    with the selector penalty steering c toward a binary grid choice.
    """
    chans = _as_list(channels, ChannelSet)
    uncs = _as_list(uncertainty, UncertaintyModel)
    if scenario.scenario != PSR:
        raise ValueError("scenario must be PSR")
    # the direct channel enters this stage only through eps_u_star, so the
    # cascade norm is the right conditioning scale
    chans, uncs, scenario, noise_scale = _snr_normalized(chans, uncs, scenario, use_direct=False)
    n_pu = len(chans)
    M, K = chans[0].H_bs.shape
    sig2 = scenario.noise_power
    eps_u_star = [float(v) / noise_scale for v in np.atleast_1d(np.asarray(eps_u_star, float))]
    if len(eps_u_star) != n_pu:
        raise ValueError("need one eps_u_star per user")

    if eps_H_exp is None:
        eps_H_exp = [
            worst_case_cascaded_amplitude(ch.H_bs, psi_exp, w_star, unc.xi_bs, "max") ** 2
            for ch, unc in zip(chans, uncs)
        ]
    else:
        eps_H_exp = [float(v) / noise_scale for v in eps_H_exp]
    eps_H_exp = [float(v) for v in eps_H_exp]
    if c_exp is None:
        idx, _ = project_to_grid(psi_exp, n_levels)
        c_exp = one_hot_selection(idx, n_levels)

    reg = VariableRegistry()
    sp_re, sp_im, sc = _selector_scaffold(reg, M, n_levels)
    pu_vars = []
    for p in range(n_pu):
        tag = f"[{p}]" if n_pu > 1 else ""
        pu_vars.append({
            "eps_H": reg.add(f"eps_H{tag}", lower=0.0).start,
            "om_cascade": reg.add(f"om_cascade{tag}", lower=0.0).start,
            "cap_mult": reg.add(f"cap_mult{tag}", lower=0.0).start,
        })
    if n_pu > 1:
        t_idx = reg.add("t_min").start
        y_idx = [reg.add(f"y[{p}]").start for p in range(n_pu)]
    n = reg.n

    def psi_of(x):
        return x[sp_re] + 1j * x[sp_im]

    eq_rows, eq_rhs, ineq_rows, ineq_rhs = _selector_constraints(n, sp_re, sp_im, sc, M, n_levels)

    lmis = []
    families = {}
    linear = np.zeros(n)
    obj_const = 0.0
    logs: list[LogTerm] = []
    epis: list[LogEpigraph] = []

    for p, (ch, unc, pv) in enumerate(zip(chans, uncs, pu_vars)):
        tag = f"[{p}]" if n_pu > 1 else ""
        H = ch.H_bs
        Hw = H @ w_star  # (M,)

        # robust secondary QoS with the phases as decisions.  With w held
        # fixed the cascade error acts only through D w, so the Frobenius
        # ball compresses isometrically onto an M-dim ball scaled by ||w||.
        nrm_w = float(np.linalg.norm(w_star))
        row_exp = nrm_w * psi_exp.conj()
        s_exp = psi_exp.conj() @ Hw
        fam = _quad_families(
            n, lambda x: nrm_w * psi_of(x).conj(), lambda x: psi_of(x).conj() @ Hw,
            row_exp, s_exp, lambda x: scenario.gamma_pmin * sig2,
        )
        q1, g1, p1 = _ball(M, unc.xi_bs)
        lmis.append(s_procedure_lmi(fam["q0"], fam["g0"], fam["p0"], q1, g1, p1, pv["om_cascade"], balance=True, name=f"secondary-qos{tag}"))
        families[f"secondary-qos{tag}"] = fam

        # reduced cascade cap (nominal Schur block with the Gram offset)
        i_eH, i_b = pv["eps_H"], pv["cap_mult"]

        def B_fn(x, i=i_eH, b=i_b, Hw=Hw):
            s = psi_of(x).conj() @ Hw
            return np.array([[x[i] - M * x[b], s], [np.conj(s), 1.0]], dtype=complex)

        lmis.append(hermitian_lmi(affine_matrix_family(B_fn, n), name=f"cascade-cap{tag}"))

        alpha = 1.0 / (LN2 * (sig2 + eps_H_exp[p]))
        const_p = -math.log2(sig2 + eps_H_exp[p]) + eps_H_exp[p] * alpha
        a = np.zeros(n)
        a[pv["eps_H"]] = 1.0
        if n_pu == 1:
            logs.append(LogTerm(1.0 / LN2, a, sig2 + eps_u_star[p]))
            linear[pv["eps_H"]] -= alpha
            obj_const += const_p
        else:
            epis.append(LogEpigraph(y_idx[p], a, sig2 + eps_u_star[p]))
            row = np.zeros(n)
            row[t_idx] = 1.0
            row[y_idx[p]] = -1.0 / LN2
            row[pv["eps_H"]] = alpha
            ineq_rows.append(row)
            ineq_rhs.append(const_p)

    if n_pu > 1:
        linear[t_idx] = 1.0

    pen_lin, pen_const = _selector_penalty(n, sc, M, n_levels, c_exp, penalty)
    linear += pen_lin
    obj_const += pen_const

    lower, upper = reg.bounds()
    problem = ConicProblem(
        n_vars=n, var_names=reg.names, linear_objective=linear, objective_constant=obj_const,
        log_terms=logs, log_epigraphs=epis,
        eq_A=np.array(eq_rows), eq_b=np.array(eq_rhs),
        ineq_G=np.array(ineq_rows), ineq_h=np.array(ineq_rhs),
        lmi_blocks=lmis, lower=lower, upper=upper,
    )
    problem.meta = {
        "stage": "passive-psr",
        "psi": (sp_re, sp_im),
        "c": sc,
        "pu_vars": pu_vars,
        "eps_H_exp": eps_H_exp,
        "eps_u_star": eps_u_star,
        "noise_scale": noise_scale,
        "families": families,
        "n_levels": n_levels,
        "infeasibility_hint": "secondary-qos",
    }
    return problem


def build_csr_passive_subproblem(
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    scenario: ScenarioConfig,
    w_star: np.ndarray,
    psi_exp: np.ndarray,
    *,
    n_levels: int,
    c_exp: Optional[np.ndarray] = None,
    penalty: float = 25.0,
) -> ConicProblem:
    """Passive step for the commensal mode: both combining floors re-optimized."""
    chans = _as_list(channels, ChannelSet)
    uncs = _as_list(uncertainty, UncertaintyModel)
    if scenario.scenario != CSR:
        raise ValueError("scenario must be CSR")
    chans, uncs, scenario, noise_scale = _snr_normalized(chans, uncs, scenario)
    n_pu = len(chans)
    M, K = chans[0].H_bs.shape
    sig2 = scenario.noise_power
    if c_exp is None:
        idx, _ = project_to_grid(psi_exp, n_levels)
        c_exp = one_hot_selection(idx, n_levels)

    reg = VariableRegistry()
    sp_re, sp_im, sc = _selector_scaffold(reg, M, n_levels)
    pu_vars = []
    for p in range(n_pu):
        tag = f"[{p}]" if n_pu > 1 else ""
        pu_vars.append({
            "eps_u": reg.add(f"eps_u{tag}", lower=0.0).start,
            "eps_H": reg.add(f"eps_H{tag}", lower=0.0).start,
            "om_cascade": reg.add(f"om_cascade{tag}", lower=0.0).start,
            "om_plus_u": reg.add(f"om_plus_u{tag}", lower=0.0).start,
            "om_plus_bs": reg.add(f"om_plus_bs{tag}", lower=0.0).start,
            "om_minus_u": reg.add(f"om_minus_u{tag}", lower=0.0).start,
            "om_minus_bs": reg.add(f"om_minus_bs{tag}", lower=0.0).start,
        })
    if n_pu > 1:
        t_idx = reg.add("t_min").start
        y_idx = [(reg.add(f"y_plus[{p}]").start, reg.add(f"y_minus[{p}]").start) for p in range(n_pu)]
    n = reg.n

    def psi_of(x):
        return x[sp_re] + 1j * x[sp_im]

    eq_rows, eq_rhs, ineq_rows, ineq_rhs = _selector_constraints(n, sp_re, sp_im, sc, M, n_levels)

    lmis = []
    families = {}
    linear = np.zeros(n)
    obj_const = -math.log2(sig2)
    logs: list[LogTerm] = []
    epis: list[LogEpigraph] = []

    for p, (ch, unc, pv) in enumerate(zip(chans, uncs, pu_vars)):
        tag = f"[{p}]" if n_pu > 1 else ""
        H, h = ch.H_bs, ch.h_u
        Hw = H @ w_star
        # cascade ball compressed through the held w; direct ball through
        # the scalar (h+d)^H w it is observed by
        nrm_w = float(np.linalg.norm(w_star))
        dim = 1 + M

        row_exp = nrm_w * psi_exp.conj()
        s_exp = psi_exp.conj() @ Hw
        fam = _quad_families(
            n, lambda x: nrm_w * psi_of(x).conj(), lambda x: psi_of(x).conj() @ Hw,
            row_exp, s_exp, lambda x: scenario.gamma_cmin * sig2 / scenario.symbol_span,
        )
        q1, g1, p1 = _ball(M, unc.xi_bs)
        lmis.append(s_procedure_lmi(fam["q0"], fam["g0"], fam["p0"], q1, g1, p1, pv["om_cascade"], balance=True, name=f"secondary-qos{tag}"))
        families[f"secondary-qos{tag}"] = fam

        base = np.vdot(h, w_star)
        for sign, eps_key, mu, mb, label in (
            (+1.0, "eps_u", pv["om_plus_u"], pv["om_plus_bs"], "combined-plus"),
            (-1.0, "eps_H", pv["om_minus_u"], pv["om_minus_bs"], "combined-minus"),
        ):
            def u_of(x, sign=sign):
                return np.concatenate([[nrm_w], sign * nrm_w * psi_of(x).conj()])

            def s_of(x, sign=sign, base=base, Hw=Hw):
                return np.conj(base + sign * (psi_of(x).conj() @ Hw))

            u_exp = np.concatenate([[nrm_w], sign * nrm_w * psi_exp.conj()])
            s_exp_c = np.conj(base + sign * (psi_exp.conj() @ Hw))
            i_eps = pv[eps_key]
            fam = _quad_families(
                n, lambda x, u_of=u_of: u_of(x).conj(), s_of,
                u_exp.conj(), s_exp_c, lambda x, i=i_eps: x[i],
            )
            qa, ga, pa = _sub_ball(dim, 0, 1, unc.xi_u)
            qb, gb, pb = _sub_ball(dim, 1, M, unc.xi_bs)
            lmis.append(s_procedure_lmi(
                fam["q0"], fam["g0"], fam["p0"], qa, ga, pa, mu,
                extra_balls=[(qb, gb, pb, mb)], balance=True, name=f"{label}{tag}",
            ))
            families[f"{label}{tag}"] = fam

        a_u = np.zeros(n)
        a_u[pv["eps_u"]] = 1.0
        a_H = np.zeros(n)
        a_H[pv["eps_H"]] = 1.0
        if n_pu == 1:
            logs.append(LogTerm(0.5 / LN2, a_u, sig2))
            logs.append(LogTerm(0.5 / LN2, a_H, sig2))
        else:
            epis.append(LogEpigraph(y_idx[p][0], a_u, sig2))
            epis.append(LogEpigraph(y_idx[p][1], a_H, sig2))
            row = np.zeros(n)
            row[t_idx] = 1.0
            row[y_idx[p][0]] = -0.5 / LN2
            row[y_idx[p][1]] = -0.5 / LN2
            ineq_rows.append(row)
            ineq_rhs.append(-math.log2(sig2))

    if n_pu > 1:
        linear[t_idx] = 1.0
        obj_const = 0.0

    pen_lin, pen_const = _selector_penalty(n, sc, M, n_levels, c_exp, penalty)
    linear += pen_lin
    obj_const += pen_const

    lower, upper = reg.bounds()
    problem = ConicProblem(
        n_vars=n, var_names=reg.names, linear_objective=linear, objective_constant=obj_const,
        log_terms=logs, log_epigraphs=epis,
        eq_A=np.array(eq_rows), eq_b=np.array(eq_rhs),
        ineq_G=np.array(ineq_rows), ineq_h=np.array(ineq_rhs),
        lmi_blocks=lmis, lower=lower, upper=upper,
    )
    problem.meta = {
        "stage": "passive-csr",
        "psi": (sp_re, sp_im),
        "c": sc,
        "pu_vars": pu_vars,
        "noise_scale": noise_scale,
        "families": families,
        "n_levels": n_levels,
        "infeasibility_hint": "secondary-qos",
    }
    return problem


def multi_pu_wrap(builder: Callable[..., ConicProblem], channels: Sequence[ChannelSet], uncertainties: Sequence[UncertaintyModel], *args, **kwargs) -> ConicProblem:
    """Duplicate a builder's robust constraints per user; epigraph objective.

    With one user this is exactly the single-user problem; with several,
    the builder emits per-user constraint copies and maximizes the minimum
    of the per-user rate surrogates.
    """
    return builder(list(channels), list(uncertainties), *args, **kwargs)


# ---------------------------------------------------------------------------
# SCA loops
# ---------------------------------------------------------------------------

def _extract_w(problem: ConicProblem, x: np.ndarray) -> np.ndarray:
    sw_re, sw_im = problem.meta["w"]
    return x[sw_re] + 1j * x[sw_im]


def _extract_eps(problem: ConicProblem, x: np.ndarray, key: str) -> list[float]:
    return [float(x[pv[key]]) for pv in problem.meta["pu_vars"] if key in pv]


def _sca_transmit(
    build: Callable[..., ConicProblem],
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    scenario: ScenarioConfig,
    psi: np.ndarray,
    w0: np.ndarray,
    *,
    power: float,
    tol: float = 1e-3,
    max_iter: int = 30,
    stage: str = "transmit",
) -> TransmitResult:
    if np.linalg.norm(w0) ** 2 > power * (1 + 1e-9):
        raise ValueError("initial beamformer violates the power budget")
    w_n = np.asarray(w0, complex)
    trace: list[float] = []
    true_rates: list[float] = []
    eps_u: list[float] = []
    eps_H: list[float] = []
    status = "max-iterations"
    prev_obj: Optional[float] = None
    for it in range(max_iter):
        problem = build(channels, uncertainty, scenario, psi, w_n, power=power)
        sol = solve_conic(problem)
        if sol.status == INFEASIBLE:
            if it == 0:
                raise SubproblemInfeasible(stage, problem.meta["infeasibility_hint"], sol.diagnostics)
            status = "numerical-stop"
            break
        if sol.status != OPTIMAL:
            status = "numerical-stop"
            break
        w_n = _extract_w(problem, sol.x)
        scale = problem.meta.get("noise_scale", 1.0)
        eps_u = [v * scale for v in _extract_eps(problem, sol.x, "eps_u")]
        eps_H = [v * scale for v in _extract_eps(problem, sol.x, "eps_H")]
        trace.append(float(sol.objective))
        true_rates.append(closed_form_objective(scenario, channels, uncertainty, w_n, psi).rate)
        if prev_obj is not None and abs(trace[-1] - prev_obj) <= tol * max(abs(prev_obj), 1e-9):
            status = "converged"
            break
        prev_obj = trace[-1]
    if not trace:
        # the very first solve failed numerically (infeasibility raises above);
        # keep the incoming beamformer so the caller's guard sees a no-op
        rep = closed_form_objective(scenario, channels, uncertainty, w_n, psi)
        return TransmitResult(
            w=w_n, eps_u=[], eps_H=[], objective=rep.rate, trace=[],
            true_rates=[rep.rate], n_iterations=0, status="numerical-stop",
        )
    return TransmitResult(
        w=w_n, eps_u=eps_u, eps_H=eps_H, objective=trace[-1], trace=trace,
        true_rates=true_rates, n_iterations=len(trace), status=status,
    )


def sca_transmit_psr(channels, uncertainty, scenario, psi, w0, *, power, tol=1e-3, max_iter=30) -> TransmitResult:
    """Transmit surrogate iteration for the parasitic mode."""
    return _sca_transmit(build_psr_transmit_subproblem, channels, uncertainty, scenario, psi, w0,
                         power=power, tol=tol, max_iter=max_iter, stage="transmit-psr")


def sca_transmit_csr(channels, uncertainty, scenario, psi, w0, *, power, tol=1e-3, max_iter=30) -> TransmitResult:
    """Transmit surrogate iteration for the commensal mode."""
    return _sca_transmit(build_csr_transmit_subproblem, channels, uncertainty, scenario, psi, w0,
                         power=power, tol=tol, max_iter=max_iter, stage="transmit-csr")


def _coordinate_polish(
    scenario: ScenarioConfig,
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    w: np.ndarray,
    indices: np.ndarray,
    n_levels: int,
) -> tuple[np.ndarray, ObjectiveReport, int]:
    """One greedy pass over elements x levels on the true robust objective.

    Feasible candidates (worst-case secondary QoS met) are preferred; among
    them the highest robust rate wins.  At most n_levels * M evaluations.
    For a single element this is exhaustive grid enumeration.
    """
    indices = np.asarray(indices, int).copy()
    alphabet = grid_phases(n_levels)
    evals = 0

    def score(idx):
        nonlocal evals
        evals += 1
        rep = closed_form_objective(scenario, channels, uncertainty, w, alphabet[idx])
        return rep

    best_rep = score(indices)
    for m in range(indices.size):
        best_i = indices[m]
        for i in range(n_levels):
            if i == best_i:
                continue
            cand = indices.copy()
            cand[m] = i
            rep = score(cand)
            better = (rep.feasible and not best_rep.feasible) or (
                rep.feasible == best_rep.feasible and rep.rate > best_rep.rate
            )
            if better:
                best_rep = rep
                best_i = i
        indices[m] = best_i
    return indices, best_rep, evals


def _sca_passive(
    build: Callable[..., ConicProblem],
    channels: ChannelsArg,
    uncertainty: UncertaintyArg,
    scenario: ScenarioConfig,
    w_star: np.ndarray,
    indices0: np.ndarray,
    *,
    n_levels: int,
    penalty: float = 25.0,
    tol: float = 1e-3,
    max_iter: int = 30,
    stage: str = "passive",
    build_kwargs: Optional[dict] = None,
) -> PassiveResult:
    build_kwargs = dict(build_kwargs or {})
    psi_r = phases_from_indices(indices0, n_levels)
    c_exp = one_hot_selection(indices0, n_levels)
    trace: list[float] = []
    true_rates: list[float] = []
    eps_u: list[float] = []
    eps_H: list[float] = []
    c_mat = c_exp
    status = "max-iterations"
    prev_obj: Optional[float] = None
    for it in range(max_iter):
        problem = build(channels, uncertainty, scenario, w_star, psi_r,
                        n_levels=n_levels, c_exp=c_exp, penalty=penalty, **build_kwargs)
        sol = solve_conic(problem)
        if sol.status == INFEASIBLE:
            if it == 0:
                raise SubproblemInfeasible(stage, problem.meta["infeasibility_hint"], sol.diagnostics)
            status = "numerical-stop"
            break
        if sol.status != OPTIMAL:
            status = "numerical-stop"
            break
        sp_re, sp_im = problem.meta["psi"]
        psi_r = sol.x[sp_re] + 1j * sol.x[sp_im]
        c_mat = _selector_matrix(sol.x, problem.meta["c"], psi_r.size, n_levels)
        c_exp = c_mat
        scale = problem.meta.get("noise_scale", 1.0)
        eps_u = [v * scale for v in
                 _extract_eps(problem, sol.x, "eps_u") or problem.meta.get("eps_u_star", [])]
        eps_H = [v * scale for v in _extract_eps(problem, sol.x, "eps_H")]
        trace.append(float(sol.objective))
        true_rates.append(closed_form_objective(scenario, channels, uncertainty, w_star, psi_r).rate)
        if prev_obj is not None and abs(trace[-1] - prev_obj) <= tol * max(abs(prev_obj), 1e-9):
            status = "converged"
            break
        prev_obj = trace[-1]

    # grid recovery: per element, the dominant selector wins (ties -> lowest);
    # with an empty trace (first solve failed numerically) this polishes the
    # incoming grid point, which is still solver-free progress
    indices = np.argmax(c_mat, axis=0).astype(int)
    indices, rep, evals = _coordinate_polish(scenario, channels, uncertainty, w_star, indices, n_levels)
    psi_grid = phases_from_indices(indices, n_levels)
    if not rep.feasible:
        status = "qos-infeasible-on-grid"
    return PassiveResult(
        psi=psi_grid, indices=indices, selection=PhaseSelection(c=c_mat, indices=indices),
        eps_u=list(eps_u), eps_H=list(eps_H), objective=trace[-1] if trace else rep.rate,
        trace=trace, true_rates=true_rates, n_iterations=len(trace), status=status,
        polish_evaluations=evals,
    )


def sca_passive_psr(
    channels, uncertainty, scenario, w_star, indices0, eps_u_star,
    *, n_levels, penalty=25.0, tol=1e-3, max_iter=30,
) -> PassiveResult:
    """Passive surrogate iteration for the parasitic mode, grid-recovered."""
    return _sca_passive(
        build_psr_passive_subproblem, channels, uncertainty, scenario, w_star, indices0,
        n_levels=n_levels, penalty=penalty, tol=tol, max_iter=max_iter, stage="passive-psr",
        build_kwargs={"eps_u_star": eps_u_star},
    )


def sca_passive_csr(
    channels, uncertainty, scenario, w_star, indices0,
    *, n_levels, penalty=25.0, tol=1e-3, max_iter=30,
) -> PassiveResult:
    """Passive surrogate iteration for the commensal mode, grid-recovered."""
    return _sca_passive(
        build_csr_passive_subproblem, channels, uncertainty, scenario, w_star, indices0,
        n_levels=n_levels, penalty=penalty, tol=tol, max_iter=max_iter, stage="passive-csr",
    )
