"""Alternating optimization driver, benchmark schemes, sweeps, and file I/O.

One run alternates {transmit step -> passive step -> placement search}
until the worst-case rate stalls.  Every stage output is re-scored with
the closed-form robust objective and only accepted if it does not regress
and keeps the secondary QoS, so the per-iteration rate trace is
nondecreasing by construction; the swarm contributes its monotone
best-ever placement.

Schemes: proposed-sapso (full), proposed-pso (greedy acceptance in the
placement search), fpa (placement frozen at the initial grid), random-psi
(one random phase draw, passive stage skipped).
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import beamforming as bf
from .config import RunConfig, linear_to_db
from .geometry import ChannelSet, SystemGeometry, build_channels, draw_geometry, grid_placement
from .rates import CSR, PSR, Design, ScenarioConfig, nominal_rate, secondary_snr, secondary_qos_threshold
from .swarm import sa_pso
from .uncertainty import UncertaintyModel, sample_perturbation, worst_case_direct_amplitude

CSV_HEADER = "scenario,scheme,seed,sweep_name,sweep_value,ao_iters,rate_bpshz,secondary_snr_db,feasible,runtime_s"


class StageInfeasibleError(RuntimeError):
    """A subproblem was infeasible; carries the AO iteration and stage."""

    def __init__(self, ao_iteration: int, stage: str, cause: Exception):
        super().__init__(f"AO iteration {ao_iteration}, stage {stage}: {cause}")
        self.ao_iteration = ao_iteration
        self.stage = stage
        self.cause = cause


@dataclass(eq=False)
class RunResult:
    """Everything one optimization run produced."""

    scenario: str
    scheme: str
    seed: int
    ao_rates: list[float]
    design: Design
    rate: float
    secondary_snr_db: float
    feasible: bool
    status: str
    transmit_traces: list[list[float]] = field(default_factory=list)
    passive_traces: list[list[float]] = field(default_factory=list)
    swarm_traces: list[list[float]] = field(default_factory=list)
    stage_runtimes: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    stage_notes: list[str] = field(default_factory=list)
    verification: Optional[dict] = None
    sweep_name: str = ""
    sweep_value: Optional[float] = None
    config: Optional[RunConfig] = None

    @property
    def ao_iters(self) -> int:
        return max(len(self.ao_rates) - 1, 0)


def realize_geometry(config: RunConfig, seed: int) -> tuple[SystemGeometry, np.random.Generator]:
    """Deterministic channel realization plus the optimizer's RNG stream.

    Geometry and optimizer randomness come from separate seed-sequence
    children so every scheme sees the same channels for a given seed.
    """
    geom_rng, opt_rng = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2)]
    users = [np.asarray(p, float) for p in config.user_positions[: config.n_users]]
    geom = draw_geometry(
        geom_rng, wavelength=config.wavelength, region=config.region,
        region_center=np.asarray(config.region_center, float),
        ris_position=np.asarray(config.ris_position, float),
        user_positions=users, n_ris=config.n_ris, n_paths=config.n_paths,
        gain=config.gain, exponent=config.pathloss_exponent,
    )
    return geom, opt_rng


def _rebuild(geom: SystemGeometry, positions: np.ndarray, config: RunConfig):
    channels = [build_channels(geom, positions, user=u) for u in range(geom.n_users)]
    uncs = [UncertaintyModel.from_channels(config.g_bs, config.g_u, ch.H_bs, ch.h_u) for ch in channels]
    return channels, uncs


def _cascade_matched(channels: Sequence[ChannelSet], psi: np.ndarray, power: float) -> np.ndarray:
    v = np.zeros(channels[0].h_u.size, dtype=complex)
    for ch in channels:
        g = ch.H_bs.conj().T @ psi
        n = np.linalg.norm(g)
        if n > 0:
            v += g / n
    n = np.linalg.norm(v)
    if n == 0:
        return math.sqrt(power) * np.ones(v.size) / math.sqrt(v.size)
    return math.sqrt(power) * v / n


def _repair_initial_beamformer(
    channels, uncs, scenario: ScenarioConfig, w0: np.ndarray, psi: np.ndarray, power: float
) -> np.ndarray:
    """Blend the matched filter toward the cascade until the QoS holds."""
    if bf.closed_form_objective(scenario, channels, uncs, w0, psi).feasible:
        return w0
    w_cas = _cascade_matched(channels, psi, power)
    for beta in np.linspace(0.1, 1.0, 10):
        w = (1.0 - beta) * w0 + beta * w_cas
        n = np.linalg.norm(w)
        if n == 0:
            continue
        w = math.sqrt(power) * w / n
        if bf.closed_form_objective(scenario, channels, uncs, w, psi).feasible:
            return w
    raise bf.SubproblemInfeasible("initialization", "secondary-qos")


def _initial_phases(channels, scenario: ScenarioConfig, w0: np.ndarray, n_levels: int,
                    rng: np.random.Generator, scheme: str) -> np.ndarray:
    if scheme == "random-psi":
        return bf.random_grid_init(rng, channels[0].H_bs.shape[0], n_levels)
    if scenario.scenario == CSR:
        return bf.aligned_phase_init(channels[0], w0, n_levels)
    return bf.random_grid_init(rng, channels[0].H_bs.shape[0], n_levels)


def alternating_optimize(
    config: RunConfig,
    geometry: SystemGeometry,
    scheme: Optional[str] = None,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0,
) -> RunResult:
    """Run the full alternating loop for one channel realization."""
    scheme = scheme or config.scheme
    if rng is None:
        _, rng = realize_geometry(config, seed)
    scenario = config.scenario_config()
    power = config.power

    t_start = time.perf_counter()
    runtimes = {"transmit": 0.0, "passive": 0.0, "positions": 0.0}
    notes: list[str] = []

    positions = grid_placement(config.region, config.n_antennas, config.min_spacing)
    channels, uncs = _rebuild(geometry, positions, config)

    w = bf.matched_filter_init(channels, power)
    psi_idx = _initial_phases(channels, scenario, w, config.n_levels, rng, scheme)
    psi = bf.phases_from_indices(psi_idx, config.n_levels)
    w = _repair_initial_beamformer(channels, uncs, scenario, w, psi, power)
    if scheme == "random-psi":
        notes.append(f"random-psi draw: {psi_idx.tolist()}")

    report = bf.closed_form_objective(scenario, channels, uncs, w, psi)
    ao_rates = [report.rate]
    transmit_traces: list[list[float]] = []
    passive_traces: list[list[float]] = []
    swarm_traces: list[list[float]] = []
    status = "max-iterations"

    for it in range(config.ao_max_iters):
        # --- transmit step ---
        t0 = time.perf_counter()
        try:
            if scenario.scenario == PSR:
                tres = bf.sca_transmit_psr(channels, uncs, scenario, psi, w, power=power,
                                           tol=config.sca_tol, max_iter=config.sca_max_iters)
            else:
                tres = bf.sca_transmit_csr(channels, uncs, scenario, psi, w, power=power,
                                           tol=config.sca_tol, max_iter=config.sca_max_iters)
        except bf.SubproblemInfeasible as exc:
            raise StageInfeasibleError(it, "transmit", exc) from exc
        runtimes["transmit"] += time.perf_counter() - t0
        transmit_traces.append(tres.trace)
        cand = bf.closed_form_objective(scenario, channels, uncs, tres.w, psi)
        if cand.feasible and cand.rate >= report.rate - 1e-12:
            w, report = tres.w, cand
        else:
            notes.append(f"iter {it}: transmit step rejected ({tres.status})")

        # --- passive step ---
        if scheme != "random-psi":
            t0 = time.perf_counter()
            try:
                if scenario.scenario == PSR:
                    # worst-case direct power of the held beamformer, one per user
                    eps_u_star = [
                        worst_case_direct_amplitude(ch.h_u, w, unc.xi_u, "min") ** 2
                        for ch, unc in zip(channels, uncs)
                    ]
                    pres = bf.sca_passive_psr(channels, uncs, scenario, w, psi_idx, eps_u_star,
                                              n_levels=config.n_levels, penalty=config.selector_penalty,
                                              tol=config.sca_tol, max_iter=config.sca_max_iters)
                else:
                    pres = bf.sca_passive_csr(channels, uncs, scenario, w, psi_idx,
                                              n_levels=config.n_levels, penalty=config.selector_penalty,
                                              tol=config.sca_tol, max_iter=config.sca_max_iters)
            except bf.SubproblemInfeasible as exc:
                raise StageInfeasibleError(it, "passive", exc) from exc
            runtimes["passive"] += time.perf_counter() - t0
            passive_traces.append(pres.trace)
            cand = bf.closed_form_objective(scenario, channels, uncs, w, pres.psi)
            if cand.feasible and cand.rate >= report.rate - 1e-12:
                psi_idx, psi, report = pres.indices, pres.psi, cand
            else:
                notes.append(f"iter {it}: passive step rejected ({pres.status})")

        # --- placement step ---
        if scheme in ("proposed-sapso", "proposed-pso", "random-psi"):
            t0 = time.perf_counter()

            def qos_ok(pos):
                chs, uns = _rebuild(geometry, pos, config)
                return bf.closed_form_objective(scenario, chs, uns, w, psi).feasible

            sres = sa_pso(
                w, psi, positions, config.swarm_config(), rng,
                geometry=geometry, scenario=scenario, g_bs=config.g_bs, g_u=config.g_u,
                min_spacing=config.min_spacing, annealing=(scheme != "proposed-pso"),
                record_filter=qos_ok,
            )
            runtimes["positions"] += time.perf_counter() - t0
            swarm_traces.append(sres.record_trace)
            if sres.status != "no-admissible-placement":
                chs, uns = _rebuild(geometry, sres.positions, config)
                cand = bf.closed_form_objective(scenario, chs, uns, w, psi)
                if cand.feasible and cand.rate >= report.rate - 1e-12:
                    positions, channels, uncs, report = sres.positions, chs, uns, cand
                else:
                    notes.append(f"iter {it}: placement step rejected")
            else:
                notes.append(f"iter {it}: no admissible placement")

        ao_rates.append(report.rate)
        prev, cur = ao_rates[-2], ao_rates[-1]
        if abs(cur - prev) < config.ao_tol * max(abs(prev), 1e-9):
            status = "converged"
            break

    snr = min(report.per_user_secondary_snr)
    design = Design(w=w, psi_indices=psi_idx, psi=psi, positions=positions)
    design.check(power, config.n_levels, region=config.region, min_spacing=config.min_spacing)
    return RunResult(
        scenario=scenario.scenario, scheme=scheme, seed=seed,
        ao_rates=ao_rates, design=design, rate=report.rate,
        secondary_snr_db=linear_to_db(max(snr, 1e-300)), feasible=report.feasible,
        status=status, transmit_traces=transmit_traces, passive_traces=passive_traces,
        swarm_traces=swarm_traces, stage_runtimes=runtimes,
        runtime_s=time.perf_counter() - t_start, stage_notes=notes, config=config,
    )


def run_single(config: RunConfig, seed: int, scheme: Optional[str] = None) -> RunResult:
    """Realize channels for one seed and optimize."""
    geometry, rng = realize_geometry(config, seed)
    return alternating_optimize(config, geometry, scheme=scheme, rng=rng, seed=seed)


def verify_robustness(
    result: RunResult,
    n_samples: int = 1000,
    rng: Optional[np.random.Generator] = None,
    geometry: Optional[SystemGeometry] = None,
) -> dict:
    """Sample bounded perturbations and a-posteriori check the guarantees.

    Draws are boundary-biased (half on the sphere).  Reports the minimum
    sampled rate, which must stay above the certified lower bound minus
    1e-6, and the count of sampled secondary-QoS violations (must be 0
    for a feasible design).
    """
    config = result.config
    if config is None:
        raise ValueError("result carries no config; cannot rebuild channels")
    if geometry is None:
        geometry, _ = realize_geometry(config, result.seed)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([result.seed, 0xA5]))
    scenario = config.scenario_config()
    channels, uncs = _rebuild(geometry, result.design.positions, config)
    w, psi = result.design.w, result.design.psi
    threshold = secondary_qos_threshold(scenario)

    min_rate = math.inf
    qos_violations = 0
    for _ in range(n_samples):
        rate_users = []
        ok = True
        for ch, unc in zip(channels, uncs):
            pert = sample_perturbation(unc, rng, ch.H_bs.shape, boundary_fraction=0.5)
            rate_users.append(nominal_rate(scenario, ch, w, psi, perturbation=pert))
            snr = secondary_snr(scenario, ch, w, psi, perturbation=pert)
            ok &= snr >= threshold * (1.0 - bf.QOS_RTOL)
        min_rate = min(min_rate, min(rate_users))
        qos_violations += 0 if ok else 1

    bound = result.rate
    report = {
        "n_samples": int(n_samples),
        "bound": float(bound),
        "min_sampled_rate": float(min_rate),
        "bound_gap": float(min_rate - bound),
        "qos_violations": int(qos_violations),
        "passed": bool(min_rate >= bound - 1e-6 and qos_violations == 0),
    }
    result.verification = report
    return report


# ---------------------------------------------------------------------------
# sweeps and file output
# ---------------------------------------------------------------------------

def _csv_row(result: RunResult) -> list:
    return [
        result.scenario, result.scheme, result.seed,
        result.sweep_name or "", "" if result.sweep_value is None else result.sweep_value,
        result.ao_iters, f"{result.rate:.10g}", f"{result.secondary_snr_db:.6g}",
        result.feasible, f"{result.runtime_s:.3f}",
    ]


def _failure_row(scenario, scheme, seed, sweep_name, sweep_value) -> list:
    return [scenario, scheme, seed, sweep_name or "",
            "" if sweep_value is None else sweep_value, 0, "nan", "nan", False, "0.000"]


def trace_payload(result: RunResult) -> dict:
    """JSON-serializable convergence trace for one run."""
    d = result.design
    return {
        "scenario": result.scenario,
        "scheme": result.scheme,
        "seed": result.seed,
        "sweep_name": result.sweep_name,
        "sweep_value": result.sweep_value,
        "status": result.status,
        "ao_iters": result.ao_iters,
        "ao_rates": [float(r) for r in result.ao_rates],
        "rate_bpshz": float(result.rate),
        "secondary_snr_db": float(result.secondary_snr_db),
        "feasible": bool(result.feasible),
        "runtime_s": float(result.runtime_s),
        "stage_runtimes": {k: float(v) for k, v in result.stage_runtimes.items()},
        "stage_notes": result.stage_notes,
        "transmit_traces": [[float(v) for v in t] for t in result.transmit_traces],
        "passive_traces": [[float(v) for v in t] for t in result.passive_traces],
        "swarm_traces": [[float(v) for v in t] for t in result.swarm_traces],
        "w_re": d.w.real.tolist(),
        "w_im": d.w.imag.tolist(),
        "psi_indices": [int(i) for i in d.psi_indices],
        "positions": d.positions.tolist(),
        "verification": result.verification,
        "config": result.config.to_dict() if result.config else None,
    }


def result_from_trace(payload: dict) -> RunResult:
    """Rebuild enough of a RunResult from a saved trace to verify it."""
    from .config import config_from_dict

    config = config_from_dict(payload["config"]) if payload.get("config") else None
    w = np.asarray(payload["w_re"], float) + 1j * np.asarray(payload["w_im"], float)
    idx = np.asarray(payload["psi_indices"], int)
    n_levels = config.n_levels if config else int(idx.max(initial=0) + 1)
    design = Design(
        w=w, psi_indices=idx, psi=bf.phases_from_indices(idx, n_levels),
        positions=np.asarray(payload["positions"], float),
    )
    return RunResult(
        scenario=payload["scenario"], scheme=payload["scheme"], seed=int(payload["seed"]),
        ao_rates=[float(r) for r in payload["ao_rates"]], design=design,
        rate=float(payload["rate_bpshz"]), secondary_snr_db=float(payload["secondary_snr_db"]),
        feasible=bool(payload["feasible"]), status=payload.get("status", ""),
        sweep_name=payload.get("sweep_name", ""), sweep_value=payload.get("sweep_value"),
        config=config,
    )


def _trace_name(result_or_parts) -> str:
    r = result_or_parts
    sweep = f"_{r.sweep_name}-{r.sweep_value}" if r.sweep_name else ""
    return f"trace_{r.scenario}_{r.scheme}_seed{r.seed}{sweep}.json"


def _run_task(args):
    config, seed, scheme, sweep_name, sweep_value, verify_n = args
    try:
        result = run_single(config, seed, scheme=scheme)
        result.sweep_name = sweep_name
        result.sweep_value = sweep_value
        verify_robustness(result, n_samples=verify_n)
        return ("ok", result)
    except Exception as exc:  # partial failure: row marked, sweep continues
        return ("error", (config.scenario, scheme or config.scheme, seed,
                          sweep_name, sweep_value, repr(exc)))


def run_sweep(
    config: RunConfig,
    schemes: Optional[Sequence[str]] = None,
    out_dir: Optional[str] = None,
) -> tuple[list[RunResult], Path, bool]:
    """Run value x seed x scheme, write one CSV plus per-run JSON traces.

    Returns (results, csv path, all_ok).  Rows appear in deterministic
    order regardless of worker count; failed runs produce marked rows.
    """
    schemes = list(schemes) if schemes else [config.scheme]
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if config.sweep_name:
        points = [(config.sweep_name, v) for v in config.sweep_values]
    else:
        points = [("", None)]

    tasks = []
    for sweep_name, value in points:
        run_cfg = config if value is None else config.replace(
            **{sweep_name: type(getattr(config, sweep_name))(value)}, sweep_name="", sweep_values=())
        for scheme in schemes:
            for seed in config.seeds:
                tasks.append((run_cfg, int(seed), scheme, sweep_name, value, config.verify_samples))

    if config.n_workers > 1:
        with ProcessPoolExecutor(max_workers=config.n_workers) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(t) for t in tasks]

    results: list[RunResult] = []
    failures: list[dict] = []
    all_ok = True
    csv_path = out / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for kind, payload in outcomes:
            if kind == "ok":
                result = payload
                results.append(result)
                writer.writerow(_csv_row(result))
                with open(out / _trace_name(result), "w", encoding="utf-8") as tfh:
                    json.dump(trace_payload(result), tfh, indent=1)
                if not (result.feasible and result.verification and result.verification["passed"]):
                    all_ok = False
            else:
                scenario, scheme, seed, sweep_name, value, err = payload
                writer.writerow(_failure_row(scenario, scheme, seed, sweep_name, value))
                failures.append({"scenario": scenario, "scheme": scheme, "seed": seed,
                                 "sweep_name": sweep_name, "sweep_value": value, "error": err})
                all_ok = False
    if failures:
        with open(out / "failures.json", "w", encoding="utf-8") as fh:
            json.dump(failures, fh, indent=1)
    return results, csv_path, all_ok
