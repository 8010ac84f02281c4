# src/netlqr/core/experiment.py
from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from netlqr.config.loader import dump_config
from netlqr.config.models import ExperimentConfig, KronGraphConfig
from netlqr.core.consensus import (
    ConsensusSetup,
    consensus_control,
    convergence_horizon,
    framework_gains,
    gain_identity_residual,
    simulate_consensus,
    solve_pi,
)
from netlqr.core.controller import (
    ClosedLoopLaw,
    GainSchedule,
    SystemModel,
    build_law,
    synthesize_finite,
    synthesize_infinite,
)
from netlqr.core.coupling import (
    AssumptionReport,
    EffectiveWeights,
    SpectralData,
    build_coupling,
    effective_weights,
    spectral_decompose,
    validate_assumptions,
    weight_matrices,
)
from netlqr.core.decomposition import check_properties, decompose
from netlqr.core.riccati import solve_riccati_ode
from netlqr.core.simulator import (
    Trajectory,
    centralized_oracle,
    evaluate_cost,
    optimal_cost,
    simulate_deterministic,
    simulate_stochastic,
    stochastic_value,
)
from netlqr.exceptions import NetlqrError, ValidationError, VerificationGapError
from netlqr.types import FloatArray, HorizonKind, RunMode
from netlqr.utils import relative_gap, sha256_file
from netlqr.views import (
    CsvTable,
    gains_table,
    plot_series,
    plot_trajectory,
    spectrum_table,
    summary_table,
    trajectory_table,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Report models
# ---------------------------------------------------------------------------

class ManifestEntry(BaseModel):
    name: str
    sha256: str
    bytes: int = Field(..., ge=0)


class SpectrumSummary(BaseModel):
    n: int
    rank: int
    n_distinct: int
    eigenvalues: list[float]
    group_values: list[float]

    @classmethod
    def from_spectral(cls, spec: SpectralData) -> SpectrumSummary:
        return cls(
            n=spec.n,
            rank=spec.rank,
            n_distinct=spec.n_distinct,
            eigenvalues=[float(v) for v in spec.eigenvalues],
            group_values=[float(v) for v in spec.group_values],
        )


class RunReport(BaseModel):
    """Everything a run found out, plus a checksum of every file it wrote."""

    name: str
    mode: RunMode
    status: Literal["ok", "failed"] = "ok"
    exit_code: int = 0
    error: str | None = None
    spectrum: SpectrumSummary | None = None
    assumptions: AssumptionReport | None = None
    riccati_solves: int | None = None
    costs: dict[str, float] = Field(default_factory=dict)
    checks: dict[str, float] = Field(default_factory=dict)
    timings: dict[str, float] = Field(default_factory=dict, description="Wall-clock seconds")
    files: list[ManifestEntry] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Instance assembly
# ---------------------------------------------------------------------------

class Instance(BaseModel):
    """A config resolved into matrices."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: SystemModel
    M: FloatArray
    G: FloatArray
    H: FloatArray
    spectral: SpectralData
    weights: EffectiveWeights
    x0: FloatArray

    @property
    def n(self) -> int:
        return int(self.M.shape[0])


def initial_state(config: ExperimentConfig, d_x: int, n: int) -> FloatArray:
    init = config.initial_state
    if init.x0 is not None:
        return np.array(init.x0, dtype=np.float64)
    assert init.random is not None
    rng = np.random.default_rng(init.random.seed)
    return init.random.scale * rng.standard_normal((d_x, n))


def build_instance(config: ExperimentConfig, graph_config: Any = None, x0: FloatArray | None = None) -> Instance:
    """Matrices of ``config``; ``graph_config`` and ``x0`` override the configured graph and state."""
    model = config.model.build()
    graph = (graph_config or config.graph).build()
    M = build_coupling(graph, config.coupling.build(), config.tolerances.sym_tol)
    spec = spectral_decompose(M, config.tolerances)
    coupling = config.cost.build()
    weights = effective_weights(spec, coupling)
    G, H = weight_matrices(coupling, M)
    return Instance(
        model=model,
        M=M,
        G=G,
        H=H,
        spectral=spec,
        weights=weights,
        x0=initial_state(config, model.d_x, graph.n) if x0 is None else x0,
    )


def synthesize(config: ExperimentConfig, inst: Instance) -> GainSchedule:
    solver = config.solver
    if config.horizon.kind == HorizonKind.FINITE.value:
        T = config.horizon.T
        return synthesize_finite(
            inst.model,
            inst.spectral,
            inst.weights,
            T,
            step=T / solver.riccati_steps,
            max_workers=solver.max_workers,
            tol=config.tolerances,
        )
    return synthesize_infinite(
        inst.model,
        inst.spectral,
        inst.weights,
        max_workers=solver.max_workers,
        tol=config.tolerances,
        max_iter=solver.are_max_iter,
    )


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

class _Writer:
    """Writes run artifacts into one directory and remembers them for the manifest."""

    def __init__(self, out_dir: Path) -> None:
        self.out_dir = out_dir
        self.written: list[Path] = []

    def table(self, name: str, table: CsvTable) -> None:
        self.written.append(table.write(self.out_dir / name))
        logger.info("Wrote %s (%d rows)", name, len(table.rows))

    def path(self, name: str) -> Path:
        path = self.out_dir / name
        self.written.append(path)
        return path

    def manifest(self) -> list[ManifestEntry]:
        return [
            ManifestEntry(name=p.name, sha256=sha256_file(p), bytes=p.stat().st_size)
            for p in sorted(self.written, key=lambda p: p.name)
        ]


def run(config: ExperimentConfig, out_dir: str | Path | None = None) -> RunReport:
    """
    Execute ``config.mode`` and write its artifacts plus ``report.json``.

    Library errors propagate after the report has been written with the error and its
    exit code.
    """
    out = Path(out_dir if out_dir is not None else config.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = _Writer(out)
    dump_config(config, writer.path("config.resolved.yaml"))
    report = RunReport(name=config.name, mode=config.mode)
    logger.info("Running '%s' in mode %s -> %s", config.name, config.mode.value, out)

    handlers = {
        RunMode.DECOMPOSE: _run_decompose,
        RunMode.SYNTHESIZE: _run_synthesize,
        RunMode.SIMULATE: _run_simulate,
        RunMode.VERIFY: _run_verify,
        RunMode.CONSENSUS: _run_consensus,
        RunMode.BENCH: _run_bench,
    }
    try:
        handlers[config.mode](config, report, writer)
    except NetlqrError as e:
        report.status = "failed"
        report.exit_code = e.exit_code
        report.error = f"{type(e).__name__}: {e}"
        raise
    finally:
        report.files = writer.manifest()
        (out / "report.json").write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return report


class _Timer:
    def __init__(self, report: RunReport, key: str) -> None:
        self.report, self.key = report, key

    def __enter__(self) -> _Timer:
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc: object) -> None:
        self.report.timings[self.key] = time.perf_counter() - self.start


def _describe(config: ExperimentConfig, report: RunReport, writer: _Writer) -> Instance:
    inst = build_instance(config)
    report.spectrum = SpectrumSummary.from_spectral(inst.spectral)
    report.assumptions = validate_assumptions(
        inst.model,
        inst.spectral,
        inst.weights,
        check_stabilizability=config.horizon.kind == HorizonKind.INFINITE.value,
        tol=config.tolerances,
    )
    writer.table("spectrum.csv", spectrum_table(inst.spectral))
    logger.info(
        "Spectrum: n=%d, L=%d, L_dist=%d", inst.spectral.n, inst.spectral.rank, inst.spectral.n_distinct
    )
    return inst


def _sim_step(config: ExperimentConfig) -> float:
    return config.horizon.T / config.solver.sim_steps


def _run_decompose(config: ExperimentConfig, report: RunReport, writer: _Writer) -> None:
    inst = _describe(config, report, writer)
    u0 = np.zeros((inst.model.d_u, inst.n))
    props = check_properties(inst.x0, u0, inst.spectral, inst.G, inst.H, inst.M, inst.model.Q, inst.weights)
    report.checks.update({f"property_{k}": v for k, v in props.residuals.items()})
    snapshot = Trajectory(grid=np.zeros(1), x=inst.x0[None], u=u0[None])
    writer.table("trajectory.csv", trajectory_table(snapshot, inst.spectral))
    writer.table("summary.csv", summary_table(_spectral_summary(inst) | dict(sorted(report.checks.items()))))


def _spectral_summary(inst: Instance) -> dict[str, float | int | str]:
    return {"n": inst.spectral.n, "L": inst.spectral.rank, "L_dist": inst.spectral.n_distinct}


def _run_synthesize(config: ExperimentConfig, report: RunReport, writer: _Writer) -> tuple[Instance, GainSchedule]:
    inst = _describe(config, report, writer)
    with _Timer(report, "synthesis"):
        gains = synthesize(config, inst)
    report.riccati_solves = gains.riccati_solves
    report.costs["optimal_value"] = optimal_cost(gains, inst.x0)
    every = max(1, config.solver.riccati_steps // 200)
    writer.table("gains.csv", gains_table(gains, every))
    if config.mode is RunMode.SYNTHESIZE:
        writer.table(
            "summary.csv",
            summary_table(
                _spectral_summary(inst)
                | {"riccati_solves": gains.riccati_solves, "optimal_value": report.costs["optimal_value"]}
            ),
        )
    return inst, gains


def _simulate_decomposed(
    config: ExperimentConfig, inst: Instance, gains: GainSchedule, report: RunReport
) -> Trajectory:
    dt = _sim_step(config)
    law = build_law(config.law.value, gains, inst.model, inst.x0, config.information, dt)
    with _Timer(report, "simulation"):
        traj = simulate_deterministic(inst.model, inst.M, law, inst.x0, config.horizon.T, dt)
    Q_T = inst.model.Q_T if gains.is_finite else None
    cost = evaluate_cost(traj, inst.G, inst.H, inst.model.Q, inst.model.R, Q_T, inst.spectral, inst.weights)
    report.costs["running"] = cost.running
    report.costs["terminal"] = cost.terminal
    report.costs["total"] = cost.total
    if cost.breakdown_total is not None:
        report.checks["breakdown_gap"] = relative_gap(cost.breakdown_total, cost.total)
    aux_u = np.stack([decompose(u, inst.spectral).auxiliary for u in traj.u])
    report.checks["max_abs_aux_control"] = float(np.max(np.abs(aux_u)))
    return traj


def _run_simulate(config: ExperimentConfig, report: RunReport, writer: _Writer) -> None:
    inst, gains = _run_synthesize(config, report, writer)
    traj = _simulate_decomposed(config, inst, gains, report)
    writer.table("trajectory.csv", trajectory_table(traj, inst.spectral, config.output.csv_every))

    mc = config.monte_carlo
    if inst.model.is_stochastic and mc.n_paths > 0:
        if not gains.is_finite:
            raise ValidationError("Monte Carlo runs need a finite horizon")
        law = build_law(config.law.value, gains, inst.model, inst.x0, config.information, _sim_step(config))
        with _Timer(report, "monte_carlo"):
            ensemble = simulate_stochastic(
                inst.model,
                inst.M,
                law,
                inst.x0,
                config.horizon.T,
                inst.G,
                inst.H,
                mc.n_paths,
                seed=mc.seed,
                dt=_sim_step(config),
                batch_size=mc.batch_size,
                max_workers=config.solver.max_workers,
                integrator=mc.integrator,
            )
        value = stochastic_value(inst.model, gains, inst.x0)
        report.costs["analytic_value"] = value.total
        report.costs["mc_mean"] = ensemble.mean
        report.costs["mc_stderr"] = ensemble.stderr
        if ensemble.stderr > 0:
            report.checks["mc_z_score"] = (ensemble.mean - value.total) / ensemble.stderr

    writer.table("summary.csv", summary_table(_spectral_summary(inst) | {"riccati_solves": gains.riccati_solves}
                                              | dict(sorted(report.costs.items()))
                                              | dict(sorted(report.checks.items()))))
    if config.output.svg:
        plot_trajectory(traj, inst.spectral, writer.path("trajectory.svg"), title=config.name)


def _run_verify(config: ExperimentConfig, report: RunReport, writer: _Writer) -> None:
    inst, gains = _run_synthesize(config, report, writer)
    traj = _simulate_decomposed(config, inst, gains, report)
    finite = gains.is_finite
    T = config.horizon.T
    with _Timer(report, "centralized"):
        oracle = centralized_oracle(
            inst.model,
            inst.M,
            inst.G,
            inst.H,
            inst.x0,
            T,
            dt=_sim_step(config),
            step=T / config.solver.riccati_steps,
            finite=finite,
            max_dim=config.solver.oracle_max_dim,
            tol=config.tolerances,
        )
    report.costs["centralized_total"] = oracle.cost.total
    report.costs["centralized_value"] = oracle.optimal_value
    gap = relative_gap(report.costs["total"], oracle.cost.total)
    u_gap = np.linalg.norm(traj.u - oracle.trajectory.u, axis=(1, 2)) / (
        1.0 + np.linalg.norm(oracle.trajectory.u, axis=(1, 2))
    )
    report.checks["cost_gap"] = gap
    report.checks["control_gap"] = float(u_gap.max())
    report.checks["value_gap"] = relative_gap(report.costs["optimal_value"], oracle.optimal_value)
    writer.table("trajectory.csv", trajectory_table(traj, inst.spectral, config.output.csv_every))
    writer.table(
        "summary.csv",
        summary_table(
            _spectral_summary(inst)
            | {"riccati_solves": gains.riccati_solves, "oracle_dimension": oracle.dimension}
            | dict(sorted(report.costs.items()))
            | dict(sorted(report.checks.items()))
        ),
    )
    logger.info("Verify: decomposed %.10g, centralized %.10g, gap %.3e", report.costs["total"], oracle.cost.total, gap)
    if gap > config.verify_tol:
        raise VerificationGapError(f"Cost gap {gap:.3e} exceeds tolerance {config.verify_tol:.3e}")


def _run_consensus(config: ExperimentConfig, report: RunReport, writer: _Writer) -> None:
    model = config.model.build()
    graph = config.graph.build()
    setup = ConsensusSetup(graph=graph, Q=model.Q, R=model.R, tolerances=config.tolerances)
    gain = solve_pi(setup.Q, setup.R)
    gains = framework_gains(setup, config.solver.max_workers)
    report.spectrum = SpectrumSummary.from_spectral(setup.spectral)
    report.riccati_solves = gains.riccati_solves
    writer.table("spectrum.csv", spectrum_table(setup.spectral))

    law = ClosedLoopLaw(gains=gains)
    rng = np.random.default_rng(config.monte_carlo.seed)
    protocol_gap = 0.0
    for _ in range(20):
        x = rng.standard_normal((setup.d_x, graph.n))
        ref = law.control(0.0, x)
        protocol_gap = max(protocol_gap, float(np.max(np.abs(consensus_control(setup, gain, x) - ref))))

    x0 = initial_state(config, setup.d_x, graph.n)
    T = config.horizon.T
    with _Timer(report, "simulation"):
        result = simulate_consensus(setup, gain, x0, T, T / config.solver.sim_steps)
    report.checks.update(
        {
            "pi_residual": gain.residual(setup.Q),
            "gain_identity": gain_identity_residual(gains, gain),
            "protocol_gap": protocol_gap,
            "aux_riccati_norm": float(np.linalg.norm(gains.aux_riccati)) if gains.aux_riccati is not None else 0.0,
            "disagreement_reduction": result.reduction,
            "average_drift": result.average_drift,
        }
    )
    report.costs["convergence_horizon"] = convergence_horizon(setup, gain)

    table = CsvTable(columns=["time", "disagreement"])
    every = config.output.csv_every
    for t, value in zip(result.trajectory.grid[::every], result.disagreement[::every]):
        table.add_row([float(t), float(value)])
    writer.table("disagreement.csv", table)
    writer.table("trajectory.csv", trajectory_table(result.trajectory, setup.spectral, config.output.csv_every))
    writer.table(
        "summary.csv",
        summary_table({"n": graph.n, "L": setup.spectral.rank, "L_dist": setup.spectral.n_distinct}
                      | dict(sorted(report.costs.items())) | dict(sorted(report.checks.items()))),
    )
    if config.output.svg:
        plot_series(result.trajectory.grid, result.disagreement, writer.path("disagreement.svg"), "disagreement")


def _run_bench(config: ExperimentConfig, report: RunReport, writer: _Writer) -> None:
    """Kronecker sweep: the decomposed solve count stays fixed while the oracle grows with c."""
    base = config.graph.base if isinstance(config.graph, KronGraphConfig) else config.graph
    if config.horizon.kind != HorizonKind.FINITE.value:
        raise ValidationError("bench mode needs a finite horizon")
    T = config.horizon.T
    step = T / config.solver.riccati_steps
    table = CsvTable(
        columns=[
            "c",
            "n",
            "L",
            "L_dist",
            "riccati_solves",
            "oracle_dimension",
            "decomposed_seconds",
            "centralized_seconds",
            "max_gain_difference",
        ]
    )
    reference: GainSchedule | None = None
    for c in config.bench.c_values:
        graph_config = KronGraphConfig(base=base, c=c)
        inst = build_instance(config, graph_config, x0=np.zeros((config.model.build().d_x, graph_config.build().n)))
        start = time.perf_counter()
        gains = synthesize(config, inst)
        decomposed = time.perf_counter() - start

        dim = inst.n * inst.model.d_x
        centralized = float("nan")
        if dim <= config.solver.oracle_max_dim:
            data = inst.model.vectorized(inst.M, inst.G, inst.H)
            start = time.perf_counter()
            solve_riccati_ode(data, T, step, config.tolerances.pd_tol)
            centralized = time.perf_counter() - start

        diff = 0.0
        if reference is None:
            reference = gains
        elif reference.group_gains.shape == gains.group_gains.shape:
            diff = float(np.max(np.abs(reference.group_gains - gains.group_gains), initial=0.0))
            diff = max(diff, float(np.max(np.abs(reference.aux_gain - gains.aux_gain))))
        else:
            diff = float("inf")
        table.add_row(
            [
                c,
                inst.n,
                inst.spectral.rank,
                inst.spectral.n_distinct,
                gains.riccati_solves,
                dim,
                decomposed,
                centralized,
                diff,
            ]
        )
        report.timings[f"decomposed_c{c}"] = decomposed
        report.timings[f"centralized_c{c}"] = centralized
        report.checks[f"gain_difference_c{c}"] = diff
        logger.info("bench c=%d: n=%d, decomposed %.3fs, centralized %.3fs", c, inst.n, decomposed, centralized)
    writer.table("bench.csv", table)

