# src/netlqr/config/models.py
from __future__ import annotations

from typing import TYPE_CHECKING, Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from netlqr.types import InformationStructure, Integrator, LawKind, MatrixLike, RunMode, SpectralFunctionName

if TYPE_CHECKING:
    from netlqr.core.controller import SystemModel
    from netlqr.core.coupling import CostCoupling, CouplingSpec, GraphSpec


class ToleranceConfig(BaseModel):
    """Numerical thresholds shared by all solvers."""

    model_config = ConfigDict(frozen=True)

    rank_tol: float = Field(default=1e-9, gt=0, description="Eigenvalue kept iff |lambda| > rank_tol * ||M||_2")
    group_tol: float = Field(default=1e-8, gt=0, description="Single-linkage gap for equal eigenvalues")
    sym_tol: float = Field(default=1e-10, gt=0, description="Relative asymmetry accepted for symmetric inputs")
    orth_tol: float = Field(default=1e-10, gt=0, description="Eigenvector orthonormality tolerance")
    pd_tol: float = Field(default=1e-8, gt=0, description="Definiteness tolerance")
    are_tol: float = Field(default=1e-9, gt=0, description="ARE residual bound, scaled by 1 + ||P||_F^2")
    pbh_tol: float = Field(default=1e-8, gt=0, description="PBH rank threshold relative to ||[A - sI, B]||_2")
    pbh_margin: float = Field(default=1e-10, ge=0, description="Modes with Re(s) >= -pbh_margin are tested")
    ill_conditioned: float = Field(default=1e12, gt=1, description="Schur basis condition number that triggers Newton")


class SolverConfig(BaseModel):
    """Discretization and resource settings."""

    model_config = ConfigDict(frozen=True)

    riccati_steps: int = Field(default=2000, ge=1, description="Riccati grid intervals over [0, T]")
    sim_steps: int = Field(default=4000, ge=1, description="Simulation grid intervals over [0, T]")
    are_max_iter: int = Field(default=50, ge=1, description="Kleinman-Newton iteration budget")
    max_workers: int | None = Field(default=None, ge=1, description="Thread pool size for independent solves")
    oracle_max_dim: int = Field(default=400, ge=1, description="Largest n * d_x accepted by the centralized oracle")


class MonteCarloConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = Field(default=0, ge=0, description="Root seed of the noise streams")
    n_paths: int = Field(default=0, ge=0, description="Number of Monte Carlo paths (0 disables)")
    batch_size: int = Field(default=256, ge=1, description="Paths simulated together per worker task")
    integrator: Integrator = Field(default=Integrator.EULER_MARUYAMA, description="Step rule for noisy paths")


# ---------------------------------------------------------------------------
# Graph generators
# ---------------------------------------------------------------------------

class Ring4GraphConfig(BaseModel):
    generator: Literal["ring4"] = "ring4"
    a: float = Field(default=2.0, description="Weight of the edges 1-2 and 2-3")
    b: float = Field(default=1.0, description="Weight of the edges 1-4 and 3-4")

    def build(self) -> GraphSpec:
        from netlqr.core.coupling import GraphSpec

        return GraphSpec.ring4(self.a, self.b)


class CompleteGraphConfig(BaseModel):
    generator: Literal["complete"] = "complete"
    n: int = Field(..., ge=1)
    weight: float | None = Field(default=None, description="Edge weight (default 1/n)")
    self_loops: bool = Field(default=True)

    def build(self) -> GraphSpec:
        from netlqr.core.coupling import GraphSpec

        return GraphSpec.complete(self.n, weight=self.weight, self_loops=self.self_loops)


class PathGraphConfig(BaseModel):
    generator: Literal["path"] = "path"
    n: int = Field(..., ge=1)
    weight: float = Field(default=1.0)

    def build(self) -> GraphSpec:
        from netlqr.core.coupling import GraphSpec

        return GraphSpec.path(self.n, weight=self.weight)


class EdgeListGraphConfig(BaseModel):
    generator: Literal["edges"] = "edges"
    n: int = Field(..., ge=1)
    edges: list[tuple[int, int, float]] = Field(default_factory=list, description="(i, j, weight), 1-based")

    def build(self) -> GraphSpec:
        from netlqr.core.coupling import GraphSpec

        return GraphSpec(n=self.n, edges=self.edges)


class KronGraphConfig(BaseModel):
    generator: Literal["kron"] = "kron"
    base: GraphConfig
    c: int = Field(..., ge=1, description="Clique size of the averaging factor (1/c) 1 1^T")

    def build(self) -> GraphSpec:
        from netlqr.core.coupling import GraphSpec, kronecker_expand

        return GraphSpec.from_adjacency(kronecker_expand(self.base.build().adjacency(), self.c))


GraphConfig = Annotated[
    Union[Ring4GraphConfig, CompleteGraphConfig, PathGraphConfig, EdgeListGraphConfig, KronGraphConfig],
    Field(discriminator="generator"),
]
KronGraphConfig.model_rebuild()


# ---------------------------------------------------------------------------
# Coupling and cost
# ---------------------------------------------------------------------------

class CouplingConfig(BaseModel):
    kind: Literal["adjacency", "laplacian", "custom"] = "adjacency"
    matrix: list[list[float]] | None = Field(default=None, description="Required for kind=custom")

    @model_validator(mode="after")
    def _custom_needs_matrix(self) -> CouplingConfig:
        if self.kind == "custom" and self.matrix is None:
            raise ValueError("coupling.matrix is required when kind is 'custom'")
        return self

    def build(self) -> CouplingSpec:
        from netlqr.core.coupling import CouplingSpec

        return CouplingSpec(kind=self.kind, matrix=self.matrix)


class NamedFunctionConfig(BaseModel):
    name: SpectralFunctionName
    gamma: float


class PolynomialCostConfig(BaseModel):
    mode: Literal["polynomial"] = "polynomial"
    q: list[float] = Field(..., min_length=1, description="Coefficients q_0..q_K of G = sum q_k M^k")
    r: list[float] = Field(default_factory=lambda: [1.0], min_length=1, description="Coefficients of H")

    def build(self) -> CostCoupling:
        from netlqr.core.coupling import PolynomialCoupling

        return PolynomialCoupling(q=self.q, r=self.r)


class SpectralCostConfig(BaseModel):
    mode: Literal["spectral"] = "spectral"
    f_G: NamedFunctionConfig
    f_H: NamedFunctionConfig

    def build(self) -> CostCoupling:
        from netlqr.core.coupling import NamedFunction, SpectralFunctionCoupling

        return SpectralFunctionCoupling(
            f_G=NamedFunction(**self.f_G.model_dump()),
            f_H=NamedFunction(**self.f_H.model_dump()),
        )


CostConfig = Annotated[Union[PolynomialCostConfig, SpectralCostConfig], Field(discriminator="mode")]


# ---------------------------------------------------------------------------
# Model, horizon, initial state, outputs
# ---------------------------------------------------------------------------

class ModelConfig(BaseModel):
    """Subsystem matrices as scalars or row lists; D, E, F default to zero."""

    A: MatrixLike
    B: MatrixLike
    D: MatrixLike | None = None
    E: MatrixLike | None = None
    F: MatrixLike | None = None
    Q: MatrixLike
    R: MatrixLike
    Q_T: MatrixLike | None = None

    def build(self) -> SystemModel:
        from netlqr.core.controller import SystemModel

        return SystemModel.from_values(**self.model_dump())


class HorizonConfig(BaseModel):
    kind: Literal["finite", "infinite"] = "finite"
    T: float = Field(default=2.0, gt=0, description="Horizon (finite) or simulated window (infinite)")


class RandomStateConfig(BaseModel):
    seed: int = Field(default=0, ge=0)
    scale: float = Field(default=1.0, gt=0)


class InitialStateConfig(BaseModel):
    """Either an explicit d_x x n matrix or a seeded Gaussian draw."""

    x0: list[list[float]] | None = None
    random: RandomStateConfig | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> InitialStateConfig:
        if (self.x0 is None) == (self.random is None):
            raise ValueError("initial_state needs exactly one of 'x0' or 'random'")
        return self


class OutputConfig(BaseModel):
    dir: str = Field(default="runs", description="Output directory")
    svg: bool = Field(default=False, description="Emit SVG line plots")
    csv_every: int = Field(default=1, ge=1, description="Write every k-th simulation sample to trajectory.csv")


class BenchConfig(BaseModel):
    c_values: list[int] = Field(default_factory=lambda: [1, 2, 5, 10], min_length=1)

    @field_validator("c_values")
    @classmethod
    def validate_c(cls, v: list[int]) -> list[int]:
        if any(c < 1 for c in v):
            raise ValueError("bench.c_values must be positive")
        return v


class ExperimentConfig(BaseModel):
    """A fully determined experiment instance."""

    name: str = Field(default="experiment")
    mode: RunMode = Field(default=RunMode.SIMULATE)
    graph: GraphConfig
    coupling: CouplingConfig = Field(default_factory=CouplingConfig)
    cost: CostConfig = Field(default_factory=lambda: PolynomialCostConfig(q=[1.0], r=[1.0]))
    model: ModelConfig
    horizon: HorizonConfig = Field(default_factory=HorizonConfig)
    initial_state: InitialStateConfig = Field(default_factory=lambda: InitialStateConfig(random=RandomStateConfig()))
    information: InformationStructure = Field(default=InformationStructure.LOCAL)
    law: LawKind = Field(default=LawKind.CLOSED)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    monte_carlo: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    verify_tol: float = Field(default=1e-5, gt=0, description="Relative cost gap accepted by verify")
    bench: BenchConfig = Field(default_factory=BenchConfig)

    @model_validator(mode="after")
    def _check_dimensions(self) -> ExperimentConfig:
        # Domain errors are re-raised as ValueError so pydantic reports the field path.
        from netlqr.exceptions import NetlqrError

        try:
            model = self.model.build()
            graph = self.graph.build()
        except NetlqrError as e:
            raise ValueError(str(e)) from e
        if self.coupling.kind == "custom" and self.coupling.matrix is not None:
            size = len(self.coupling.matrix)
            if size != graph.n or any(len(row) != graph.n for row in self.coupling.matrix):
                raise ValueError(f"coupling.matrix must be {graph.n}x{graph.n}")
        if self.initial_state.x0 is not None:
            rows = self.initial_state.x0
            if len(rows) != model.d_x or any(len(row) != graph.n for row in rows):
                raise ValueError(f"initial_state.x0 must be {model.d_x}x{graph.n} (d_x x n)")
        return self

    def echo(self) -> dict[str, Any]:
        """Resolved config with every default filled in, as plain data."""
        return self.model_dump(mode="json")
