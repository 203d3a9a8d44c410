"""Dynamical Monge-Kantorovich iteration.

The density on coarse triangles follows ``d mu / dt = mu (|grad u| - 1)``
(explicit Euler, clamped below by ``mu_floor``), where ``u`` solves the
weighted elliptic problem for the current density.  Its steady state
satisfies the eikonal condition wherever the density is positive.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from typing import List, Optional

import numpy as np

from .errors import NoConvergence
from .mesh import ElementGeometry, RefinedPair, element_geometry
from .sfem import (
    LinearSystem,
    SourceSpec,
    StiffnessAssembler,
    aggregate_to_coarse,
    assemble_rhs,
    gradient_norms,
    gradients,
    grounded_preconditioner,
    solve_grounded,
)

log = logging.getLogger(__name__)


AGGREGATIONS = ("mean", "rms", "vector")
PRECONDITIONERS = ("lu", "amg", "jacobi")


def coarse_gradient_norm(pair: RefinedPair, geom: ElementGeometry, u, how: str = "mean") -> np.ndarray:
    """Per coarse triangle |grad u| from the P1 potential on its four children.

    ``mean``: area-weighted mean of the child norms; ``rms``: square root of
    the area-weighted mean of squared norms; ``vector``: norm of the
    area-weighted mean gradient vector.
    """
    if how == "mean":
        return aggregate_to_coarse(gradient_norms(pair, geom, u), pair)
    g = gradients(pair, geom, u)
    if how == "rms":
        return np.sqrt(aggregate_to_coarse(np.sum(g * g, axis=1), pair))
    if how == "vector":
        avg = np.stack([aggregate_to_coarse(g[:, k], pair) for k in range(3)], axis=1)
        return np.linalg.norm(avg, axis=1)
    raise ValueError(f"unknown aggregation {how!r}")


@dataclass(frozen=True)
class DmkConfig:
    delta_t: float = 0.25
    mu_init: float = 1.0
    mu_floor: Optional[float] = None  # None: 1e-10 x mesh diameter
    linear_rel_tol: float = 1e-9
    conv_tol: float = 1e-6
    max_steps: int = 2000
    lyapunov_slack: Optional[float] = None  # None: 1e-8 x |L|
    preconditioner: str = "lu"
    aggregation: str = "mean"

    def __post_init__(self):
        if not 0 < self.delta_t <= 1:
            raise ValueError("delta_t must lie in (0, 1]")
        if self.mu_floor is not None and not self.mu_floor > 0:
            raise ValueError("mu_floor must be positive")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")
        if not self.mu_init > 0:
            raise ValueError("mu_init must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")

    def floor_for(self, diameter: float) -> float:
        return self.mu_floor if self.mu_floor is not None else 1e-10 * diameter

    def slack_for(self, lyapunov: float) -> float:
        return self.lyapunov_slack if self.lyapunov_slack is not None else 1e-8 * abs(lyapunov)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass
class DmkState:
    step: int
    mu: np.ndarray
    u: np.ndarray
    lyapunov: float
    energy: float
    mass: float
    max_rel_change: float = np.inf
    cg_iters: int = 0


@dataclass
class LogRecord:
    step: int
    lyapunov: float
    energy: float
    mass: float
    max_rel_change: float
    mu_min: float
    mu_max: float
    cg_iters: int


CSV_COLUMNS = [f.name for f in fields(LogRecord)]


@dataclass
class IterationLog:
    records: List[LogRecord] = field(default_factory=list)
    converged: bool = False

    def append(self, state: DmkState) -> None:
        self.records.append(
            LogRecord(
                state.step,
                state.lyapunov,
                state.energy,
                state.mass,
                state.max_rel_change,
                float(state.mu.min()),
                float(state.mu.max()),
                state.cg_iters,
            )
        )

    def __len__(self):
        return len(self.records)

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "IterationLog":
        rows = list(csv.DictReader(io.StringIO(text)))
        recs = [
            LogRecord(**{k: (int(v) if k in ("step", "cg_iters") else float(v)) for k, v in row.items()})
            for row in rows
        ]
        return cls(recs)


def lyapunov_increases(log: IterationLog, slack: float, start: int = 2) -> List[int]:
    """Steps k >= start with L(k) > L(k-1) + slack."""
    L = log.column("lyapunov")
    steps = log.column("step")
    bad = np.flatnonzero((steps[1:] >= start) & (L[1:] > L[:-1] + slack)) + 1
    return [int(steps[i]) for i in bad]


@lru_cache(maxsize=8)
def _geometry(pair: RefinedPair) -> ElementGeometry:
    return element_geometry(pair.refined)


@lru_cache(maxsize=8)
def _assembler(pair: RefinedPair) -> StiffnessAssembler:
    return StiffnessAssembler(pair, _geometry(pair))


def lyapunov_value(mu, u, pair: RefinedPair, geom: Optional[ElementGeometry] = None):
    """Return (L, E, M) with E = 1/2 int mu |grad u|^2 and M = 1/2 int mu."""
    geom = geom if geom is not None else _geometry(pair)
    g2 = np.sum(gradients(pair, geom, u) ** 2, axis=1)
    energy = 0.5 * float(np.sum(mu[pair.parent] * geom.areas * g2))
    mass = 0.5 * float(np.dot(mu, pair.cell_areas))
    return energy + mass, energy, mass


def relative_change(mu_old, mu_new, weights) -> float:
    """Area-weighted L1 change of the density relative to its previous mass."""
    return float(np.dot(weights, np.abs(mu_new - mu_old)) / np.dot(weights, mu_old))


def update_density(mu, q, delta_t: float, mu_floor: float) -> np.ndarray:
    """Explicit Euler step of mu' = mu (q - 1), clamped at ``mu_floor``."""
    return np.maximum(mu_floor, mu + delta_t * mu * (q - 1.0))


class _ReusedPreconditioner:
    """Keeps the preconditioner of an earlier density while CG stays cheap.

    The density changes slowly once the iteration settles, so a factorization
    built a few hundred steps ago still preconditions well.  It is rebuilt
    as soon as CG needs more than ``refresh_iters`` iterations.
    """

    def __init__(self, kind: str, refresh_iters: int = 20):
        self.kind = kind
        self.refresh_iters = refresh_iters
        self.op = None
        self.builds = 0

    def solve(self, system: LinearSystem, rel_tol: float, x0=None):
        max_iter = max(1000, system.matrix.shape[0])
        if self.op is not None and self.kind != "jacobi":
            try:
                sol = solve_grounded(system, rel_tol, 4 * self.refresh_iters, x0, self.op)
                if sol.iterations <= self.refresh_iters:
                    return sol
            except NoConvergence:
                pass
        self.op = grounded_preconditioner(system, self.kind)
        self.builds += 1
        return solve_grounded(system, rel_tol, max_iter, x0, self.op)


def _solve(pair, src, mu, cfg, x0=None, reuse: Optional[_ReusedPreconditioner] = None):
    A = _assembler(pair)(mu)
    b = assemble_rhs(pair, _geometry(pair), src)
    system = LinearSystem(A, b, src.source_vertex)
    if reuse is not None:
        return reuse.solve(system, cfg.linear_rel_tol, x0)
    return solve_grounded(
        system,
        rel_tol=cfg.linear_rel_tol,
        max_iter=max(1000, A.shape[0]),
        x0=x0,
        preconditioner=cfg.preconditioner,
    )


def init_state(pair: RefinedPair, src: SourceSpec, cfg: DmkConfig = DmkConfig()) -> DmkState:
    mu = np.full(pair.coarse.n_triangles, float(cfg.mu_init))
    sol = _solve(pair, src, mu, cfg)
    L, E, M = lyapunov_value(mu, sol.u, pair)
    return DmkState(0, mu, sol.u, L, E, M, np.inf, sol.iterations)


def dmk_step(
    state: DmkState,
    pair: RefinedPair,
    geom: Optional[ElementGeometry],
    src: SourceSpec,
    cfg: DmkConfig = DmkConfig(),
    reuse: Optional[_ReusedPreconditioner] = None,
) -> DmkState:
    geom = geom if geom is not None else _geometry(pair)
    q = coarse_gradient_norm(pair, geom, state.u, cfg.aggregation)
    floor = cfg.floor_for(pair.coarse.bbox_diagonal)
    mu = update_density(state.mu, q, cfg.delta_t, floor)
    change = relative_change(state.mu, mu, pair.cell_areas)
    sol = _solve(pair, src, mu, cfg, x0=state.u, reuse=reuse)
    L, E, M = lyapunov_value(mu, sol.u, pair, geom)
    return DmkState(state.step + 1, mu, sol.u, L, E, M, change, sol.iterations)


def run_to_convergence(pair: RefinedPair, src: SourceSpec, cfg: DmkConfig = DmkConfig(), callback=None):
    """Iterate until the relative density change drops to ``conv_tol``.

    Hitting ``max_steps`` is reported through ``log.converged``, not raised.
    """
    geom = _geometry(pair)
    state = init_state(pair, src, cfg)
    reuse = _ReusedPreconditioner(cfg.preconditioner)
    log_ = IterationLog()
    log_.append(state)
    while state.step < cfg.max_steps:
        state = dmk_step(state, pair, geom, src, cfg, reuse)
        log_.append(state)
        if callback is not None:
            callback(state)
        if state.max_rel_change <= cfg.conv_tol:
            log_.converged = True
            break
    if not log_.converged:
        log.warning("DMK stopped after %d steps, max relative change %.3e", state.step, state.max_rel_change)
    return state, log_


def with_overrides(cfg: DmkConfig, **kw) -> DmkConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
