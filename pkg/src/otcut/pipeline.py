"""End-to-end cut-locus computation shared by the CLI, scripts and tests."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .cutlocus import CutLocusSet, extract
from .dmk import DmkConfig, DmkState, IterationLog, _geometry, run_to_convergence
from .mesh import RefinedPair, SurfaceMesh, conformal_refine, load_mesh, nearest_vertex, refine_levels
from .oracles import graph_distance
from .sfem import SourceSpec, aggregate_to_coarse, gradient_norms, make_source
from .surfaces import Torus, generate_mesh, make_descriptor, torus_grid

log = logging.getLogger(__name__)


@dataclass
class CutLocusRun:
    pair: RefinedPair
    source: SourceSpec
    state: DmkState
    log: IterationLog
    seconds: float

    @property
    def coarse(self) -> SurfaceMesh:
        return self.pair.coarse

    @property
    def mu(self) -> np.ndarray:
        return self.state.mu

    @property
    def u(self) -> np.ndarray:
        return self.state.u

    @property
    def converged(self) -> bool:
        return self.log.converged

    def grad_norms(self) -> np.ndarray:
        return gradient_norms(self.pair, _geometry(self.pair), self.u)

    def coarse_grad_norms(self) -> np.ndarray:
        return aggregate_to_coarse(self.grad_norms(), self.pair)

    def source_distance(self) -> np.ndarray:
        """Edge-path distance from the source, averaged to coarse triangles."""
        p = self.pair.refined.vertices[self.source.source_vertex]
        d = graph_distance(self.coarse, nearest_vertex(self.coarse, p))
        return d[self.coarse.triangles].mean(axis=1)

    def density_scale(self) -> float:
        """Median density over the quarter of triangles closest to the source."""
        d = self.source_distance()
        return float(np.median(self.mu[d <= np.quantile(d, 0.25)]))

    def extract(self, epsilon: float, mode: str = "absolute", scaled: bool = False) -> CutLocusSet:
        eps = epsilon * self.density_scale() if scaled else epsilon
        return extract(self.mu, self.coarse, eps, mode)


def build_mesh(surface=None, params=None, resolution=3, mesh_path=None, refine=0, grid="aligned") -> SurfaceMesh:
    """Generate (or load) a mesh and apply ``refine`` lifted refinements."""
    if mesh_path is not None:
        return refine_levels(load_mesh(mesh_path), refine)
    desc = make_descriptor(surface, **(params or {}))
    if isinstance(desc, Torus) and grid == "staggered":
        res = resolution if np.ndim(resolution) else (resolution, resolution)
        mesh = torus_grid(desc.r_max, desc.r_min, int(res[0]), int(res[1]), stagger=True)
    else:
        mesh = generate_mesh(desc, resolution)
    return refine_levels(mesh, refine, desc)


def solve_cut_locus(
    mesh: SurfaceMesh, source=None, source_vertex: Optional[int] = None, cfg: DmkConfig = DmkConfig(), callback=None
) -> CutLocusRun:
    """Pair ``mesh`` with its refinement and run DMK to steady state.

    ``source_vertex`` indexes the coarse mesh; ``source`` is a point snapped
    to the nearest refined vertex.
    """
    pair = conformal_refine(mesh)
    if source_vertex is not None:
        src = make_source(pair, vertex=int(pair.vertex_embedding[source_vertex]))
    else:
        src = make_source(pair, point=source)
    t0 = time.perf_counter()
    state, it_log = run_to_convergence(pair, src, cfg, callback)
    return CutLocusRun(pair, src, state, it_log, time.perf_counter() - t0)


def run_from_config(cfg, callback=None) -> CutLocusRun:
    """Build the mesh described by a :class:`~otcut.io.RunConfig` and solve."""
    mesh = build_mesh(cfg.surface, cfg.params, cfg.resolution, cfg.mesh, cfg.refine, cfg.grid)
    return solve_cut_locus(mesh, cfg.source, cfg.source_vertex, cfg.dmk, callback)


def summary(run: CutLocusRun, cut: Optional[CutLocusSet] = None) -> dict:
    out = {
        "coarse_vertices": run.coarse.n_vertices,
        "coarse_triangles": run.coarse.n_triangles,
        "refined_vertices": run.pair.refined.n_vertices,
        "source_vertex": run.source.source_vertex,
        "steps": run.state.step,
        "converged": run.converged,
        "final_max_rel_change": run.state.max_rel_change,
        "lyapunov": run.state.lyapunov,
        "mu_min": float(run.mu.min()),
        "mu_max": float(run.mu.max()),
        "seconds": run.seconds,
    }
    if cut is not None:
        out.update(
            threshold=cut.threshold_used,
            mode=cut.mode,
            cut_triangles=len(cut),
            cut_components=cut.n_components,
        )
    return out


def write_summary(data: dict, path) -> None:
    from .mesh import atomic_write_text

    atomic_write_text(Path(path), json.dumps(data, indent=2, sort_keys=True) + "\n")
