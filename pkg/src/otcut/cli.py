"""Command-line driver.

Exit codes: 0 success, 2 configuration error, 3 mesh error, 4 DMK did not
converge (artifacts are still written), 5 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as oio
from .errors import ConfigError, IoError, MeshError, OTCutError, ProjectionError
from .mesh import euler_characteristic, load_mesh

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_NOCONV, EXIT_IO = 0, 2, 3, 4, 5

log = logging.getLogger("otcut")


def cmd_run(cfg: oio.RunConfig) -> int:
    from .pipeline import build_mesh, solve_cut_locus, summary, write_summary

    try:
        mesh = build_mesh(cfg.surface, cfg.params, cfg.resolution, cfg.mesh, cfg.refine, cfg.grid)
    except (MeshError, ProjectionError, OSError) as exc:
        log.error("mesh error: %s", exc)
        return EXIT_MESH
    except OTCutError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    if cfg.source_vertex is not None and not 0 <= cfg.source_vertex < mesh.n_vertices:
        log.error("source_vertex %d out of range", cfg.source_vertex)
        return EXIT_CONFIG
    log.info("mesh: %d vertices, %d triangles", mesh.n_vertices, mesh.n_triangles)

    def progress(state):
        if state.step % 100 == 0:
            log.info("step %d  L=%.10g  max_rel_change=%.3e", state.step, state.lyapunov, state.max_rel_change)

    run = solve_cut_locus(mesh, cfg.source, cfg.source_vertex, cfg.dmk, progress)
    cut = None
    if cfg.epsilon is not None:
        cut = run.extract(cfg.epsilon, cfg.mode, scaled=cfg.epsilon_scale == "source_quartile")
        log.info("cut locus: %d triangles in %d components", len(cut), cut.n_components)

    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.vtk:
            mask = cut.mask(mesh.n_triangles) if cut is not None else np.zeros(mesh.n_triangles, dtype=np.int64)
            oio.export_vtk(run.pair, run.u, run.grad_norms(), run.mu, mask, out)
        if cfg.csv:
            oio.write_log_csv(run.log, out / "log.csv")
        if cfg.indices and cut is not None:
            oio.write_indices(cut.triangle_indices, out / "cutlocus.txt")
        write_summary(summary(run, cut), out / "summary.json")
    except (IoError, OSError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    if not run.converged:
        log.error("DMK did not converge within %d steps", cfg.dmk.max_steps)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_oracle_circle(n: int) -> int:
    from .oracles import circle_density, circle_dmk_1d, circle_potential

    t0 = time.perf_counter()
    sol = circle_dmk_1d(n)
    err_mu = np.max(np.abs(sol.mu - circle_density(sol.phi_mid))) / np.pi
    err_u = np.max(np.abs(sol.u - circle_potential(sol.phi_nodes))) / np.pi
    print(f"segments={n} steps={sol.log.records[-1].step} converged={sol.log.converged}")
    print(f"max |mu - (pi-|phi|)|/pi = {err_mu:.3e}")
    print(f"max |u + |phi||/pi      = {err_u:.3e}")
    print(f"total mass = {np.sum(sol.mu) * 2 * np.pi / n:.6f} (pi^2 = {np.pi**2:.6f})")
    print(f"time {time.perf_counter() - t0:.2f} s")
    return EXIT_OK if sol.log.converged else EXIT_NOCONV


def cmd_oracle_sphere() -> int:
    from .oracles import sphere_density, sphere_density_quadrature

    r = np.linspace(0.05, np.pi - 0.05, 20)
    closed = sphere_density(r)
    quad = np.array([sphere_density_quadrature(x) for x in r])
    err = np.max(np.abs(closed - quad))
    for x, a, b in zip(r, closed, quad):
        print(f"r={x:.4f}  closed={a:.15f}  quadrature={b:.15f}")
    print(f"max abs difference {err:.3e}")
    return EXIT_OK if err <= 1e-10 else 1


def cmd_validate_mesh(path: str) -> int:
    try:
        mesh = load_mesh(path)
    except MeshError as exc:
        print(f"invalid: {exc}")
        return EXIT_MESH
    except OSError as exc:
        print(f"cannot read {path}: {exc}")
        return EXIT_IO
    print(
        f"valid closed surface: V={mesh.n_vertices} E={mesh.n_edges} F={mesh.n_triangles} "
        f"chi={euler_characteristic(mesh)} area={mesh.total_area:.6g} h={mesh.mean_edge_length:.4g}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="otcut", description="Cut locus via optimal transport density.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve and extract the cut locus for a run configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--epsilon", type=float)
    r.add_argument("--mode", choices=["abs", "rel"])
    r.add_argument("--refine", type=int)
    r.add_argument("--out")

    o = sub.add_parser("oracle", help="analytic reference checks")
    osub = o.add_subparsers(dest="oracle", required=True)
    c = osub.add_parser("circle")
    c.add_argument("--n", type=int, default=200)
    osub.add_parser("sphere-check")

    v = sub.add_parser("validate-mesh", help="check that an OFF/OBJ file is a closed oriented surface")
    v.add_argument("path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    if args.command == "run":
        try:
            cfg = oio.load_config(
                args.config,
                {"epsilon": args.epsilon, "mode": args.mode, "refine": args.refine, "out": args.out},
            )
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_run(cfg)
    if args.command == "oracle":
        if args.oracle == "circle":
            return cmd_oracle_circle(args.n)
        return cmd_oracle_sphere()
    return cmd_validate_mesh(args.path)


if __name__ == "__main__":
    sys.exit(main())
