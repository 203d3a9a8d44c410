"""Run configuration and result serialization (legacy VTK, CSV, index lists)."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dmk import DmkConfig, IterationLog
from .errors import ConfigError, DimensionMismatch, IoError
from .mesh import RefinedPair, SurfaceMesh, atomic_write_text

# --------------------------------------------------------------------------
# VTK


def _fmt(x) -> str:
    return repr(float(x))


def vtk_unstructured(mesh: SurfaceMesh, title: str, point_data=(), cell_data=()) -> str:
    """Legacy ASCII VTK unstructured grid of triangles.

    ``point_data`` / ``cell_data`` are sequences of ``(name, values)``;
    integer arrays are written as ``int``, everything else as ``double``.
    """
    nv, nf = mesh.n_vertices, mesh.n_triangles
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {nv} double")
    out += [" ".join(_fmt(x) for x in p) for p in mesh.vertices]
    out.append(f"CELLS {nf} {4 * nf}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {nf}")
    out += ["5"] * nf
    for header, n, data in (("POINT_DATA", nv, point_data), ("CELL_DATA", nf, cell_data)):
        if not data:
            continue
        out.append(f"{header} {n}")
        for name, values in data:
            values = np.asarray(values)
            if values.shape != (n,):
                raise DimensionMismatch(f"field '{name}' has shape {values.shape}, expected ({n},)")
            if np.issubdtype(values.dtype, np.integer):
                out += [f"SCALARS {name} int 1", "LOOKUP_TABLE default"]
                out += [str(int(v)) for v in values]
            else:
                out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                out += [_fmt(v) for v in values]
    return "\n".join(out) + "\n"


def _write(path, text):
    try:
        atomic_write_text(path, text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def export_vtk(pair: RefinedPair, u, grad_norm, mu, mask, out_dir, prefix: str = "") -> Tuple[Path, Path]:
    """Write ``<prefix>refined.vtk`` (potential, grad_norm) and ``<prefix>coarse.vtk``
    (density, cutlocus_mask).

    All field sizes are checked before anything touches the disk.
    """
    out_dir = Path(out_dir)
    mask = np.asarray(mask).astype(np.int64)
    fine = vtk_unstructured(
        pair.refined, "otcut refined mesh", [("potential", u)], [("grad_norm", grad_norm)]
    )
    coarse = vtk_unstructured(
        pair.coarse, "otcut coarse mesh", cell_data=[("density", mu), ("cutlocus_mask", mask)]
    )
    paths = out_dir / f"{prefix}refined.vtk", out_dir / f"{prefix}coarse.vtk"
    _write(paths[0], fine)
    _write(paths[1], coarse)
    return paths


def read_vtk_cell_scalars(path, name: str) -> np.ndarray:
    """Read one CELL_DATA scalar array back from a file written by this module."""
    lines = Path(path).read_text().splitlines()
    in_cells = False
    for k, line in enumerate(lines):
        if line.startswith("CELL_DATA"):
            in_cells, n = True, int(line.split()[1])
        elif line.startswith("POINT_DATA"):
            in_cells = False
        elif in_cells and line.startswith("SCALARS") and line.split()[1] == name:
            typ = int if line.split()[2] == "int" else float
            return np.array([typ(x) for x in lines[k + 2 : k + 2 + n]])
    raise KeyError(name)


def vtk_polylines(curves, title: str = "otcut reference curves") -> str:
    curve_list = getattr(curves, "curves", curves)
    pts = np.vstack(curve_list)
    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET POLYDATA", f"POINTS {len(pts)} double"]
    out += [" ".join(_fmt(x) for x in p) for p in pts]
    size = sum(len(c) + 1 for c in curve_list)
    out.append(f"LINES {len(curve_list)} {size}")
    start = 0
    for c in curve_list:
        out.append(" ".join(map(str, [len(c), *range(start, start + len(c))])))
        start += len(c)
    return "\n".join(out) + "\n"


def write_curves_vtk(curves, path) -> None:
    _write(path, vtk_polylines(curves))


# --------------------------------------------------------------------------
# CSV and index lists


def write_log_csv(log: IterationLog, path) -> None:
    _write(path, log.to_csv())


def write_indices(indices, path) -> None:
    _write(path, "".join(f"{int(i)}\n" for i in indices))


def read_indices(path) -> np.ndarray:
    text = Path(path).read_text().split()
    return np.array([int(t) for t in text], dtype=np.int64)


# --------------------------------------------------------------------------
# run configuration

SURFACE_KINDS = ("sphere", "torus", "ellipsoid", "quartic")
DESCRIPTOR_KEYS = ("radius", "r_max", "r_min", "a", "b", "c")
DMK_KEYS = tuple(DmkConfig.field_names())
MODES = {"abs": "absolute", "absolute": "absolute", "rel": "relative", "relative": "relative"}


@dataclass
class RunConfig:
    surface: Optional[str] = None
    params: dict = field(default_factory=dict)
    resolution: object = 3
    grid: str = "aligned"
    mesh: Optional[str] = None
    source: Optional[Tuple[float, float, float]] = None
    source_vertex: Optional[int] = None
    refine: int = 0
    dmk: DmkConfig = field(default_factory=DmkConfig)
    epsilon: Optional[float] = None
    mode: str = "absolute"
    epsilon_scale: str = "none"
    out: str = "out"
    vtk: bool = True
    csv: bool = True
    indices: bool = True

    def validate(self) -> "RunConfig":
        if (self.surface is None) == (self.mesh is None):
            raise ConfigError("exactly one of 'surface' and 'mesh' must be given")
        if self.surface is not None and self.surface not in SURFACE_KINDS:
            raise ConfigError(f"unknown surface kind {self.surface!r}", key="surface")
        if (self.source is None) == (self.source_vertex is None):
            raise ConfigError("exactly one of 'source' and 'source_vertex' must be given")
        if self.source is not None and len(self.source) != 3:
            raise ConfigError("source must have three coordinates", key="source")
        if self.refine < 0:
            raise ConfigError("refine must be >= 0", key="refine")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError("epsilon must be positive", key="epsilon")
        if self.mode not in ("absolute", "relative"):
            raise ConfigError(f"unknown mode {self.mode!r}", key="mode")
        if self.epsilon_scale not in ("none", "source_quartile"):
            raise ConfigError(f"unknown epsilon_scale {self.epsilon_scale!r}", key="epsilon_scale")
        if self.grid not in ("aligned", "staggered"):
            raise ConfigError(f"unknown grid {self.grid!r}", key="grid")
        return self


_TOP_KEYS = {
    "surface", "resolution", "grid", "mesh", "source", "source_vertex", "refine",
    "epsilon", "mode", "epsilon_scale", "out", "vtk", "csv", "indices",
}


def _key_line(text, key):
    m = re.search(rf"^\s*{re.escape(key)}\s*=", text, flags=re.M)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse a flat TOML run configuration; ``overrides`` (CLI flags) win."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from None
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    cfg = RunConfig()
    dmk = {}

    def fail(key, msg):
        raise ConfigError(msg, line=_key_line(text, key), key=key)

    if "descriptor" in raw and "surface" in raw:
        fail("descriptor", "give either 'descriptor' or 'surface', not both")
    for key, val in raw.items():
        if isinstance(val, dict):
            fail(key, "nested tables are not supported; use flat keys")
        if key == "descriptor":
            key = "surface"
        try:
            if key in DMK_KEYS:
                dmk[key] = val
            elif key in DESCRIPTOR_KEYS:
                cfg.params[key] = float(val)
            elif key == "source":
                cfg.source = tuple(float(x) for x in val)
            elif key == "mode":
                if val not in MODES:
                    fail(key, f"mode must be abs or rel, got {val!r}")
                cfg.mode = MODES[val]
            elif key == "epsilon":
                cfg.epsilon = float(val)
                if not cfg.epsilon > 0:
                    fail(key, "epsilon must be positive")
            elif key in ("refine", "source_vertex"):
                if isinstance(val, bool) or int(val) != val:
                    fail(key, "expected an integer")
                setattr(cfg, key, int(val))
            elif key in ("vtk", "csv", "indices"):
                if not isinstance(val, bool):
                    fail(key, "expected true or false")
                setattr(cfg, key, val)
            elif key == "resolution":
                cfg.resolution = list(val) if isinstance(val, list) else int(val)
            elif key in _TOP_KEYS:
                setattr(cfg, key, str(val))
            else:
                fail(key, f"unknown key '{key}'")
        except (TypeError, ValueError) as exc:
            fail(key, f"bad value {val!r}: {exc}")
    try:
        cfg.dmk = DmkConfig(**dmk)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid DMK setting: {exc}") from None
    try:
        return cfg.validate()
    except ConfigError as exc:
        if exc.key is not None and exc.line is None:
            raise ConfigError(str(exc).split("] ", 1)[-1], line=_key_line(text, exc.key), key=exc.key) from None
        raise


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides)
