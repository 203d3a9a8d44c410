"""Closed triangulated surfaces: storage, validation, I/O and refinement.

Meshes are immutable numpy-backed containers.  Every constructor path goes
through :func:`validate`, so a ``SurfaceMesh`` in hand is always a closed,
consistently oriented, non-degenerate 2-manifold.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import GeometryError, ParseError, TopologyError

AREA_EPS_FACTOR = 1e-14


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Vertices in R^3 plus oriented triangle connectivity."""

    vertices: np.ndarray
    triangles: np.ndarray
    normal_hints: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices, float).reshape(-1, 3))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int64).reshape(-1, 3))
        if self.normal_hints is not None:
            object.__setattr__(self, "normal_hints", _frozen(self.normal_hints, float).reshape(-1, 3))
        validate(self)

    def __repr__(self):
        return f"SurfaceMesh(n_vertices={self.n_vertices}, n_triangles={self.n_triangles})"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def _edge_data(self):
        t = self.triangles
        half = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
        und = np.sort(half, axis=1)
        edges, inverse = np.unique(und, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1, 3)

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, shape (E, 2), sorted lexicographically."""
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Edge ids of (v0,v1), (v1,v2), (v2,v0) for every triangle."""
        return self._edge_data[1]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    @property
    def mean_edge_length(self) -> float:
        return float(self.edge_lengths.mean())

    @property
    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    @cached_property
    def triangle_neighbors(self) -> np.ndarray:
        """(F, 3) index of the triangle across each of the three edges."""
        te = self.triangle_edges.ravel()
        owner = np.repeat(np.arange(self.n_triangles), 3)
        order = np.argsort(te, kind="stable")
        # every edge appears exactly twice on a closed manifold
        first, second = owner[order[0::2]], owner[order[1::2]]
        other = np.empty(self.n_edges * 2, dtype=np.int64)
        other[0::2], other[1::2] = second, first
        nbr = np.empty_like(owner)
        nbr[order] = other
        return nbr.reshape(-1, 3)


def triangle_areas(vertices, triangles):
    p = vertices[triangles]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def validate(mesh: SurfaceMesh) -> None:
    """Raise if ``mesh`` is not a closed, oriented, non-degenerate surface."""
    v, t = mesh.vertices, mesh.triangles
    if len(v) == 0 or len(t) == 0:
        raise TopologyError("empty mesh")
    if not np.all(np.isfinite(v)):
        raise GeometryError("non-finite vertex coordinates")
    if t.min() < 0 or t.max() >= len(v):
        raise TopologyError("triangle vertex index out of range")
    if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 2] == t[:, 0])):
        raise TopologyError("triangle with repeated vertex index")

    half = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1).reshape(-1, 2)
    und, counts = np.unique(np.sort(half, axis=1), axis=0, return_counts=True)
    if np.any(counts == 1):
        a, b = und[np.argmax(counts == 1)]
        raise TopologyError(f"boundary edge ({a}, {b}): surface is not closed")
    if np.any(counts > 2):
        a, b = und[np.argmax(counts > 2)]
        raise TopologyError(f"non-manifold edge ({a}, {b}) shared by {counts.max()} triangles")
    _, dcounts = np.unique(half, axis=0, return_counts=True)
    if np.any(dcounts > 1):
        raise TopologyError("inconsistent orientation: a directed edge appears twice")

    diag2 = float(np.sum((v.max(axis=0) - v.min(axis=0)) ** 2))
    areas = triangle_areas(v, t)
    bad = np.flatnonzero(areas <= AREA_EPS_FACTOR * diag2)
    if len(bad):
        raise GeometryError(f"degenerate triangle {bad[0]} (area {areas[bad[0]]:.3e})")


def euler_characteristic(mesh: SurfaceMesh) -> int:
    return mesh.n_vertices - mesh.n_edges + mesh.n_triangles


def nearest_vertex(mesh: SurfaceMesh, point) -> int:
    """Index of the vertex closest to ``point``; ties go to the smallest index."""
    d2 = np.sum((mesh.vertices - np.asarray(point, dtype=float)) ** 2, axis=1)
    return int(np.argmin(d2))


# --------------------------------------------------------------------------
# element geometry


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Per-triangle area, unit normal and P1 basis gradients.

    ``grads[t, k]`` is the constant surface gradient of the hat function of
    local vertex ``k`` on triangle ``t``.
    """

    areas: np.ndarray
    normals: np.ndarray
    grads: np.ndarray


def element_geometry(mesh: SurfaceMesh) -> ElementGeometry:
    p = mesh.vertices[mesh.triangles]
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    twice_area = np.linalg.norm(cross, axis=1)
    diag2 = mesh.bbox_diagonal ** 2
    if np.any(0.5 * twice_area <= AREA_EPS_FACTOR * diag2):
        raise GeometryError("degenerate triangle in element_geometry")
    n = cross / twice_area[:, None]
    # grad phi_k = n x (x_{k+2} - x_{k+1}) / (2 area)
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grads = np.cross(n[:, None, :], opp) / twice_area[:, None, None]
    return ElementGeometry(_frozen(0.5 * twice_area, float), _frozen(n, float), _frozen(grads, float))


# --------------------------------------------------------------------------
# refinement


@dataclass(frozen=True, eq=False)
class RefinedPair:
    """Coarse mesh, its 1->4 refinement and the child-to-parent map."""

    coarse: SurfaceMesh
    refined: SurfaceMesh
    parent: np.ndarray
    vertex_embedding: np.ndarray

    def children(self, coarse_index: int) -> np.ndarray:
        return np.arange(4 * coarse_index, 4 * coarse_index + 4)

    @cached_property
    def cell_areas(self) -> np.ndarray:
        """Area of each coarse cell measured on the refined surface."""
        return np.bincount(self.parent, weights=self.refined.areas, minlength=self.coarse.n_triangles)


def conformal_refine(mesh: SurfaceMesh, lift=None) -> RefinedPair:
    """Split every triangle into four through its edge midpoints.

    Midpoints are created once per edge.  With ``lift`` (a surface
    descriptor) the new vertices are projected onto the analytic surface.
    Children of coarse triangle ``T`` are refined triangles ``4T .. 4T+3``.
    """
    nv = mesh.n_vertices
    e = mesh.edges
    mid = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
    if lift is not None:
        from .surfaces import project

        mid = project(lift, mid)
    verts = np.vstack([mesh.vertices, mid])
    a, b, c = mesh.triangles.T
    m_ab, m_bc, m_ca = (mesh.triangle_edges + nv).T
    kids = np.stack(
        [
            np.stack([a, m_ab, m_ca], axis=1),
            np.stack([m_ab, b, m_bc], axis=1),
            np.stack([m_ca, m_bc, c], axis=1),
            np.stack([m_ab, m_bc, m_ca], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3)
    refined = SurfaceMesh(verts, kids)
    parent = np.repeat(np.arange(mesh.n_triangles), 4)
    return RefinedPair(mesh, refined, _frozen(parent, np.int64), _frozen(np.arange(nv), np.int64))


def refine_levels(mesh: SurfaceMesh, levels: int, lift=None) -> SurfaceMesh:
    """Apply ``levels`` lifted conformal refinements and return the fine mesh."""
    for _ in range(levels):
        mesh = conformal_refine(mesh, lift).refined
    return mesh


# --------------------------------------------------------------------------
# file I/O


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_off(text: str) -> SurfaceMesh:
    lines = list(_data_lines(text))
    if not lines or not lines[0][1].startswith("OFF"):
        raise ParseError("missing OFF header")
    head = lines[0][1][3:].split()
    rest = lines[1:]
    if not head:
        if not rest:
            raise ParseError("missing counts line")
        head = rest[0][1].split()
        rest = rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError(f"bad counts line: {' '.join(head)!r}") from None
    if len(rest) < nv + nf:
        raise ParseError(f"expected {nv} vertices and {nf} faces, file has {len(rest)} data lines")
    verts = np.empty((nv, 3))
    for i in range(nv):
        lineno, line = rest[i]
        try:
            verts[i] = [float(x) for x in line.split()[:3]]
        except ValueError:
            raise ParseError(f"line {lineno}: bad vertex {line!r}") from None
    tris = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        lineno, line = rest[nv + i]
        tok = line.split()
        if not tok or tok[0] != "3" or len(tok) < 4:
            raise ParseError(f"line {lineno}: only triangular faces are supported, got {line!r}")
        try:
            tris[i] = [int(x) for x in tok[1:4]]
        except ValueError:
            raise ParseError(f"line {lineno}: bad face {line!r}") from None
    return SurfaceMesh(verts, tris)


def parse_obj(text: str) -> SurfaceMesh:
    verts, tris = [], []
    for lineno, line in _data_lines(text):
        tok = line.split()
        try:
            if tok[0] == "v":
                verts.append([float(x) for x in tok[1:4]])
            elif tok[0] == "f":
                if len(tok) != 4:
                    raise ParseError(f"line {lineno}: only triangular faces are supported")
                tris.append([int(x.split("/")[0]) - 1 for x in tok[1:4]])
        except ValueError:
            raise ParseError(f"line {lineno}: cannot parse {line!r}") from None
    if not verts or not tris:
        raise ParseError("OBJ file has no vertices or faces")
    return SurfaceMesh(np.array(verts), np.array(tris))


def load_mesh(path, fmt: Optional[str] = None) -> SurfaceMesh:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    text = path.read_text()
    if fmt == "off":
        return parse_off(text)
    if fmt == "obj":
        return parse_obj(text)
    raise ParseError(f"unknown mesh format {fmt!r}")


def format_off(mesh: SurfaceMesh) -> str:
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} {mesh.n_edges}"]
    out += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    return "\n".join(out) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_mesh(mesh: SurfaceMesh, path) -> None:
    atomic_write_text(path, format_off(mesh))
