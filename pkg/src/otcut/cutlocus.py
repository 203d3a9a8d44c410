"""Threshold extraction of the approximate cut locus and curve comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, EmptyInput
from .mesh import SurfaceMesh


@dataclass(frozen=True, eq=False)
class CutLocusSet:
    triangle_indices: np.ndarray
    threshold_used: float
    mode: str
    component_labels: np.ndarray
    density: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.triangle_indices)

    @property
    def n_components(self) -> int:
        return int(self.component_labels.max()) + 1 if len(self) else 0

    def mask(self, n_triangles: int) -> np.ndarray:
        m = np.zeros(n_triangles, dtype=np.int64)
        m[self.triangle_indices] = 1
        return m

    def issubset(self, other: "CutLocusSet") -> bool:
        return bool(np.all(np.isin(self.triangle_indices, other.triangle_indices)))


@dataclass(frozen=True)
class CurveSet:
    curves: List[np.ndarray]
    names: Optional[List[str]] = None

    def __post_init__(self):
        for c in self.curves:
            c = np.asarray(c)
            if c.ndim != 2 or c.shape[1] != 3 or len(c) < 2:
                raise ValueError("each curve needs at least two 3-D points")
            if np.any(np.linalg.norm(np.diff(c, axis=0), axis=1) == 0):
                raise ValueError("consecutive curve points must be distinct")

    def __getitem__(self, name) -> np.ndarray:
        return self.curves[self.names.index(name)]

    @property
    def points(self) -> np.ndarray:
        return np.vstack(self.curves)


def threshold(mu, epsilon: float, mode: str = "absolute") -> float:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    mode = _mode(mode)
    return float(epsilon * np.median(mu)) if mode == "relative" else float(epsilon)


def _mode(mode):
    mode = {"abs": "absolute", "rel": "relative"}.get(mode, mode)
    if mode not in ("absolute", "relative"):
        raise ValueError(f"unknown extraction mode {mode!r}")
    return mode


def triangle_components(mesh: SurfaceMesh, selected) -> np.ndarray:
    """Component id of each selected triangle under edge adjacency."""
    selected = np.asarray(selected, dtype=np.int64)
    if len(selected) == 0:
        return np.zeros(0, dtype=np.int64)
    local = np.full(mesh.n_triangles, -1)
    local[selected] = np.arange(len(selected))
    nbr = local[mesh.triangle_neighbors[selected]]
    rows = np.repeat(np.arange(len(selected)), 3)
    keep = nbr.ravel() >= 0
    adj = sp.coo_matrix(
        (np.ones(keep.sum()), (rows[keep], nbr.ravel()[keep])), shape=(len(selected),) * 2
    )
    _, labels = connected_components(adj, directed=False)
    return labels.astype(np.int64)


def extract(mu, mesh: SurfaceMesh, epsilon: float, mode: str = "absolute") -> CutLocusSet:
    """Coarse triangles whose density is at most the threshold.

    ``absolute`` compares with ``epsilon`` directly, ``relative`` with
    ``epsilon * median(mu)``.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (mesh.n_triangles,):
        raise DimensionMismatch("density does not match the coarse mesh")
    mode = _mode(mode)
    thr = threshold(mu, epsilon, mode)
    idx = np.flatnonzero(mu <= thr)
    snap = mu.copy()
    snap.setflags(write=False)
    return CutLocusSet(idx, thr, mode, triangle_components(mesh, idx), snap)


def densify(curve, spacing: float) -> np.ndarray:
    """Resample a polyline so that consecutive points are at most ``spacing`` apart."""
    curve = np.asarray(curve, dtype=float)
    out = [curve[:1]]
    for a, b in zip(curve[:-1], curve[1:]):
        k = max(1, int(np.ceil(np.linalg.norm(b - a) / spacing)))
        t = np.arange(1, k + 1)[:, None] / k
        out.append(a + t * (b - a))
    return np.vstack(out)


def curve_coverage(cut: CutLocusSet, mesh: SurfaceMesh, curve, radius: Optional[float] = None) -> float:
    """Fraction of curve sample points within ``radius`` of an included centroid.

    ``radius`` defaults to twice the mean edge length.
    """
    if len(cut) == 0:
        return 0.0
    radius = 2.0 * mesh.mean_edge_length if radius is None else radius
    tree = cKDTree(mesh.centroids[cut.triangle_indices])
    d, _ = tree.query(np.asarray(curve, dtype=float))
    return float(np.mean(d <= radius))


def max_centroid_distance(cut: CutLocusSet, mesh: SurfaceMesh, curves: Sequence) -> float:
    h = mesh.mean_edge_length
    pts = np.vstack([densify(c, h / 20.0) for c in curves])
    d, _ = cKDTree(pts).query(mesh.centroids[cut.triangle_indices])
    return float(d.max())


def distance_to_curves(cut: CutLocusSet, mesh: SurfaceMesh, curves) -> tuple:
    """Return (max centroid-to-curve distance, curve coverage fraction).

    Distances are chordal in R^3.  Coverage counts the original sample
    points of all curves within twice the mean edge length of the set.
    """
    curve_list = curves.curves if isinstance(curves, CurveSet) else list(curves)
    if len(cut) == 0 or not curve_list:
        raise EmptyInput("need a nonempty set and at least one curve")
    pts = np.vstack(curve_list)
    return max_centroid_distance(cut, mesh, curve_list), curve_coverage(cut, mesh, pts)
