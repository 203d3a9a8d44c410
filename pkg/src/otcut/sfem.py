"""P0-density / P1-potential surface finite elements.

The density lives on the coarse triangles of a :class:`RefinedPair`, the
potential on the vertices of its refinement.  The weighted stiffness matrix
is linear in the density, so the sparsity pattern and the per-entry
coefficients are precomputed once and each assembly is a sparse mat-vec.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, NoConvergence
from .mesh import ElementGeometry, RefinedPair, element_geometry, nearest_vertex


@dataclass(frozen=True)
class SourceSpec:
    """Dirac source of mass ``total_mass`` lumped on one refined vertex."""

    source_vertex: int
    total_mass: float

    def __post_init__(self):
        if not self.total_mass > 0:
            raise ValueError("total_mass must be positive")


def make_source(pair: RefinedPair, point=None, vertex: Optional[int] = None) -> SourceSpec:
    """Place the source at ``vertex`` or at the refined vertex nearest ``point``.

    The total mass equals the area of the refined surface so that source and
    uniform sink balance.
    """
    if (point is None) == (vertex is None):
        raise ValueError("give exactly one of point or vertex")
    if vertex is None:
        vertex = nearest_vertex(pair.refined, point)
    if not 0 <= vertex < pair.refined.n_vertices:
        raise ValueError(f"source vertex {vertex} out of range")
    return SourceSpec(int(vertex), pair.refined.total_area)


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    ground: int


class StiffnessAssembler:
    """Precomputed map from a coarse density to the refined stiffness matrix."""

    def __init__(self, pair: RefinedPair, geom: Optional[ElementGeometry] = None):
        geom = geom if geom is not None else element_geometry(pair.refined)
        tri = pair.refined.triangles
        n = pair.refined.n_vertices
        if len(geom.areas) != len(tri):
            raise DimensionMismatch("geometry does not match the refined mesh")
        local = geom.areas[:, None, None] * np.einsum("tid,tjd->tij", geom.grads, geom.grads)
        rows = np.broadcast_to(tri[:, :, None], local.shape).ravel()
        cols = np.broadcast_to(tri[:, None, :], local.shape).ravel()
        keys, slot = np.unique(rows * n + cols, return_inverse=True)
        owner = np.repeat(pair.parent, 9)
        self.n = n
        self.n_coarse = pair.coarse.n_triangles
        self.weights = sp.csr_matrix(
            (local.ravel(), (slot.ravel(), owner)), shape=(len(keys), self.n_coarse)
        )
        self.indices = (keys % n).astype(np.int32)
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(keys // n, minlength=n))]).astype(np.int32)

    def __call__(self, mu) -> sp.csr_matrix:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.n_coarse,):
            raise DimensionMismatch(f"density has shape {mu.shape}, expected ({self.n_coarse},)")
        data = self.weights @ mu
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=(self.n, self.n))


def assemble_stiffness(pair: RefinedPair, geom: ElementGeometry, mu) -> sp.csr_matrix:
    """A_ij = sum_t mu[parent(t)] area(t) grad phi_i . grad phi_j on the refined mesh."""
    return StiffnessAssembler(pair, geom)(mu)


def lumped_areas(mesh) -> np.ndarray:
    return np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3.0, 3), minlength=mesh.n_vertices)


def assemble_rhs(pair: RefinedPair, geom: ElementGeometry, src: SourceSpec) -> np.ndarray:
    """Dirac source minus the one-third-area lumped uniform sink."""
    b = -lumped_areas(pair.refined)
    b[src.source_vertex] += src.total_mass
    return b


class SolveResult(NamedTuple):
    u: np.ndarray
    iterations: int
    residual: float


def _preconditioner(A, kind):
    if isinstance(kind, spla.LinearOperator):
        return kind
    if kind == "lu":
        lu = spla.splu(
            A.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
        return spla.LinearOperator(A.shape, lu.solve, dtype=float)
    if kind == "amg":
        import pyamg

        return pyamg.smoothed_aggregation_solver(A.tocsr()).aspreconditioner(cycle="V")
    if kind == "jacobi":
        d = 1.0 / A.diagonal()
        return spla.LinearOperator(A.shape, lambda x: d * x, dtype=float)
    raise ValueError(f"unknown preconditioner {kind!r}")


def relative_residual(A, b, u) -> float:
    """||A u - b|| / ||b|| with the residual projected off constants."""
    bn = np.linalg.norm(b)
    if bn == 0:
        return float(np.linalg.norm(A @ u))
    r = A @ u - b
    r -= r.mean()
    return float(np.linalg.norm(r) / bn)


def solve_grounded(
    system: LinearSystem,
    rel_tol: float = 1e-9,
    max_iter: int = 1000,
    x0=None,
    preconditioner="lu",
) -> SolveResult:
    """Preconditioned CG on the system with the ground vertex pinned to 0.

    ``preconditioner`` is ``"lu"``, ``"amg"``, ``"jacobi"`` or a ready
    operator for the grounded (reduced) matrix, e.g. one built by
    :func:`grounded_preconditioner` for an earlier density.
    """
    A, b, g = system.matrix, np.asarray(system.rhs, dtype=float), system.ground
    n = A.shape[0]
    if b.shape != (n,):
        raise DimensionMismatch("right-hand side does not match the matrix")
    u = np.zeros(n)
    if not np.any(b):
        return SolveResult(u, 0, 0.0)
    free = np.delete(np.arange(n), g)
    A_red = A[free][:, free]
    b_red = b[free]
    if x0 is not None:
        # only differences to the ground value matter
        x0 = np.asarray(x0, dtype=float)
        x0 = (x0 - x0[g])[free]
    M = _preconditioner(A_red, preconditioner)
    count = [0]

    def tick(_):
        count[0] += 1

    target = rel_tol * np.linalg.norm(b)
    res = np.inf
    for _ in range(3):
        x, _info = spla.cg(
            A_red, b_red, x0=x0, rtol=0.0, atol=0.5 * target,
            maxiter=max(max_iter - count[0], 1), M=M, callback=tick,
        )
        u[free] = x
        res = relative_residual(A, b, u)
        if res <= rel_tol or count[0] >= max_iter:
            break
        x0 = x
    if not res <= rel_tol:
        raise NoConvergence(f"relative residual {res:.3e} > {rel_tol:.1e} after {count[0]} CG iterations")
    return SolveResult(u, count[0], res)


def grounded_preconditioner(system: LinearSystem, kind: str = "lu") -> spla.LinearOperator:
    """Preconditioner for ``system`` with its ground row and column removed."""
    free = np.delete(np.arange(system.matrix.shape[0]), system.ground)
    return _preconditioner(system.matrix[free][:, free], kind)


def gradients(pair: RefinedPair, geom: ElementGeometry, u) -> np.ndarray:
    """Constant surface gradient of the P1 field ``u`` on each refined triangle."""
    return np.einsum("tk,tkd->td", np.asarray(u)[pair.refined.triangles], geom.grads)


def gradient_norms(pair: RefinedPair, geom: ElementGeometry, u) -> np.ndarray:
    return np.linalg.norm(gradients(pair, geom, u), axis=1)


def aggregate_to_coarse(values, pair: RefinedPair) -> np.ndarray:
    """Area-weighted mean of the four children of every coarse triangle."""
    w = pair.refined.areas
    return np.bincount(pair.parent, weights=w * values, minlength=pair.coarse.n_triangles) / pair.cell_areas
