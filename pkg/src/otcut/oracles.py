"""Independent references for validating the solver.

Closed forms on the circle and the unit sphere, the analytic cut locus of a
point on the outer equator of a torus, Dijkstra edge-path distances and a
dense element-by-element stiffness assembly.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from .cutlocus import CurveSet
from .dmk import DmkConfig, IterationLog, LogRecord, update_density
from .errors import DisconnectedMesh, DomainError, ParameterError
from .mesh import RefinedPair, SurfaceMesh
from .sfem import LinearSystem, solve_grounded


# --------------------------------------------------------------------------
# circle


def circle_potential(phi):
    """Exact Kantorovich potential -|phi| on the unit circle, phi in (-pi, pi]."""
    return -np.abs(phi)


def circle_density(phi):
    """Exact transport density pi - |phi| on the unit circle."""
    return np.pi - np.abs(phi)


@dataclass
class CircleSolution:
    phi_nodes: np.ndarray
    u: np.ndarray
    phi_mid: np.ndarray
    mu: np.ndarray
    log: IterationLog


def _wrap(phi):
    return np.where(phi > np.pi, phi - 2 * np.pi, phi)


def circle_dmk_1d(n_segments: int, cfg: DmkConfig = DmkConfig()) -> CircleSolution:
    """DMK on a circle of circumference 2 pi cut into ``n_segments`` equal arcs.

    P1 potential on the nodes, P0 density on the segments, mass 2 pi at
    node 0 and a uniform sink.  Uses the same density update and grounded
    solver as the surface iteration.
    """
    n = int(n_segments)
    if n < 8:
        raise ParameterError("need at least 8 segments")
    h = 2 * np.pi / n
    nodes = np.arange(n)
    seg_a, seg_b = nodes, (nodes + 1) % n
    phi_nodes = _wrap(h * nodes)
    phi_mid = _wrap(h * (nodes + 0.5))
    rows = np.concatenate([seg_a, seg_b, seg_a, seg_b])
    cols = np.concatenate([seg_a, seg_b, seg_b, seg_a])
    sign = np.concatenate([np.ones(2 * n), -np.ones(2 * n)])

    def stiffness(mu):
        data = np.tile(mu, 4) * sign / h
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    b = np.full(n, -h)
    b[0] += 2 * np.pi
    floor = cfg.floor_for(2.0)

    def solve(mu, x0=None):
        return solve_grounded(LinearSystem(stiffness(mu), b, 0), cfg.linear_rel_tol, 10 * n, x0, cfg.preconditioner)

    def lyap(mu, u):
        g = (u[seg_b] - u[seg_a]) / h
        energy = 0.5 * float(np.sum(mu * g * g * h))
        mass = 0.5 * float(np.sum(mu * h))
        return energy + mass, energy, mass

    mu = np.full(n, float(cfg.mu_init))
    sol = solve(mu)
    log = IterationLog()

    def record(step, mu, u, change, iters):
        L, E, M = lyap(mu, u)
        log.records.append(LogRecord(step, L, E, M, change, float(mu.min()), float(mu.max()), iters))

    record(0, mu, sol.u, np.inf, sol.iterations)
    u = sol.u
    for step in range(1, cfg.max_steps + 1):
        q = np.abs(u[seg_b] - u[seg_a]) / h
        new = update_density(mu, q, cfg.delta_t, floor)
        change = float(np.max(np.abs(new - mu) / mu))
        mu = new
        sol = solve(mu, u)
        u = sol.u
        record(step, mu, u, change, sol.iterations)
        if change <= cfg.conv_tol:
            log.converged = True
            break
    return CircleSolution(phi_nodes, u, phi_mid, mu, log)


# --------------------------------------------------------------------------
# sphere


def sphere_density(r):
    """Transport density (1 + cos r) / sin r on the unit sphere at geodesic radius r."""
    r = np.asarray(r, dtype=float)
    if np.any((r <= 0) | (r >= np.pi)):
        raise DomainError("geodesic radius must lie in (0, pi)")
    return (1.0 + np.cos(r)) / np.sin(r)


def sphere_density_quadrature(r, cut_time=np.pi):
    """Polar-coordinate density formula evaluated by adaptive quadrature.

    With the area factor G(s) = sin(s)/s of the unit sphere in geodesic
    polar coordinates and d = 2, the density at radius r is
    ``1 / (G(r) r) * int_r^T G(s) s ds``.
    """
    def G(s):
        return np.sinc(s / np.pi)

    val, _ = quad(lambda s: G(s) * s, r, cut_time, epsabs=1e-13, epsrel=1e-13)
    return val / (G(r) * r)


# --------------------------------------------------------------------------
# torus


def torus_alpha(r_max: float, r_min: float) -> float:
    R = r_max + r_min
    return np.pi * r_min / np.sqrt(R * r_min)


def torus_reference_curves(r_max: float, r_min: float, p=None, n_samples: int = 256) -> CurveSet:
    """Cut locus of a point ``p`` on the outer equator of a z-axis torus.

    Three families: the inner equator, the meridian opposite ``p`` and the
    outer-equator arc between azimuths ``theta_p + alpha`` and
    ``theta_p + 2 pi - alpha`` (the arc on the far side from ``p``).
    """
    if not (r_max > r_min > 0):
        raise ParameterError("torus needs r_max > r_min > 0")
    R = r_max + r_min
    p = np.array([R, 0.0, 0.0]) if p is None else np.asarray(p, dtype=float)
    rho = np.hypot(p[0], p[1])
    if abs(rho - R) > 1e-9 * R or abs(p[2]) > 1e-9 * R:
        raise ParameterError("p must lie on the outer equator")
    if n_samples < 256:
        raise ParameterError("use at least 256 samples per curve")
    th_p = np.arctan2(p[1], p[0])
    alpha = torus_alpha(r_max, r_min)

    def ring(radius, theta, z=0.0):
        return np.stack([radius * np.cos(theta), radius * np.sin(theta), np.full_like(theta, z)], axis=1)

    closed = 2 * np.pi * np.arange(n_samples + 1) / n_samples
    closed[-1] = 0.0
    inner = ring(r_max - r_min, closed[:-1])
    inner = np.vstack([inner, inner[:1]])
    th_m = th_p + np.pi
    phi = closed[:-1]
    mer = np.stack(
        [
            (r_max + r_min * np.cos(phi)) * np.cos(th_m),
            (r_max + r_min * np.cos(phi)) * np.sin(th_m),
            r_min * np.sin(phi),
        ],
        axis=1,
    )
    mer = np.vstack([mer, mer[:1]])
    arc = ring(R, th_p + np.linspace(alpha, 2 * np.pi - alpha, n_samples))
    return CurveSet([inner, mer, arc], ["inner_equator", "opposite_meridian", "outer_arc"])


# --------------------------------------------------------------------------
# graph distance


def graph_distance(mesh: SurfaceMesh, source_vertex: int) -> np.ndarray:
    """Dijkstra distance along mesh edges with Euclidean edge lengths."""
    n = mesh.n_vertices
    e, w = mesh.edges, mesh.edge_lengths
    order = np.argsort(np.concatenate([e[:, 0], e[:, 1]]), kind="stable")
    nbr = np.concatenate([e[:, 1], e[:, 0]])[order]
    wt = np.concatenate([w, w])[order]
    start = np.searchsorted(np.concatenate([e[:, 0], e[:, 1]])[order], np.arange(n + 1))
    dist = np.full(n, np.inf)
    dist[source_vertex] = 0.0
    done = np.zeros(n, dtype=bool)
    heap = [(0.0, int(source_vertex))]
    while heap:
        d, i = heapq.heappop(heap)
        if done[i]:
            continue
        done[i] = True
        for k in range(start[i], start[i + 1]):
            j = nbr[k]
            nd = d + wt[k]
            if nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, int(j)))
    if not done.all():
        raise DisconnectedMesh(f"{(~done).sum()} vertices unreachable from {source_vertex}")
    return dist


def calibrate_distance(d, true_max: float) -> np.ndarray:
    """Rescale edge-path distances so that their maximum equals ``true_max``."""
    d = np.asarray(d, dtype=float)
    return d * (true_max / d.max())


# --------------------------------------------------------------------------
# brute-force assembly


def dense_stiffness(pair: RefinedPair, mu) -> np.ndarray:
    """Density-weighted P1 stiffness matrix built triangle by triangle.

    Each triangle is mapped to local 2-D coordinates and the hat-function
    gradients come from inverting the 2x2 Jacobian of the reference map.
    """
    mesh = pair.refined
    n = mesh.n_vertices
    A = np.zeros((n, n))
    ref_grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    for t, tri in enumerate(mesh.triangles):
        x0, x1, x2 = mesh.vertices[tri]
        e1 = x1 - x0
        ex = e1 / np.linalg.norm(e1)
        w = (x2 - x0) - np.dot(x2 - x0, ex) * ex
        ey = w / np.linalg.norm(w)
        J = np.array([[np.dot(e1, ex), np.dot(x2 - x0, ex)], [np.dot(e1, ey), np.dot(x2 - x0, ey)]])
        area = 0.5 * abs(np.linalg.det(J))
        G = ref_grads @ np.linalg.inv(J)
        K = mu[pair.parent[t]] * area * (G @ G.T)
        for a in range(3):
            for b in range(3):
                A[tri[a], tri[b]] += K[a, b]
    return A
