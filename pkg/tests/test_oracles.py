import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from otcut.errors import DisconnectedMesh, DomainError, ParameterError
from otcut.mesh import SurfaceMesh
from otcut.oracles import (
    calibrate_distance,
    circle_density,
    circle_dmk_1d,
    circle_potential,
    graph_distance,
    sphere_density,
    sphere_density_quadrature,
    torus_alpha,
    torus_reference_curves,
)
from otcut.surfaces import Torus, generate_mesh, icosphere, residual


def test_circle_reference_shapes():
    phi = np.array([-np.pi, -1.0, 0.0, 2.0])
    assert np.allclose(circle_density(phi), [0, np.pi - 1, np.pi, np.pi - 2])
    assert np.allclose(circle_potential(phi), [-np.pi, -1, 0, -2])


@pytest.fixture(scope="module")
def circle_errors():
    out = {}
    for n in (8, 32, 128, 512):
        sol = circle_dmk_1d(n)
        assert sol.log.converged
        out[n] = np.max(np.abs(sol.mu - circle_density(sol.phi_mid))) / np.pi
    return out


def test_circle_error_shrinks_with_resolution(circle_errors):
    errs = [circle_errors[n] for n in sorted(circle_errors)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.01


def test_circle_antipode_potential():
    sol = circle_dmk_1d(200)
    k = np.argmin(np.abs(np.abs(sol.phi_nodes) - np.pi))
    assert abs(sol.u[k] + np.pi) <= 0.02 * np.pi
    assert sol.u[0] == 0.0


def test_circle_mass_matches_pi_squared():
    sol = circle_dmk_1d(256)
    assert np.sum(sol.mu) * 2 * np.pi / 256 == pytest.approx(np.pi**2, rel=0.01)


def test_sphere_density_values():
    assert sphere_density(np.pi / 2) == pytest.approx(1.0)
    assert sphere_density(np.pi / 3) == pytest.approx(np.sqrt(3))
    r = np.linspace(np.pi / 2, np.pi - 1e-3, 100)
    assert np.all(np.diff(sphere_density(r)) < 0)
    assert sphere_density(np.pi - 1e-6) < 1e-5
    with pytest.raises(DomainError):
        sphere_density(0.0)
    with pytest.raises(DomainError):
        sphere_density(4.0)


def test_sphere_density_against_quadrature():
    r = np.linspace(0.05, np.pi - 0.05, 20)
    quad = np.array([sphere_density_quadrature(x) for x in r])
    assert np.max(np.abs(sphere_density(r) - quad)) <= 1e-10


def test_torus_alpha():
    assert torus_alpha(2, 1) == pytest.approx(np.pi / np.sqrt(3))
    assert torus_alpha(2, 1) == pytest.approx(1.8138, abs=1e-4)


def test_torus_reference_curves_lie_on_torus_and_hit_known_points():
    cs = torus_reference_curves(2, 1)
    assert cs.names == ["inner_equator", "opposite_meridian", "outer_arc"]
    pts = cs.points
    assert np.max(np.abs(residual(Torus(2, 1), pts))) < 1e-12
    a = torus_alpha(2, 1)
    for q in ([1, 0, 0], [-1, 0, 0], [-3, 0, 0], [3 * np.cos(a), -3 * np.sin(a), 0], [3 * np.cos(a), 3 * np.sin(a), 0]):
        assert np.min(np.linalg.norm(pts - q, axis=1)) < 1e-9
    # the arc stays on the far side of the source
    arc = cs["outer_arc"]
    assert np.all(arc[:, 0] <= 3 * np.cos(a) + 1e-12)
    with pytest.raises(ParameterError):
        torus_reference_curves(2, 1, p=[0, 0, 1])
    with pytest.raises(ParameterError):
        torus_reference_curves(2, 1, n_samples=10)


def test_graph_distance_matches_scipy():
    m = generate_mesh(Torus(2, 1), (20, 10))
    e = m.edges
    w = np.linalg.norm(m.vertices[e[:, 0]] - m.vertices[e[:, 1]], axis=1)
    G = sp.coo_matrix((w, (e[:, 0], e[:, 1])), shape=(m.n_vertices,) * 2)
    ref = dijkstra(G, directed=False, indices=5)
    assert np.allclose(graph_distance(m, 5), ref, rtol=1e-14)


def test_graph_distance_antipode_on_icosphere():
    m = icosphere(3)
    d = graph_distance(m, 0)
    anti = int(np.argmin(m.vertices @ m.vertices[0]))
    assert np.pi <= d[anti] <= 1.1 * np.pi


def test_graph_distance_disconnected():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    two = SurfaceMesh(np.vstack([v, v + 10]), np.vstack([f, np.array(f) + 4]))
    with pytest.raises(DisconnectedMesh):
        graph_distance(two, 0)


def test_calibration():
    d = np.array([0.0, 1.0, 4.0])
    assert np.allclose(calibrate_distance(d, np.pi), [0, np.pi / 4, np.pi])
