"""Analytic surface descriptors: implicit residuals, projection, meshing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import ParameterError, ProjectionError, UnsupportedDescriptor
from .mesh import SurfaceMesh, conformal_refine

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50


@dataclass(frozen=True)
class Sphere:
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError("sphere radius must be positive")

    @property
    def scale(self):
        return self.radius

    def residual(self, x):
        return np.linalg.norm(x, axis=-1) - self.radius

    def gradient(self, x):
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def project(self, x):
        return self.radius * x / np.linalg.norm(x, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Torus:
    """Torus of revolution about the z axis.

    ``r_max`` is the distance from the axis to the tube centre line and
    ``r_min`` the tube radius, so the outer equator has radius
    ``r_max + r_min``.
    """

    r_max: float = 2.0
    r_min: float = 1.0

    def __post_init__(self):
        if not (self.r_max > self.r_min > 0):
            raise ParameterError("torus needs r_max > r_min > 0")

    @property
    def scale(self):
        return self.r_max + self.r_min

    def residual(self, x):
        rho = np.hypot(x[..., 0], x[..., 1])
        return (rho - self.r_max) ** 2 + x[..., 2] ** 2 - self.r_min**2

    def gradient(self, x):
        rho = np.hypot(x[..., 0], x[..., 1])
        f = 2.0 * (rho - self.r_max) / rho
        return np.stack([f * x[..., 0], f * x[..., 1], 2.0 * x[..., 2]], axis=-1)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        rho = np.hypot(x[..., 0], x[..., 1])
        if np.any(rho == 0):
            raise ProjectionError("point on the torus axis has no unique projection")
        centre = np.zeros_like(x)
        centre[..., 0] = self.r_max * x[..., 0] / rho
        centre[..., 1] = self.r_max * x[..., 1] / rho
        d = x - centre
        nd = np.linalg.norm(d, axis=-1, keepdims=True)
        if np.any(nd == 0):
            raise ProjectionError("point on the torus centre circle has no unique projection")
        return centre + self.r_min * d / nd


@dataclass(frozen=True)
class Ellipsoid:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.c > 0):
            raise ParameterError("ellipsoid semi-axes must be positive")

    @property
    def axes(self):
        return np.array([self.a, self.b, self.c])

    @property
    def scale(self):
        return 1.0

    def residual(self, x):
        return np.sum((x / self.axes) ** 2, axis=-1) - 1.0

    def gradient(self, x):
        return 2.0 * x / self.axes**2

    def project(self, x):
        return newton_project(self, x)


@dataclass(frozen=True)
class Quartic:
    """The surface x^4 + y^4 + z^4 = 1."""

    @property
    def scale(self):
        return 1.0

    def residual(self, x):
        return np.sum(x**4, axis=-1) - 1.0

    def gradient(self, x):
        return 4.0 * x**3

    def project(self, x):
        return newton_project(self, x)


@dataclass(frozen=True, eq=False)
class Implicit:
    """User supplied level set ``residual(x) = 0`` with its gradient."""

    residual_fn: Callable
    gradient_fn: Callable
    seed: Optional[SurfaceMesh] = None
    scale: float = 1.0

    def residual(self, x):
        return self.residual_fn(x)

    def gradient(self, x):
        return self.gradient_fn(x)

    def project(self, x):
        return newton_project(self, x)


SurfaceDescriptor = Union[Sphere, Torus, Ellipsoid, Quartic, Implicit]


def residual(desc: SurfaceDescriptor, x):
    return desc.residual(np.asarray(x, dtype=float))


def project(desc: SurfaceDescriptor, x):
    return desc.project(np.asarray(x, dtype=float))


def newton_project(desc, x, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Damped Newton iteration along the implicit-function gradient.

    Each step is ``x <- x - t F(x) grad F / |grad F|^2`` with ``t`` halved
    until |F| decreases.  Points already within ``tol`` are returned as is.
    """
    x = np.array(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    tol = tol * desc.scale
    f = desc.residual(x)
    active = np.abs(f) >= tol
    for _ in range(max_iter):
        if not active.any():
            break
        xa, fa = x[active], f[active]
        g = desc.gradient(xa)
        step = (fa / np.sum(g * g, axis=-1))[:, None] * g
        t = np.ones(len(xa))
        for _ in range(30):
            trial = xa - t[:, None] * step
            ft = desc.residual(trial)
            worse = np.abs(ft) >= np.abs(fa)
            if not worse.any():
                break
            t[worse] *= 0.5
        x[active], f[active] = trial, ft
        active = np.abs(f) >= tol
    if active.any():
        raise ProjectionError(
            f"Newton projection did not converge for {active.sum()} point(s) in {max_iter} iterations"
        )
    return x[0] if single else x


# --------------------------------------------------------------------------
# mesh generation


def icosahedron() -> SurfaceMesh:
    t = (1.0 + 5.0**0.5) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    return SurfaceMesh(v, f)


def icosphere(subdivisions: int, radius: float = 1.0) -> SurfaceMesh:
    mesh = icosahedron()
    unit = Sphere(1.0)
    for _ in range(subdivisions):
        mesh = conformal_refine(mesh, unit).refined
    if radius != 1.0:
        mesh = SurfaceMesh(radius * mesh.vertices, mesh.triangles)
    return mesh


def torus_grid(
    r_max: float, r_min: float, n_major: int, n_minor: int, stagger: bool = False, phase: float = 0.0
) -> SurfaceMesh:
    """Structured torus: ``n_major`` x ``n_minor`` angular grid, quads split in two.

    Vertex ``(i, j)`` sits at azimuth ``2 pi i / n_major`` and tube angle
    ``2 pi (j + phase) / n_minor`` (tube angle 0 on the outer equator).
    With ``stagger`` every odd ring is rotated by half a cell in azimuth,
    which turns the quads into near-equilateral triangle pairs; it needs an
    even ``n_minor``.
    """
    if n_major < 3 or n_minor < 3:
        raise ParameterError("torus grid needs at least 3 samples per direction")
    if stagger and n_minor % 2:
        raise ParameterError("a staggered torus grid needs an even n_minor")
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    shift = 0.5 * (j % 2) if stagger else 0.0
    T = 2 * np.pi * (i + shift) / n_major
    P = 2 * np.pi * (j + phase) / n_minor
    ring = r_max + r_min * np.cos(P)
    v = np.stack([ring * np.cos(T), ring * np.sin(T), r_min * np.sin(P)], axis=-1).reshape(-1, 3)
    i, j = i.ravel(), j.ravel()
    ip, jp = (i + 1) % n_major, (j + 1) % n_minor
    v00, v10 = i * n_minor + j, ip * n_minor + j
    v11, v01 = ip * n_minor + jp, i * n_minor + jp
    if stagger:
        # even rings: split along (i+1, j)-(i, j+1); odd rings: along (i, j)-(i+1, j+1)
        odd = (j % 2).astype(bool)
        t1 = np.where(odd[:, None], np.stack([v00, v10, v11], 1), np.stack([v00, v10, v01], 1))
        t2 = np.where(odd[:, None], np.stack([v00, v11, v01], 1), np.stack([v10, v11, v01], 1))
    else:
        t1, t2 = np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)
    return SurfaceMesh(v, np.concatenate([t1, t2]))


def generate_mesh(desc: SurfaceDescriptor, resolution) -> SurfaceMesh:
    """Closed mesh of ``desc`` with every vertex on the surface.

    ``resolution`` is the icosphere subdivision count for sphere-like
    surfaces; for the torus it is the grid size, either one integer for a
    square grid or an ``(n_major, n_minor)`` pair.
    """
    if isinstance(desc, Torus):
        if np.ndim(resolution) == 0:
            resolution = (int(resolution), int(resolution))
        n_major, n_minor = (int(r) for r in resolution)
        return torus_grid(desc.r_max, desc.r_min, n_major, n_minor)
    resolution = int(resolution)
    if resolution < 0:
        raise ParameterError("resolution must be non-negative")
    if isinstance(desc, Sphere):
        return icosphere(resolution, desc.radius)
    if isinstance(desc, Ellipsoid):
        base = icosphere(resolution)
        return SurfaceMesh(desc.project(base.vertices * desc.axes), base.triangles)
    if isinstance(desc, Quartic):
        base = icosphere(resolution)
        x = base.vertices
        x = x / np.sum(x**4, axis=1, keepdims=True) ** 0.25
        return SurfaceMesh(desc.project(x), base.triangles)
    if isinstance(desc, Implicit):
        if desc.seed is None:
            raise UnsupportedDescriptor("implicit descriptor needs a seed mesh")
        return SurfaceMesh(desc.project(desc.seed.vertices), desc.seed.triangles)
    raise UnsupportedDescriptor(f"cannot mesh {desc!r}")


def make_descriptor(kind: str, **params) -> SurfaceDescriptor:
    kind = kind.lower()
    try:
        if kind == "sphere":
            return Sphere(float(params.get("radius", 1.0)))
        if kind == "torus":
            return Torus(float(params.get("r_max", 2.0)), float(params.get("r_min", 1.0)))
        if kind == "ellipsoid":
            return Ellipsoid(float(params["a"]), float(params["b"]), float(params["c"]))
        if kind == "quartic":
            return Quartic()
    except KeyError as exc:
        raise ParameterError(f"{kind} descriptor is missing parameter {exc.args[0]}") from None
    raise UnsupportedDescriptor(f"unknown surface kind {kind!r}")
