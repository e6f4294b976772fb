"""Triangle meshes of planar domains with a curved boundary."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class PlanarMesh:
    """Vertices, counter-clockwise triangles and the ordered boundary loop.

    ``boundary`` lists vertex indices counter-clockwise around the domain and
    ``boundary_curvature`` the signed curvature of the generating curve there.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    boundary_curvature: np.ndarray
    descriptor: dict = field(default_factory=dict)

    @property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def min_angle(self) -> float:
        """Smallest interior angle in degrees."""
        p = self.vertices[self.triangles]
        worst = np.inf
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            worst = min(worst, float(np.degrees(np.arccos(np.clip(cos, -1, 1))).min()))
        return worst

    def boundary_weights(self) -> np.ndarray:
        """Trapezoid weights of the closed boundary polyline."""
        p = self.vertices[self.boundary]
        edge = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
        return 0.5 * (edge + np.roll(edge, 1))

    def vertex_mass(self) -> np.ndarray:
        """Lumped mass: a third of each incident triangle's area."""
        m = np.zeros(len(self.vertices))
        np.add.at(m, self.triangles.ravel(), np.repeat(self.areas / 3, 3))
        return m


def _ring_points(rings: int):
    """Concentric rings of the unit disk, ``6k`` points on ring ``k``."""
    pts = [np.zeros((1, 2))]
    for k in range(1, rings + 1):
        m = 6 * k
        t = 2 * np.pi * (np.arange(m) + 0.5 * (k % 2)) / m
        pts.append(k / rings * np.column_stack([np.cos(t), np.sin(t)]))
    return np.vstack(pts), t


def _from_unit_disk(rings, a, b, kind):
    if rings < 2:
        raise MeshError("need at least two rings")
    pts, t_out = _ring_points(rings)
    tri = Delaunay(pts, qhull_options="QJ").simplices
    xy = pts * np.array([a, b])
    n_b = 6 * rings
    boundary = np.arange(len(pts) - n_b, len(pts))
    kappa = a * b / (a**2 * np.sin(t_out) ** 2 + b**2 * np.cos(t_out) ** 2) ** 1.5
    return _finish(xy, tri, boundary, kappa, {"shape": kind, "a": a, "b": b, "rings": rings})


def _finish(xy, tri, boundary, kappa, descriptor):
    p = xy[tri]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    tri = tri[np.abs(area) > 1e-14 * np.max(np.abs(area))]
    area = area[np.abs(area) > 1e-14 * np.max(np.abs(area))]
    flip = area < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return PlanarMesh(xy, np.ascontiguousarray(tri), boundary, kappa, descriptor)


def disk_mesh(rings: int, radius: float = 1.0) -> PlanarMesh:
    return _from_unit_disk(rings, radius, radius, "disk")


def ellipse_mesh(rings: int, a: float = 1.5, b: float = 1.0) -> PlanarMesh:
    """Affine image of the ring mesh; boundary vertices are uniform in the
    ellipse parameter."""
    return _from_unit_disk(rings, a, b, "ellipse")


def square_mesh(divisions: int, side: float = 1.0) -> PlanarMesh:
    """Structured right-triangle mesh of ``[0, side]^2``; corner curvature is 0."""
    if divisions < 2:
        raise MeshError("need at least two divisions")
    m = divisions + 1
    g = np.linspace(0.0, side, m)
    X, Y = np.meshgrid(g, g)
    xy = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange(m * m).reshape(m, m)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
    tri = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    loop = np.concatenate([idx[0, :-1], idx[:-1, -1], idx[-1, :0:-1], idx[:0:-1, 0]])
    return _finish(xy, tri, loop, np.zeros(loop.size), {"shape": "square", "side": side, "divisions": divisions})


def make_mesh(shape: str, resolution: int, **params) -> PlanarMesh:
    if shape == "disk":
        return disk_mesh(resolution, **params)
    if shape == "ellipse":
        return ellipse_mesh(resolution, **params)
    if shape == "square":
        return square_mesh(resolution, **params)
    raise MeshError(f"unknown shape {shape!r}")


def write_mesh(path, mesh: PlanarMesh):
    """Plain text: ``v x y``, ``t i j k`` and ``b i curvature`` lines."""
    with open(path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"t {i} {j} {k}\n")
        for i, kap in zip(mesh.boundary, mesh.boundary_curvature):
            fh.write(f"b {i} {kap:.17g}\n")


def read_mesh(path) -> PlanarMesh:
    verts, tris, bnd, kap = [], [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            arity = {"v": 3, "t": 4, "b": 3}.get(parts[0])
            if arity is not None and len(parts) != arity:
                raise MeshError(f"line {lineno}: expected {arity - 1} fields after {parts[0]!r}")
            try:
                if parts[0] == "v":
                    verts.append((float(parts[1]), float(parts[2])))
                elif parts[0] == "t":
                    tris.append(tuple(int(p) for p in parts[1:4]))
                elif parts[0] == "b":
                    bnd.append(int(parts[1]))
                    kap.append(float(parts[2]))
                else:
                    raise MeshError(f"line {lineno}: unknown record {parts[0]!r}")
            except MeshError:
                raise
            except (IndexError, ValueError) as exc:
                raise MeshError(f"line {lineno}: {exc}") from exc
    if not tris or not bnd:
        raise MeshError("mesh needs triangles and a boundary loop")
    return PlanarMesh(np.array(verts), np.array(tris), np.array(bnd), np.array(kap), {"shape": "file", "path": str(path)})
