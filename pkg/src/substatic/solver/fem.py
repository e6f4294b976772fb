"""Piecewise-linear finite elements for ``Delta u = -1``, ``u = 0`` on the boundary."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix, diags
from scipy.sparse.linalg import cg

from .mesh import MeshError, PlanarMesh, make_mesh  # noqa: F401  (re-exported)
from .radial import NonConvergenceError

MIN_TRIANGLES = 200
MIN_ANGLE_DEG = 5.0


@dataclass(frozen=True)
class FemSolution:
    """Nodal P1 solution plus recovered derivatives.

    ``gradient`` and ``hessian`` are vertex values of a least-squares
    quadratic fitted over each vertex's two-ring patch.
    """

    mesh: PlanarMesh
    u: np.ndarray
    triangle_gradient: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray
    cg_iterations: int

    @property
    def boundary_gradient_norm(self) -> np.ndarray:
        return np.linalg.norm(self.gradient[self.mesh.boundary], axis=1)

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(len(self.u), dtype=bool)
        mask[self.mesh.boundary] = False
        return mask

    @property
    def n(self) -> int:
        return 2


def _basis_gradients(mesh):
    p = mesh.vertices[mesh.triangles]
    area = mesh.areas
    # gradient of barycentric lambda_k is rot90(opposite edge) / (2 area)
    grads = np.empty((len(area), 3, 2))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        grads[:, k, 0] = -e[:, 1]
        grads[:, k, 1] = e[:, 0]
    return grads / (2 * area)[:, None, None], area


def _validate(mesh):
    if len(mesh.triangles) < MIN_TRIANGLES:
        raise MeshError(f"mesh has {len(mesh.triangles)} < {MIN_TRIANGLES} triangles")
    if np.any(mesh.areas <= 0):
        raise MeshError("triangles must be positively oriented")
    ang = mesh.min_angle()
    if ang < MIN_ANGLE_DEG:
        raise MeshError(f"degenerate triangle: minimum angle {ang:.3g} deg")


def _patches(mesh):
    """Two-ring vertex neighbourhoods as a padded index array and mask."""
    N = len(mesh.vertices)
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    A = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(N, N)).tocsr()
    A2 = (A @ A).tocsr()
    sizes = np.diff(A2.indptr)
    P = int(sizes.max())
    idx = np.zeros((N, P), dtype=int)
    mask = np.zeros((N, P), dtype=bool)
    for v in range(N):
        nb = A2.indices[A2.indptr[v] : A2.indptr[v + 1]]
        idx[v, : nb.size] = nb
        mask[v, : nb.size] = True
    return idx, mask


def recover_derivatives(mesh: PlanarMesh, u: np.ndarray):
    """Vertex gradient and Hessian from quadratic least-squares patch fits."""
    idx, mask = _patches(mesh)
    xy = mesh.vertices
    d = xy[idx] - xy[:, None, :]
    scale = np.sqrt(np.max(np.where(mask, (d**2).sum(-1), 0), axis=1))[:, None]
    x, y = d[..., 0] / scale, d[..., 1] / scale
    M = np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=-1) * mask[..., None]
    rhs = u[idx] * mask
    MtM = np.einsum("npi,npj->nij", M, M)
    Mtb = np.einsum("npi,np->ni", M, rhs)
    coef = np.linalg.solve(MtM, Mtb[..., None])[..., 0]
    s = scale[:, 0]
    grad = np.column_stack([coef[:, 1], coef[:, 2]]) / s[:, None]
    hess = np.empty((len(u), 2, 2))
    hess[:, 0, 0] = 2 * coef[:, 3] / s**2
    hess[:, 0, 1] = hess[:, 1, 0] = coef[:, 4] / s**2
    hess[:, 1, 1] = 2 * coef[:, 5] / s**2
    return grad, hess


def solve_flat_fem(mesh: PlanarMesh, rtol: float = 1e-12, maxiter: int = None) -> FemSolution:
    """Galerkin P1 solve with Jacobi-preconditioned conjugate gradients.

    Raises `MeshError` on small or degenerate meshes and
    `NonConvergenceError` when CG misses ``rtol``.
    """
    _validate(mesh)
    grads, area = _basis_gradients(mesh)
    t = mesh.triangles
    local = np.einsum("tid,tjd->tij", grads, grads) * area[:, None, None]
    N = len(mesh.vertices)
    K = coo_matrix(
        (local.ravel(), (np.repeat(t, 3, axis=1).ravel(), np.tile(t, (1, 3)).ravel())), shape=(N, N)
    ).tocsr()
    load = np.zeros(N)
    np.add.at(load, t.ravel(), np.repeat(area / 3, 3))

    free = np.ones(N, dtype=bool)
    free[mesh.boundary] = False
    Kff = K[free][:, free]
    bf = load[free]
    iters = [0]

    def count(_):
        iters[0] += 1

    jac = diags(1.0 / Kff.diagonal())
    maxiter = maxiter or 10 * Kff.shape[0]
    uf, info = cg(Kff, bf, rtol=rtol, atol=0.0, M=jac, maxiter=maxiter, callback=count)
    res = np.linalg.norm(Kff @ uf - bf) / np.linalg.norm(bf)
    if info != 0 or res > 100 * rtol:
        raise NonConvergenceError(f"CG stopped with relative residual {res:.3g} (info={info})")
    u = np.zeros(N)
    u[free] = uf
    tri_grad = np.einsum("tk,tkd->td", u[t], grads)
    grad, hess = recover_derivatives(mesh, u)
    return FemSolution(mesh, u, tri_grad, grad, hess, iters[0])


@dataclass(frozen=True)
class Diagnostics:
    min_interior_u: float
    max_normal_derivative: float
    positive_interior: bool
    hopf: bool
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return self.positive_interior and self.hopf


def hopf_positivity_check(sol) -> Diagnostics:
    """Minimum interior ``u`` and maximum outward normal derivative on the
    Dirichlet-zero boundary, with the verdicts ``u > 0`` and ``du/dnu < 0``.
    """
    notes = []
    if isinstance(sol, FemSolution):
        inner_u = sol.u[sol.interior]
        p = sol.mesh.vertices[sol.mesh.boundary]
        tangent = np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)
        normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
        normal /= np.linalg.norm(normal, axis=1)[:, None]
        dnu = np.einsum("ij,ij->i", sol.gradient[sol.mesh.boundary], normal)
    else:
        u = np.asarray(sol.u)
        inner_u = u[1:-1]
        dnu = [float(sol.du[-1])]
        if getattr(sol.domain, "inner", None) not in ("horizon", "center"):
            dnu.append(-float(sol.du[0]))
        dnu = np.array(dnu)
        if sol.nodes < 64:
            notes.append(f"under-resolved grid ({sol.nodes} nodes)")
    d = Diagnostics(float(np.min(inner_u)), float(np.max(dnu)), bool(np.min(inner_u) > 0), bool(np.max(dnu) < 0), tuple(notes))
    if not d.ok and notes:
        import warnings

        warnings.warn("Hopf/positivity verdict failed on an under-resolved grid", stacklevel=2)
    return d
