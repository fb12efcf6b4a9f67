"""Global M, C, K for the stacked displacement/pressure system.

Element DOFs are ``[u_x0, u_y0, ..., u_x3, u_y3, p_0, ..., p_3]``.
Per element the design-dependent blocks are

    K = [[K_s,  S  ],      M = [[M_s,   0  ],      C = [[a_d M_s + b_d K_s, 0],
         [0,    K_a]]           [-S^T,  M_a]]            [0,                 0]]

with ``S = int_G N_u^T n_s N_p`` over the interface (n_s out of the solid).
Absorbing inlet/outlet edges add ``1/(rho_a c_a) int N^T N`` to the pressure
block of C and carry the incident-wave load.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import cutcell
from .cutcell import ACOUSTIC, CUT, SOLID
from .mesh import Mesh


@dataclass
class Material:
    E: float = 50e6
    nu: float = 0.4
    rho_s: float = 1000.0
    c_a: float = 343.0
    rho_a: float = 1.21
    alpha_void: float = 1e-8
    zeta: float = 0.1
    omega1: float = 1600 * 2 * np.pi
    omega2: float = 2200 * 2 * np.pi

    @property
    def K_a(self) -> float:
        return self.rho_a * self.c_a**2

    @property
    def alpha_d(self) -> float:
        return 2 * self.zeta * self.omega1 * self.omega2 / (self.omega1 + self.omega2)

    @property
    def beta_d(self) -> float:
        return 2 * self.zeta / (self.omega1 + self.omega2)

    def D(self) -> np.ndarray:
        """Plane-stress constitutive matrix at full stiffness."""
        E, nu = self.E, self.nu
        return E / (1 - nu**2) * np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]])


def shape(xi: np.ndarray):
    """Bilinear shape functions and unit-square derivatives at points (k, 2)."""
    x, y = xi[:, 0], xi[:, 1]
    N = np.column_stack([(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y])
    dx = np.column_stack([-(1 - y), 1 - y, y, -y])
    dy = np.column_stack([-(1 - x), -x, x, 1 - x])
    return N, np.stack([dx, dy], axis=-1)


def _u_shape(N: np.ndarray) -> np.ndarray:
    """(k, 2, 8) displacement interpolation matrices."""
    k = N.shape[0]
    Nu = np.zeros((k, 2, 8))
    Nu[:, 0, 0::2] = N
    Nu[:, 1, 1::2] = N
    return Nu


def _strain(dN: np.ndarray, h: float) -> np.ndarray:
    """(k, 3, 8) strain-displacement matrices."""
    k = dN.shape[0]
    B = np.zeros((k, 3, 8))
    B[:, 0, 0::2] = dN[:, :, 0] / h
    B[:, 1, 1::2] = dN[:, :, 1] / h
    B[:, 2, 0::2] = dN[:, :, 1] / h
    B[:, 2, 1::2] = dN[:, :, 0] / h
    return B


@dataclass
class ElementBlocks:
    Ks: np.ndarray
    Ms: np.ndarray
    Ka: np.ndarray
    Ma: np.ndarray
    S: np.ndarray

    def full(self, mat: Material) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """12x12 (M, C, K) for this element, without boundary terms."""
        M = np.zeros((12, 12))
        K = np.zeros((12, 12))
        C = np.zeros((12, 12))
        M[:8, :8] = self.Ms
        M[8:, 8:] = self.Ma
        M[8:, :8] = -self.S.T
        K[:8, :8] = self.Ks
        K[8:, 8:] = self.Ka
        K[:8, 8:] = self.S
        C[:8, :8] = mat.alpha_d * self.Ms + mat.beta_d * self.Ks
        return M, C, K


class ElementIntegrator:
    """Phase-weighted element integrals for uncut and cut Q4 elements."""

    def __init__(self, mat: Material, h: float):
        self.mat = mat
        self.h = h
        self.D = mat.D()
        w = cutcell.QUAD_WEIGHTS * h * h
        ones = np.ones(4)
        self.ref_solid = self._volume(cutcell.QUAD_POINTS, w, ones)
        self.ref_acoustic = self._volume_acoustic(cutcell.QUAD_POINTS, w, ones)

    def _volume(self, pts, w, alpha):
        N, dN = shape(pts)
        B = _strain(dN, self.h)
        Nu = _u_shape(N)
        Ks = np.einsum("k,kia,ij,kjb->ab", w * alpha, B, self.D, B)
        Ms = self.mat.rho_s * np.einsum("k,kia,kib->ab", w * alpha, Nu, Nu)
        return Ks, Ms

    def _volume_acoustic(self, pts, w, alpha):
        N, dN = shape(pts)
        g = dN / self.h
        Ka = np.einsum("k,kad,kbd->ab", w * alpha, g, g) / self.mat.rho_a
        Ma = np.einsum("k,ka,kb->ab", w * alpha, N, N) / self.mat.K_a
        return Ka, Ma

    def uncut(self, kind: int) -> ElementBlocks:
        a = self.mat.alpha_void
        Ks, Ms = self.ref_solid
        Ka, Ma = self.ref_acoustic
        if kind == SOLID:
            return ElementBlocks(Ks, Ms, a * Ka, a * Ma, np.zeros((8, 4)))
        if kind == ACOUSTIC:
            return ElementBlocks(a * Ks, a * Ms, Ka, Ma, np.zeros((8, 4)))
        raise ValueError("cut elements need quadrature data")

    def cut(self, q: cutcell.CutQuadrature) -> ElementBlocks:
        a = self.mat.alpha_void
        pts = np.vstack([q.solid_points, q.acoustic_points])
        w = np.concatenate([q.solid_weights, q.acoustic_weights])
        ns, na = q.solid_weights.size, q.acoustic_weights.size
        alpha_s = np.concatenate([np.ones(ns), np.full(na, a)])
        alpha_a = np.concatenate([np.full(ns, a), np.ones(na)])
        Ks, Ms = self._volume(pts, w, alpha_s)
        Ka, Ma = self._volume_acoustic(pts, w, alpha_a)
        if q.interface_weights.size:
            N, _ = shape(q.interface_points)
            Nu = _u_shape(N)
            S = np.einsum("k,kia,ki,kb->ab", q.interface_weights, Nu, q.normals, N)
        else:
            S = np.zeros((8, 4))
        return ElementBlocks(Ks, Ms, Ka, Ma, S)

    def blocks(self, corner_values: np.ndarray) -> ElementBlocks:
        kind = cutcell.classify(corner_values)[0]
        if kind == CUT:
            return self.cut(cutcell.tessellate(corner_values, self.h))
        return self.uncut(kind)

    def element(self, corner_values: np.ndarray):
        return self.blocks(corner_values).full(self.mat)


@dataclass
class SystemMatrices:
    M: sp.csr_matrix
    C: sp.csr_matrix
    K: sp.csr_matrix
    g: np.ndarray = field(repr=False)
    outlet: np.ndarray = field(repr=False)
    clamped: np.ndarray = field(repr=False)
    kinds: np.ndarray = field(repr=False)

    @property
    def n_dofs(self) -> int:
        return self.M.shape[0]


def boundary_mass(edges: np.ndarray, n_nodes: int, h: float) -> sp.csr_matrix:
    """Consistent 1D mass ``int N^T N`` over a chain of edges."""
    m = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    r = np.repeat(edges, 2, axis=1).ravel()
    c = np.tile(edges, (1, 2)).ravel()
    return sp.coo_matrix((np.tile(m.ravel(), len(edges)), (r, c)), shape=(n_nodes, n_nodes)).tocsr()


def boundary_load(edges: np.ndarray, n_nodes: int, h: float) -> np.ndarray:
    """``int N dGamma`` over a chain of edges (trapezoid-consistent weights)."""
    out = np.zeros(n_nodes)
    np.add.at(out, edges.ravel(), 0.5 * h)
    return out


class Assembler:
    def __init__(self, mesh: Mesh, mat: Material):
        self.mesh = mesh
        self.mat = mat
        self.integ = ElementIntegrator(mat, mesh.h)
        self.edofs = mesh.element_dofs
        n = mesh.n_dofs
        nn = mesh.n_nodes
        z = 1.0 / (mat.rho_a * mat.c_a)
        Bpp = boundary_mass(np.vstack([mesh.inlet_edges, mesh.outlet_edges]), nn, mesh.h)
        off = 2 * nn
        Bpp = Bpp.tocoo()
        self.C_abs = sp.coo_matrix((z * Bpp.data, (Bpp.row + off, Bpp.col + off)), shape=(n, n)).tocsr()
        self.g = np.zeros(n)
        self.g[off:] = 2.0 * z * boundary_load(mesh.inlet_edges, nn, mesh.h)
        self.outlet = np.zeros(n)
        self.outlet[off:] = boundary_load(mesh.outlet_edges, nn, mesh.h)
        self.clamped = np.zeros(n, dtype=bool)
        self.clamped[mesh.clamped_dofs] = True

    def corner_values(self, s_bar: np.ndarray) -> np.ndarray:
        return cutcell.snap_zeros(s_bar, self.mesh.h)[self.mesh.elements]

    def element_stack(self, s_bar: np.ndarray):
        """(n_el, 12, 12) stacks of M, C, K plus element classes."""
        phi = self.corner_values(s_bar)
        kinds = cutcell.classify(phi)
        ne = phi.shape[0]
        Ms = np.empty((ne, 12, 12))
        Cs = np.empty((ne, 12, 12))
        Ks = np.empty((ne, 12, 12))
        for kind in (SOLID, ACOUSTIC):
            sel = kinds == kind
            if sel.any():
                Me, Ce, Ke = self.integ.uncut(kind).full(self.mat)
                Ms[sel], Cs[sel], Ks[sel] = Me, Ce, Ke
        for e in np.flatnonzero(kinds == CUT):
            Ms[e], Cs[e], Ks[e] = self.integ.element(phi[e])
        return Ms, Cs, Ks, kinds

    def scatter(self, stack: np.ndarray) -> sp.csr_matrix:
        n = self.mesh.n_dofs
        r = np.repeat(self.edofs, 12, axis=1).ravel()
        c = np.tile(self.edofs, (1, 12)).ravel()
        return sp.coo_matrix((stack.ravel(), (r, c)), shape=(n, n)).tocsr()

    def apply_dirichlet(self, A: sp.spmatrix, diag: float) -> sp.csr_matrix:
        keep = (~self.clamped).astype(float)
        P = sp.diags(keep)
        out = P @ A @ P
        if diag:
            out = out + sp.diags(diag * self.clamped.astype(float))
        return out.tocsr()

    def assemble(self, s_bar: np.ndarray) -> SystemMatrices:
        Ms, Cs, Ks, kinds = self.element_stack(s_bar)
        M = self.apply_dirichlet(self.scatter(Ms), 1.0)
        C = self.apply_dirichlet(self.scatter(Cs) + self.C_abs, 0.0)
        K = self.apply_dirichlet(self.scatter(Ks), 1.0)
        return SystemMatrices(M, C, K, self.g.copy(), self.outlet.copy(), self.clamped.copy(), kinds)


def dump_triplets(A: sp.spmatrix, path) -> None:
    """Debug dump of a sparse matrix as ``row,col,value`` lines."""
    A = A.tocoo()
    np.savetxt(path, np.column_stack([A.row, A.col, A.data]), fmt=["%d", "%d", "%.17g"], delimiter=",")
