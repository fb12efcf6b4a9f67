"""Design parameterization: s -> s_tilde -> s_tilde_c -> s_bar_c -> s_bar.

``s`` lives on the designable nodes and is bounded in [0, 1]. The bound remap
scales it to +-h_e/2, the field is averaged to cell centres, smoothed with a
finite-volume Helmholtz filter over the design window, and averaged back to
the nodes. Nodes outside the window carry a frozen (acoustic) level set.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh


def map_bounds(s: np.ndarray, h: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.size and (s.min() < 0.0 or s.max() > 1.0):
        raise ValueError("design variables must lie in [0, 1]")
    return h * (s - 0.5)


def node_to_cell_matrix(rows: int, cols: int) -> sp.csr_matrix:
    """Averaging operator from a (rows+1, cols+1) node grid to its cells."""
    nn = cols + 1
    cj, ci = np.divmod(np.arange(rows * cols), cols)
    n0 = cj * nn + ci
    corners = np.column_stack([n0, n0 + 1, n0 + nn + 1, n0 + nn])
    r = np.repeat(np.arange(rows * cols), 4)
    return sp.csr_matrix(
        (np.full(r.size, 0.25), (r, corners.ravel())), shape=(rows * cols, (rows + 1) * nn)
    )


def cell_to_node_matrix(rows: int, cols: int) -> sp.csr_matrix:
    """Node value = mean of the cells that touch it (1, 2 or 4 of them)."""
    incidence = node_to_cell_matrix(rows, cols).T.tocsr()
    incidence.data[:] = 1.0
    counts = np.asarray(incidence.sum(axis=1)).ravel()
    return sp.diags(1.0 / counts) @ incidence


def filter_matrix(rows: int, cols: int, r: float, h: float) -> sp.csc_matrix:
    """Finite-volume discretization of ``-r^2 lap(x) + x`` with zero-flux edges.

    Every interior face between two cells contributes ``(r/h)^2 (x_i - x_j)``
    to both rows, so the operator is symmetric with unit row and column sums.
    """
    if r < 0:
        raise ValueError("filter radius must be non-negative")
    n = rows * cols
    idx = np.arange(n).reshape(rows, cols)
    pairs = np.vstack(
        [
            np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()]),
            np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()]),
        ]
    )
    k = (r / h) ** 2
    i, j = pairs[:, 0], pairs[:, 1]
    lap = sp.coo_matrix(
        (np.concatenate([np.full(i.size, -k), np.full(i.size, -k)]), (np.r_[i, j], np.r_[j, i])),
        shape=(n, n),
    ).tocsr()
    deg = -np.asarray(lap.sum(axis=1)).ravel()
    return (sp.identity(n, format="csr") + lap + sp.diags(deg)).tocsc()


class DesignMap:
    """Forward and reverse application of the design parameterization."""

    def __init__(self, mesh: Mesh, filter_radius: float, frozen_value: float | None = None):
        self.mesh = mesh
        self.h = mesh.h
        self.r = float(filter_radius)
        rows, cols = mesh.design_shape
        self.P = node_to_cell_matrix(rows, cols)
        self.Q = cell_to_node_matrix(rows, cols)
        self.F = filter_matrix(rows, cols, self.r, self.h)
        self._lu = spla.splu(self.F) if self.r > 0 else None
        self.design_nodes = mesh.design_nodes
        self.frozen_value = -0.5 * self.h if frozen_value is None else float(frozen_value)

    @property
    def n_design(self) -> int:
        return self.design_nodes.size

    def _filter(self, x: np.ndarray) -> np.ndarray:
        return x.copy() if self._lu is None else self._lu.solve(x)

    # forward stages, exposed for testing the individual transposes
    def node_to_cell(self, x):
        return self.P @ x

    def cell_to_node(self, x):
        return self.Q @ x

    def pde_filter(self, x):
        return self._filter(np.asarray(x, dtype=float))

    def physical(self, s: np.ndarray) -> np.ndarray:
        """Full nodal level set s_bar for design vector ``s``."""
        s_bar = np.full(self.mesh.n_nodes, self.frozen_value)
        s_bar[self.design_nodes] = self.window(s)
        return s_bar

    def window(self, s: np.ndarray) -> np.ndarray:
        return self.Q @ self._filter(self.P @ map_bounds(s, self.h))

    def backprop(self, dphi_dsbar: np.ndarray) -> np.ndarray:
        """dPhi/ds from a nodal dPhi/ds_bar over the whole mesh."""
        g = np.asarray(dphi_dsbar, dtype=float)
        if g.shape[0] == self.mesh.n_nodes:
            g = g[self.design_nodes]
        # F is symmetric, so its transpose solve reuses the factorization
        return self.h * (self.P.T @ self._filter(self.Q.T @ g))


def init_design(
    mesh: Mesh,
    r1: int = 7,
    r2: int = 7,
    lx: float = 0.1,
    ly: float = 0.1,
    threshold: float = 0.01,
) -> np.ndarray:
    """Array-of-discs start: void where the cosine pattern is >= threshold."""
    xy = mesh.design_local_coords()
    sv = np.cos(r1 * np.pi * xy[:, 0] / lx) * np.cos(r2 * np.pi * xy[:, 1] / ly) + 0.1
    return np.where(sv >= threshold, 0.0, 1.0)
