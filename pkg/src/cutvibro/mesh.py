"""Structured quad mesh of the acoustic duct with a designable window.

Layout (x to the right, y up)::

    +---------+---------------------------+---------+
    |  inlet  |        design region      |  outlet |   height H
    +---------+---------------------------+---------+
     L_in       L_design                    L_out

Nodes are numbered row by row, ``node = j * (nx + 1) + i``. Element corners
are ordered counter-clockwise starting at the lower-left node.
Global DOF vector is stacked ``[u_x0, u_y0, u_x1, u_y1, ..., p_0, p_1, ...]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _count(length: float, h: float, what: str) -> int:
    n = length / h
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ValueError(f"{what} length {length} is not a multiple of h_e={h}")
    return k


@dataclass
class Mesh:
    h: float
    nx: int
    ny: int
    n_inlet: int
    n_design: int
    n_outlet: int
    coords: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)

    @classmethod
    def duct(
        cls,
        h: float,
        inlet_length: float = 0.1,
        design_length: float = 0.3,
        outlet_length: float = 0.1,
        height: float = 0.1,
    ) -> "Mesh":
        if h <= 0:
            raise ValueError("h_e must be positive")
        n_in = _count(inlet_length, h, "inlet")
        n_d = _count(design_length, h, "design")
        n_out = _count(outlet_length, h, "outlet")
        ny = _count(height, h, "height")
        nx = n_in + n_d + n_out
        i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
        coords = np.column_stack([i.ravel() * h, j.ravel() * h])
        ex, ey = np.meshgrid(np.arange(nx), np.arange(ny))
        n0 = (ey * (nx + 1) + ex).ravel()
        elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
        return cls(h, nx, ny, n_in, n_d, n_out, coords, elements)

    # -- sizes -------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_dofs(self) -> int:
        return 3 * self.n_nodes

    @property
    def length(self) -> float:
        return self.nx * self.h

    @property
    def height(self) -> float:
        return self.ny * self.h

    def node_id(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    # -- DOF maps ----------------------------------------------------------
    def u_dofs(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes)
        return np.stack([2 * nodes, 2 * nodes + 1], axis=-1).reshape(*nodes.shape[:-1], -1)

    def p_dofs(self, nodes) -> np.ndarray:
        return 2 * self.n_nodes + np.asarray(nodes)

    @property
    def element_dofs(self) -> np.ndarray:
        """(n_elements, 12): eight displacement DOFs then four pressure DOFs."""
        return np.hstack([self.u_dofs(self.elements), self.p_dofs(self.elements)])

    # -- design window -----------------------------------------------------
    @property
    def design_node_ij(self) -> tuple[np.ndarray, np.ndarray]:
        i, j = np.meshgrid(
            np.arange(self.n_inlet, self.n_inlet + self.n_design + 1), np.arange(self.ny + 1)
        )
        return i.ravel(), j.ravel()

    @property
    def design_nodes(self) -> np.ndarray:
        """Global ids of designable nodes, ordered row by row over the window."""
        return self.node_id(*self.design_node_ij)

    @property
    def design_shape(self) -> tuple[int, int]:
        """Cell grid of the design window as (rows, columns)."""
        return self.ny, self.n_design

    @property
    def design_node_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.design_nodes] = True
        return mask

    def design_local_coords(self) -> np.ndarray:
        """Design-node coordinates relative to the window's lower-left corner."""
        xy = self.coords[self.design_nodes].copy()
        xy[:, 0] -= self.n_inlet * self.h
        return xy

    # -- boundaries --------------------------------------------------------
    def _edge_chain(self, nodes: np.ndarray) -> np.ndarray:
        return np.column_stack([nodes[:-1], nodes[1:]])

    @property
    def inlet_edges(self) -> np.ndarray:
        return self._edge_chain(self.node_id(0, np.arange(self.ny + 1)))

    @property
    def outlet_edges(self) -> np.ndarray:
        return self._edge_chain(self.node_id(self.nx, np.arange(self.ny + 1)))

    @property
    def wall_edges(self) -> np.ndarray:
        bottom = self._edge_chain(self.node_id(np.arange(self.nx + 1), 0))
        top = self._edge_chain(self.node_id(np.arange(self.nx + 1), self.ny))
        return np.vstack([bottom, top])

    @property
    def clamped_nodes(self) -> np.ndarray:
        """Top and bottom wall nodes spanning the design window."""
        i = np.arange(self.n_inlet, self.n_inlet + self.n_design + 1)
        return np.concatenate([self.node_id(i, 0), self.node_id(i, self.ny)])

    @property
    def clamped_dofs(self) -> np.ndarray:
        return self.u_dofs(self.clamped_nodes[:, None]).ravel()

    def boundary_tag(self, edge: tuple[int, int]) -> str:
        """Acoustic tag of a boundary edge: 'absorbing' or 'wall'."""
        a, b = (int(v) for v in edge)
        xa, xb = self.coords[a, 0], self.coords[b, 0]
        if np.isclose(xa, 0.0) and np.isclose(xb, 0.0):
            return "absorbing"
        if np.isclose(xa, self.length) and np.isclose(xb, self.length):
            return "absorbing"
        ya, yb = self.coords[a, 1], self.coords[b, 1]
        if (np.isclose(ya, 0.0) and np.isclose(yb, 0.0)) or (
            np.isclose(ya, self.height) and np.isclose(yb, self.height)
        ):
            return "wall"
        raise ValueError(f"edge {edge} is not on the boundary")

    def key(self) -> str:
        return f"h{self.h:.9e}_nx{self.nx}_ny{self.ny}_in{self.n_inlet}_d{self.n_design}"
