"""Newmark time integration of ``M v'' + C v' + K v = h(t)``.

The effective stiffness is factorized once per design and reused for every
step; the same factor serves transpose solves in the adjoint sweep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

REFINE_TOL = 1e-10


@dataclass(frozen=True)
class NewmarkParams:
    dt: float
    beta: float = 0.25
    gamma: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def a1(self):
        return 1 - self.gamma / self.beta

    @property
    def a2(self):
        return (1 - self.gamma / (2 * self.beta)) * self.dt

    @property
    def a3(self):
        return self.gamma / (self.beta * self.dt)

    @property
    def a4(self):
        return 1 / (self.beta * self.dt)

    @property
    def a5(self):
        return 1 / (2 * self.beta) - 1

    @property
    def a6(self):
        return 1 / (self.beta * self.dt**2)


class Factor:
    """Sparse LU with transpose solves and one round of iterative refinement."""

    def __init__(self, A: sp.spmatrix):
        self.A = sp.csc_matrix(A)
        self.lu = spla.splu(self.A)

    def _solve(self, b, trans):
        A = self.A.T if trans == "T" else self.A
        x = self.lu.solve(b, trans=trans)
        nb = np.linalg.norm(b)
        if nb > 0:
            r = b - A @ x
            if np.linalg.norm(r) > REFINE_TOL * nb:
                x = x + self.lu.solve(r, trans=trans)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("non-finite solution in sparse solve")
        return x

    def solve(self, b):
        return self._solve(np.asarray(b, dtype=float), "N")

    def solve_T(self, b):
        return self._solve(np.asarray(b, dtype=float), "T")


def effective_stiffness(M, C, K, nm: NewmarkParams) -> sp.csc_matrix:
    return sp.csc_matrix(K + nm.a6 * M + nm.a3 * C)


def initial_acceleration(M, h0, factor: Factor | None = None) -> np.ndarray:
    h0 = np.asarray(h0, dtype=float)
    if not h0.any():
        return np.zeros_like(h0)
    return (factor or Factor(M)).solve(h0)


def load_history(g: np.ndarray, signal: np.ndarray, dt: float) -> np.ndarray:
    """Loads h^n = g * dp_in/dt at every step, shape (N+1, n_dofs).

    The incident-pressure rate uses central differences, second-order
    one-sided at both ends.
    """
    signal = np.asarray(signal, dtype=float)
    if signal.size < 3:
        raise ValueError("input signal needs at least 3 samples")
    rate = np.gradient(signal, dt, edge_order=2)
    return rate[:, None] * g[None, :]


def newmark_step(Khat: Factor, M, C, nm: NewmarkParams, v, vd, vdd, h):
    hhat = h + M @ (nm.a4 * vd + nm.a5 * vdd + nm.a6 * v) + C @ (-nm.a1 * vd - nm.a2 * vdd + nm.a3 * v)
    v1 = Khat.solve(hhat)
    dv = v1 - v
    vd1 = nm.a1 * vd + nm.a2 * vdd + nm.a3 * dv
    vdd1 = -nm.a4 * vd - nm.a5 * vdd + nm.a6 * dv
    return v1, vd1, vdd1, hhat


@dataclass
class StateHistory:
    """States for n = 0..N; ``trace[n]`` is the outlet integral at step n."""

    v: np.ndarray
    vd: np.ndarray
    vdd: np.ndarray
    loads: np.ndarray
    trace: np.ndarray
    dt: float

    @property
    def N(self) -> int:
        return self.v.shape[0] - 1

    @property
    def T(self) -> float:
        return self.N * self.dt


class TransientSolver:
    """Holds the factorized operators for one assembled design."""

    def __init__(self, M, C, K, nm: NewmarkParams):
        self.M = sp.csr_matrix(M)
        self.C = sp.csr_matrix(C)
        self.K = sp.csr_matrix(K)
        self.nm = nm
        self.Khat = Factor(effective_stiffness(self.M, self.C, self.K, nm))
        self._Mfac = None

    @property
    def Mfac(self) -> Factor:
        if self._Mfac is None:
            self._Mfac = Factor(self.M)
        return self._Mfac

    def run(self, loads: np.ndarray, outlet: np.ndarray | None = None) -> StateHistory:
        loads = np.asarray(loads, dtype=float)
        n_steps, n = loads.shape[0] - 1, loads.shape[1]
        V = np.zeros((n_steps + 1, n))
        Vd = np.zeros_like(V)
        Vdd = np.zeros_like(V)
        if loads[0].any():
            Vdd[0] = initial_acceleration(self.M, loads[0], self.Mfac)
        for k in range(1, n_steps + 1):
            V[k], Vd[k], Vdd[k], _ = newmark_step(self.Khat, self.M, self.C, self.nm, V[k - 1], Vd[k - 1], Vdd[k - 1], loads[k])
            if not np.isfinite(V[k]).all():
                raise FloatingPointError(f"non-finite state at step {k}")
        trace = V @ outlet if outlet is not None else np.zeros(n_steps + 1)
        return StateHistory(V, Vd, Vdd, loads, trace, self.nm.dt)

    def residuals(self, hist: StateHistory, k: int):
        """(r1, r2, r3, |hhat|) of the step recurrence at step k >= 1."""
        nm = self.nm
        v0, vd0, vdd0 = hist.v[k - 1], hist.vd[k - 1], hist.vdd[k - 1]
        v, vd, vdd = hist.v[k], hist.vd[k], hist.vdd[k]
        hhat = hist.loads[k] + self.M @ (nm.a4 * vd0 + nm.a5 * vdd0 + nm.a6 * v0) + self.C @ (
            -nm.a1 * vd0 - nm.a2 * vdd0 + nm.a3 * v0
        )
        r1 = self.Khat.A @ v - hhat
        r2 = vd - nm.a1 * vd0 - nm.a2 * vdd0 - nm.a3 * (v - v0)
        r3 = vdd + nm.a4 * vd0 + nm.a5 * vdd0 - nm.a6 * (v - v0)
        return r1, r2, r3, np.linalg.norm(hhat)
