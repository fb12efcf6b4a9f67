"""Discrete adjoint of the Newmark recurrence and design sensitivities.

Per step the residual is ``R^n = A U^n + B U^(n-1) - H^n`` with
``U = (v, v', v'')`` and

    A = [[Khat, 0, 0], [-a3 I, I, 0], [-a6 I, 0, I]]
    B = [[-(a6 M + a3 C), -(a4 M - a1 C), -(a5 M - a2 C)],
         [a3 I, -a1 I, -a2 I],
         [a6 I,  a4 I,  a5 I]]

and at n = 0, ``R^0 = A0 U^0 - H^0`` with ``A0 = diag(I, I, M)``.

Using the velocity/acceleration updates, the design derivative of step n
collapses to ``lambda^n . (dM v''^n + dC v'^n + dK v^n)``, and step 0 to
``lambda''^0 . dM v''^0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import cutcell
from .assembly import Assembler
from .cutcell import CUT
from .newmark import StateHistory, TransientSolver

log = logging.getLogger(__name__)

FD_REL_STEP = 1e-6


@dataclass
class AdjointState:
    lam: np.ndarray
    lamd: np.ndarray
    lamdd: np.ndarray


def _split(seeds, n_steps, n):
    """Accept a v-slot seed (N+1, n) or a full (N+1, 3, n) seed."""
    seeds = np.asarray(seeds, dtype=float)
    if seeds.ndim == 2:
        full = np.zeros((seeds.shape[0], 3, seeds.shape[1]))
        full[:, 0] = seeds
        seeds = full
    if seeds.shape != (n_steps + 1, 3, n):
        raise ValueError(f"seed shape {seeds.shape} does not match history ({n_steps + 1}, 3, {n})")
    return seeds


def reverse_sweep(solver: TransientSolver, seeds, n_steps: int | None = None) -> AdjointState:
    """Solve (dR/dU)^T Lambda = -dPhi/dU backwards in pseudo-time."""
    nm = solver.nm
    n = solver.M.shape[0]
    seeds = np.asarray(seeds)
    if n_steps is None:
        n_steps = seeds.shape[0] - 1
    g = _split(seeds, n_steps, n)
    Mt = solver.M.T.tocsr()
    Ct = solver.C.T.tocsr()
    lam = np.zeros((n_steps + 1, n))
    lamd = np.zeros_like(lam)
    lamdd = np.zeros_like(lam)
    for k in range(n_steps, -1, -1):
        rv, rvd, rvdd = -g[k, 0], -g[k, 1], -g[k, 2]
        if k < n_steps:
            l, ld, ldd = lam[k + 1], lamd[k + 1], lamdd[k + 1]
            Ml, Cl = Mt @ l, Ct @ l
            rv = rv + nm.a6 * Ml + nm.a3 * Cl - nm.a3 * ld - nm.a6 * ldd
            rvd = rvd + nm.a4 * Ml - nm.a1 * Cl + nm.a1 * ld - nm.a4 * ldd
            rvdd = rvdd + nm.a5 * Ml - nm.a2 * Cl + nm.a2 * ld - nm.a5 * ldd
        if k > 0:
            lamd[k] = rvd
            lamdd[k] = rvdd
            lam[k] = solver.Khat.solve_T(rv + nm.a3 * rvd + nm.a6 * rvdd)
        else:
            lam[0] = rv
            lamd[0] = rvd
            lamdd[0] = solver.Mfac.solve_T(rvdd) if rvdd.any() else 0.0
    return AdjointState(lam, lamd, lamdd)


class StepOperator:
    """The full space-time Jacobian dR/dU and its transpose (for testing)."""

    def __init__(self, solver: TransientSolver):
        self.s = solver

    def apply(self, U: np.ndarray) -> np.ndarray:
        """U has shape (N+1, 3, n)."""
        s, nm = self.s, self.s.nm
        R = np.empty_like(U)
        R[0, 0], R[0, 1], R[0, 2] = U[0, 0], U[0, 1], s.M @ U[0, 2]
        v, vd, vdd = U[1:, 0], U[1:, 1], U[1:, 2]
        p, pd, pdd = U[:-1, 0], U[:-1, 1], U[:-1, 2]
        M, C = s.M, s.C
        R[1:, 0] = (
            (s.Khat.A @ v.T).T
            - (M @ (nm.a6 * p + nm.a4 * pd + nm.a5 * pdd).T).T
            - (C @ (nm.a3 * p - nm.a1 * pd - nm.a2 * pdd).T).T
        )
        R[1:, 1] = -nm.a3 * v + vd + nm.a3 * p - nm.a1 * pd - nm.a2 * pdd
        R[1:, 2] = -nm.a6 * v + vdd + nm.a6 * p + nm.a4 * pd + nm.a5 * pdd
        return R

    def apply_T(self, L: np.ndarray) -> np.ndarray:
        s, nm = self.s, self.s.nm
        out = np.zeros_like(L)
        out[0, 0], out[0, 1], out[0, 2] = L[0, 0], L[0, 1], s.M.T @ L[0, 2]
        l, ld, ldd = L[1:, 0], L[1:, 1], L[1:, 2]
        out[1:, 0] = (s.Khat.A.T @ l.T).T - nm.a3 * ld - nm.a6 * ldd
        out[1:, 1] += ld
        out[1:, 2] += ldd
        Ml = (s.M.T @ l.T).T
        Cl = (s.C.T @ l.T).T
        out[:-1, 0] += -nm.a6 * Ml - nm.a3 * Cl + nm.a3 * ld + nm.a6 * ldd
        out[:-1, 1] += -nm.a4 * Ml + nm.a1 * Cl - nm.a1 * ld + nm.a4 * ldd
        out[:-1, 2] += -nm.a5 * Ml + nm.a2 * Cl - nm.a2 * ld + nm.a5 * ldd
        return out


@dataclass
class ElementDerivatives:
    """d(M, C, K)^e / d s_bar_j for a set of elements, shape (n_el, 4, 12, 12)."""

    elements: np.ndarray
    dM: np.ndarray
    dC: np.ndarray
    dK: np.ndarray
    flagged: np.ndarray


def element_matrix_derivative(asm: Assembler, corner_values: np.ndarray, step: float | None = None):
    """Central FD of one element's (M, C, K) w.r.t. each corner value.

    If the marching-squares case changes within +-step, the one-sided
    difference on the side that keeps the unperturbed case is used and the
    element is flagged.
    """
    h = asm.mesh.h
    step = FD_REL_STEP * h if step is None else step
    phi = cutcell.snap_zeros(corner_values, h)
    integ = asm.integ

    def case(v):
        v = cutcell.snap_zeros(v, h)
        k = cutcell.classify(v)[0]
        return cutcell.cut_case(v) if k == CUT else -1 - k

    def mats(v):
        return np.array(integ.element(cutcell.snap_zeros(v, h)))

    base_case = case(phi)
    out = np.zeros((4, 3, 12, 12))
    flagged = False
    base = None
    for j in range(4):
        vp, vm = phi.copy(), phi.copy()
        vp[j] += step
        vm[j] -= step
        cp, cm = case(vp), case(vm)
        if cp == base_case and cm == base_case:
            out[j] = (mats(vp) - mats(vm)) / (2 * step)
            continue
        flagged = True
        if base is None:
            base = mats(phi)
        if cp == base_case:
            out[j] = (mats(vp) - base) / step
        elif cm == base_case:
            out[j] = (base - mats(vm)) / step
    return out, flagged


def element_derivatives(asm: Assembler, s_bar: np.ndarray) -> ElementDerivatives:
    h = asm.mesh.h
    phi = asm.corner_values(s_bar)
    kinds = cutcell.classify(phi)
    near = (np.abs(phi) <= FD_REL_STEP * h * 1.000001).any(axis=1)
    els = np.flatnonzero((kinds == CUT) | near)
    d = np.zeros((els.size, 4, 3, 12, 12))
    flagged = np.zeros(els.size, dtype=bool)
    for i, e in enumerate(els):
        d[i], flagged[i] = element_matrix_derivative(asm, phi[e])
    if flagged.any():
        log.debug("one-sided derivative on %d elements", int(flagged.sum()))
    return ElementDerivatives(els, d[:, :, 0], d[:, :, 1], d[:, :, 2], flagged)


def accumulate_sensitivity(
    asm: Assembler, hist: StateHistory, adj: AdjointState, derivs: ElementDerivatives
) -> np.ndarray:
    """Nodal dPhi/ds_bar; nonzero only on corners of cut elements."""
    out = np.zeros(asm.mesh.n_nodes)
    if derivs.elements.size == 0:
        return out
    keep = (~asm.clamped).astype(float)
    ed = asm.edofs[derivs.elements]
    lam = adj.lam[1:][:, ed] * keep[ed]
    GK = np.einsum("nei,nej->eij", lam, hist.v[1:][:, ed])
    GC = np.einsum("nei,nej->eij", lam, hist.vd[1:][:, ed])
    GM = np.einsum("nei,nej->eij", lam, hist.vdd[1:][:, ed])
    GM += np.einsum("ei,ej->eij", adj.lamdd[0][ed] * keep[ed], hist.vdd[0][ed])
    contrib = (
        np.einsum("ejab,eab->ej", derivs.dM, GM)
        + np.einsum("ejab,eab->ej", derivs.dC, GC)
        + np.einsum("ejab,eab->ej", derivs.dK, GK)
    )
    np.add.at(out, asm.mesh.elements[derivs.elements], contrib)
    return out
