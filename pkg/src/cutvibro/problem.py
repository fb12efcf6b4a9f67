"""Design vector -> (Phi_1, Phi_2) and their gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectrum as spec
from .adjoint import accumulate_sensitivity, element_derivatives, reverse_sweep
from .assembly import Assembler, Material
from .design import DesignMap
from .mesh import Mesh
from .newmark import NewmarkParams, StateHistory, TransientSolver, load_history


@dataclass
class Evaluation:
    s_bar: np.ndarray
    hist: StateHistory
    P: np.ndarray
    S: np.ndarray
    phi: list[float]
    solver: TransientSolver


class FilterProblem:
    """One scenario: mesh, material, time grid, input signal and bands."""

    def __init__(
        self,
        mesh: Mesh,
        material: Material,
        nm: NewmarkParams,
        signal: np.ndarray,
        bands: list[spec.Band],
        filter_radius: float,
        baseline: np.ndarray | None = None,
    ):
        self.mesh = mesh
        self.mat = material
        self.nm = nm
        self.signal = np.asarray(signal, dtype=float)
        self.N = self.signal.size - 1
        self.bands = list(bands)
        self.asm = Assembler(mesh, material)
        self.dmap = DesignMap(mesh, filter_radius)
        self.loads = load_history(self.asm.g, self.signal, nm.dt)
        self.P0 = self.baseline_spectrum() if baseline is None else np.asarray(baseline)

    @property
    def df(self) -> float:
        return 1.0 / (self.N * self.nm.dt)

    def empty_level_set(self) -> np.ndarray:
        return self.dmap.physical(np.zeros(self.dmap.n_design))

    def simulate(self, s_bar: np.ndarray) -> tuple[StateHistory, TransientSolver]:
        sysm = self.asm.assemble(s_bar)
        solver = TransientSolver(sysm.M, sysm.C, sysm.K, self.nm)
        return solver.run(self.loads, self.asm.outlet), solver

    def baseline_spectrum(self) -> np.ndarray:
        hist, _ = self.simulate(self.empty_level_set())
        return spec.spectrum(hist.trace[1:])

    def evaluate_level_set(self, s_bar: np.ndarray) -> Evaluation:
        hist, solver = self.simulate(s_bar)
        P = spec.spectrum(hist.trace[1:])
        S = spec.transmission(P, self.P0, self.bands)
        phi = [spec.constraint_value(S, b) for b in self.bands]
        return Evaluation(s_bar, hist, P, S, phi, solver)

    def evaluate(self, s: np.ndarray) -> Evaluation:
        return self.evaluate_level_set(self.dmap.physical(s))

    def level_set_gradients(self, ev: Evaluation) -> list[np.ndarray]:
        """Nodal dPhi_i/ds_bar, one adjoint sweep per band."""
        derivs = element_derivatives(self.asm, ev.s_bar)
        out = []
        for band in self.bands:
            seeds = spec.seed_adjoint(ev.P, self.P0, band, self.asm.outlet)
            adj = reverse_sweep(ev.solver, seeds)
            out.append(accumulate_sensitivity(self.asm, ev.hist, adj, derivs))
        return out

    def gradients(self, ev: Evaluation) -> list[np.ndarray]:
        return [self.dmap.backprop(g) for g in self.level_set_gradients(ev)]

    def phi(self, s: np.ndarray) -> np.ndarray:
        return np.array(self.evaluate(s).phi)
