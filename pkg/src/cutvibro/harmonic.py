"""Steady-state frequency sweep on the same assembled matrices.

With ``p_in = exp(i w t)`` the inlet load becomes ``i w g`` and each bin solves
``(K + i w C - w^2 M) v = i w g``.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import Assembler, SystemMatrices

log = logging.getLogger(__name__)


def harmonic_outlet(sysm: SystemMatrices, freqs) -> np.ndarray:
    """Complex outlet integral per frequency; NaN where the solve fails."""
    out = np.full(len(freqs), np.nan + 0j)
    clamp = sp.diags(sysm.clamped.astype(float))
    for i, f in enumerate(freqs):
        w = 2 * np.pi * f
        # clamped rows carry 1 on the diagonal of both K and M
        A = (sysm.K + 1j * w * sysm.C - w * w * sysm.M + w * w * clamp).tocsc()
        try:
            v = spla.splu(A).solve(1j * w * sysm.g.astype(complex))
        except RuntimeError as exc:
            log.warning("harmonic solve failed at %g Hz: %s", f, exc)
            continue
        out[i] = sysm.outlet @ v
    return out


def harmonic_transmission(asm: Assembler, s_bar: np.ndarray, empty_s_bar: np.ndarray, freqs) -> np.ndarray:
    design = harmonic_outlet(asm.assemble(s_bar), freqs)
    empty = harmonic_outlet(asm.assemble(empty_s_bar), freqs)
    return np.abs(design) / np.abs(empty)
