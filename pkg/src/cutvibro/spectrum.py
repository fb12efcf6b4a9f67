"""Outlet trace -> windowed spectrum -> transmission -> band constraints.

The trace entering the transform is the outlet integral at steps 1..N, so
sample k of the transform is time step k+1. The forward transform carries no
1/N; ``seed_adjoint`` is the exact transpose of the whole chain, returned as a
per-step seed on the outlet pressure DOFs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

P_REF = 20e-6
WEAK_BASELINE = 1e-3
MAG_EPS = 1e-30


def integrate_outlet(p: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Outlet integral of nodal pressures; ``p`` may be (n,) or (steps, n)."""
    return np.asarray(p) @ weights


def hann(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("window length must be at least 2")
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))


def hann_window(trace: np.ndarray) -> np.ndarray:
    trace = np.asarray(trace, dtype=float)
    return hann(trace.shape[0]) * trace


def dft(x: np.ndarray) -> np.ndarray:
    return np.fft.fft(x)


def idft(X: np.ndarray) -> np.ndarray:
    return np.fft.ifft(X)


def dft_direct(x: np.ndarray) -> np.ndarray:
    """O(N^2) reference transform."""
    x = np.asarray(x)
    n = x.shape[0]
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def frequencies(n: int, dt: float) -> np.ndarray:
    return np.arange(n) / (n * dt)


_INTERVAL = re.compile(r"\s*([\[(])\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*([\])])\s*")


@dataclass(frozen=True)
class Band:
    """A set of DFT bins fitted to target ``tau``.

    Built from interval notation in Hz, e.g. ``"[1000, 2500]"`` or
    ``"[1000, 2500); (4000, 5500]"``; edges must fall on bin frequencies.
    """

    bins: tuple[int, ...]
    tau: float
    text: str = ""

    def __post_init__(self):
        if not self.bins:
            raise ValueError("band contains no bins")
        if min(self.bins) < 0:
            raise ValueError("negative bin index")
        if not self.tau > 0:
            raise ValueError("band target must be positive")

    @property
    def index(self) -> np.ndarray:
        return np.asarray(self.bins, dtype=int)

    @classmethod
    def from_hz(cls, text: str, tau: float, df: float, tol: float = 1e-9) -> "Band":
        bins: set[int] = set()
        for part in text.split(";"):
            mt = _INTERVAL.fullmatch(part)
            if not mt:
                raise ValueError(f"cannot parse band interval {part!r}")
            lb, f_lo, f_hi, rb = mt.group(1), float(mt.group(2)), float(mt.group(3)), mt.group(4)
            edges = []
            for f in (f_lo, f_hi):
                k = f / df
                if abs(k - round(k)) > tol * max(1.0, abs(k)):
                    raise ValueError(f"band edge {f:g} Hz is not a multiple of the bin width {df:g} Hz")
                edges.append(int(round(k)))
            lo = edges[0] + (lb == "(")
            hi = edges[1] - (rb == ")")
            if hi < lo:
                raise ValueError(f"band interval {part.strip()!r} is empty")
            bins.update(range(lo, hi + 1))
        return cls(tuple(sorted(bins)), float(tau), text.strip())


def spectrum(trace: np.ndarray) -> np.ndarray:
    """Windowed DFT of a length-N trace."""
    return dft(hann_window(trace))


def transmission(P: np.ndarray, P0: np.ndarray, bands=()) -> np.ndarray:
    a0 = np.abs(P0)
    floor = WEAK_BASELINE * a0.max() if a0.size else 0.0
    for band in bands:
        weak = band.index[a0[band.index] < floor]
        if weak.size:
            raise ValueError(f"baseline excitation too weak at bins {weak.tolist()}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(P) / a0


def constraint_value(S: np.ndarray, band: Band) -> float:
    d = S[band.index] - band.tau
    return float(np.sum(d * d) / band.tau**2)


def spectrum_gradient(P: np.ndarray, P0: np.ndarray, band: Band) -> np.ndarray:
    """Complex dPhi/dRe(P) + i dPhi/dIm(P) per bin (zero off the band)."""
    G = np.zeros(P.shape, dtype=complex)
    b = band.index
    mag = np.abs(P[b])
    S = mag / np.abs(P0[b])
    G[b] = 2.0 * (S - band.tau) / band.tau**2 / np.abs(P0[b]) * P[b] / (mag + MAG_EPS)
    return G


def trace_gradient(G: np.ndarray) -> np.ndarray:
    """Pull a complex bin gradient back to the (unwindowed) trace samples.

    With X = F(w x), dPhi/dx_k = w_k Re(sum_m G_m e^{+i 2 pi m k / N}),
    i.e. N times the normalized inverse transform.
    """
    n = G.shape[0]
    return hann(n) * n * idft(G).real


def seed_adjoint(P: np.ndarray, P0: np.ndarray, band: Band, outlet_weights: np.ndarray) -> np.ndarray:
    """dPhi/dv^n for n = 0..N as an (N+1, n_dofs) array; row 0 is zero."""
    g = trace_gradient(spectrum_gradient(P, P0, band))
    seeds = np.zeros((g.size + 1, outlet_weights.size))
    seeds[1:] = np.outer(g, outlet_weights)
    return seeds


def band_objective(trace: np.ndarray, P0: np.ndarray, band: Band) -> float:
    """Phi of one band as a function of the raw trace (steps 1..N)."""
    return constraint_value(transmission(spectrum(trace), P0), band)


def spl(P: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(P) / P_REF)
