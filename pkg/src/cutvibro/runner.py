"""Scenario plumbing: signals, baseline cache, optimization loop, FD check."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import output, spectrum as spec
from .assembly import Material
from .config import ScenarioConfig
from .design import init_design
from .harmonic import harmonic_transmission
from .mesh import Mesh
from .mma import MMA
from .newmark import NewmarkParams
from .problem import FilterProblem

log = logging.getLogger(__name__)


def make_signal(cfg: ScenarioConfig) -> np.ndarray:
    """Incident pressure at t_n, n = 0..N."""
    sig, n, dt = cfg.signal, cfg.time.steps, cfg.time.dt
    if sig.kind == "white-noise":
        rng = np.random.Generator(np.random.PCG64(sig.seed))
        return sig.amplitude * rng.uniform(-1.0, 1.0, n + 1)
    if sig.kind == "sine":
        return sig.amplitude * np.sin(2 * np.pi * sig.frequency * dt * np.arange(n + 1))
    data = np.loadtxt(sig.path, delimiter=",", ndmin=1)
    if data.ndim > 1:
        data = data[:, -1]
    if data.size != n + 1:
        raise ValueError(f"signal file has {data.size} samples, expected {n + 1}")
    return sig.amplitude * data


def make_mesh(cfg: ScenarioConfig) -> Mesh:
    m = cfg.mesh
    return Mesh.duct(m.h, m.inlet_length, m.design_length, m.outlet_length, m.height)


def make_material(cfg: ScenarioConfig) -> Material:
    m = cfg.material
    return Material(
        E=m.E, nu=m.nu, rho_s=m.rho_s, c_a=m.c_a, rho_a=m.rho_a, alpha_void=m.alpha_void,
        zeta=m.zeta, omega1=2 * np.pi * m.f1, omega2=2 * np.pi * m.f2,
    )


# -- baseline cache --------------------------------------------------------

def baseline_key(cfg: ScenarioConfig, mesh: Mesh, signal: np.ndarray) -> str:
    payload = {
        "mesh": mesh.key(),
        "material": asdict(cfg.material),
        "dt": repr(cfg.time.dt),
        "steps": cfg.time.steps,
        "signal": hashlib.sha256(np.ascontiguousarray(signal).tobytes()).hexdigest(),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:32]


def cache_dir(cfg: ScenarioConfig) -> Path:
    if cfg.output.cache:
        return Path(cfg.output.cache)
    env = os.environ.get("CUTVIBRO_CACHE")
    return Path(env) if env else Path(cfg.output.directory) / "cache"


def baseline(cfg: ScenarioConfig, mesh: Mesh, signal: np.ndarray, problem: FilterProblem | None = None,
             use_cache: bool = True) -> np.ndarray:
    """Empty-duct spectrum, read from or written to the on-disk cache."""
    path = cache_dir(cfg) / f"baseline_{baseline_key(cfg, mesh, signal)}.npz"
    if use_cache and path.is_file():
        with np.load(path) as data:
            return data["P0"]
    if problem is None:
        problem = FilterProblem(mesh, make_material(cfg), NewmarkParams(cfg.time.dt), signal, [], 0.0,
                                baseline=np.ones(cfg.time.steps))
    P0 = problem.baseline_spectrum()
    if use_cache:
        buf = io.BytesIO()
        np.savez(buf, P0=P0)
        output.atomic_write_bytes(path, buf.getvalue())
    return P0


def build_problem(cfg: ScenarioConfig, use_cache: bool = True) -> FilterProblem:
    mesh = make_mesh(cfg)
    signal = make_signal(cfg)
    P0 = baseline(cfg, mesh, signal, use_cache=use_cache)
    return FilterProblem(mesh, make_material(cfg), NewmarkParams(cfg.time.dt), signal,
                         cfg.band_objects(), cfg.design.filter_radius, baseline=P0)


def initial_design(cfg: ScenarioConfig, mesh: Mesh, seed: int | None = None) -> np.ndarray:
    d = cfg.design
    s = init_design(mesh, d.r1, d.r2, d.lx, d.ly, d.threshold)
    if d.noise > 0:
        # shifts the 0/1 start off the symmetric saddle configurations
        rng = np.random.Generator(np.random.PCG64(cfg.signal.seed if seed is None else seed))
        s = np.clip(np.abs(s - d.noise * rng.uniform(0.0, 1.0, s.size)), 0.0, 1.0)
    return s


# -- reports -----------------------------------------------------------------

def transmission_rows(problem: FilterProblem, S: np.ndarray, P: np.ndarray):
    n = problem.N
    f = spec.frequencies(n, problem.nm.dt)
    target = np.full(n, np.nan)
    for band in problem.bands:
        target[band.index] = band.tau
    spl_d, spl_e = spec.spl(P), spec.spl(problem.P0)
    return [(f[k], S[k], target[k], spl_d[k], spl_e[k]) for k in range(n // 2 + 1)]


TRANSMISSION_HEADER = ["f_Hz", "S", "S_target", "SPL_design_dB", "SPL_empty_dB"]
ITERATION_HEADER = ["iter", "z", "phi1", "phi2", "max_ds"]


@dataclass
class OptimizationResult:
    s: np.ndarray
    history: list = field(default_factory=list)
    designs: list = field(default_factory=list)
    final: object = None

    @property
    def phi(self) -> np.ndarray:
        return np.array([row[2:4] for row in self.history])


def optimize(cfg: ScenarioConfig, problem: FilterProblem | None = None, iterations: int | None = None,
             s0: np.ndarray | None = None, out_dir: str | Path | None = None, seed: int | None = None,
             keep_designs: bool = False) -> OptimizationResult:
    """Fixed-iteration MMA loop on the bound formulation."""
    problem = problem or build_problem(cfg)
    iters = cfg.optimizer.iterations if iterations is None else iterations
    s = initial_design(cfg, problem.mesh, seed) if s0 is None else np.asarray(s0, float).copy()
    m = len(problem.bands)
    oc = cfg.optimizer
    mma = MMA(s.size, m, c=oc.c, asyinit=oc.asyinit, asydecr=oc.asydecr, asyincr=oc.asyincr,
              move=oc.move or None)
    out = Path(out_dir) if out_dir else None
    res = OptimizationResult(s)
    scale = None
    for k in range(iters + 1):
        ev = problem.evaluate(s)
        phi = np.array(ev.phi)
        padded = list(phi) + [np.nan] * (2 - m)
        if out and (k % max(oc.snapshot_every, 1) == 0 or k == iters):
            output.write_vtk(out / f"design_{k:04d}.vtk", problem.mesh, {"s_bar": ev.s_bar})
        if keep_designs:
            res.designs.append(s.copy())
        if k == iters:
            res.history.append((k, float(np.nanmax(phi)), *padded[:2], 0.0))
            res.final = ev
            break
        grads = np.array(problem.gradients(ev))
        if oc.normalize:
            if scale is None:
                scale = np.where(phi > 0, phi, 1.0)
            phi, grads = phi / scale, grads / scale[:, None]
        s_new, z = mma.update(s, phi, grads)
        res.history.append((k, z, *padded[:2], float(np.abs(s_new - s).max())))
        log.info("iter %4d  z %.6e  phi %s", k, z, " ".join(f"{p:.6e}" for p in ev.phi))
        s = s_new
    res.s = s
    if out:
        output.write_csv(out / "iterations.csv", ITERATION_HEADER, res.history)
        output.write_csv(out / "transmission.csv", TRANSMISSION_HEADER,
                         transmission_rows(problem, res.final.S, res.final.P))
        np.savetxt(out / "design.csv", s, fmt=output.FLOAT_FMT)
    return res


def simulate(cfg: ScenarioConfig, s: np.ndarray | None = None, out_dir=None, problem=None):
    """Forward run of one design; writes the trace and transmission tables."""
    problem = problem or build_problem(cfg)
    s = initial_design(cfg, problem.mesh) if s is None else s
    ev = problem.evaluate(s)
    if out_dir:
        out = Path(out_dir)
        t = problem.nm.dt * np.arange(problem.N + 1)
        output.write_csv(out / "trace.csv", ["t", "p_out"], zip(t, ev.hist.trace))
        output.write_csv(out / "transmission.csv", TRANSMISSION_HEADER, transmission_rows(problem, ev.S, ev.P))
        output.write_vtk(out / "design.vtk", problem.mesh, {"s_bar": ev.s_bar},
                         {"phase": problem.asm.assemble(ev.s_bar).kinds})
    return ev


def gradcheck(cfg: ScenarioConfig, n_vars: int = 10, step: float = 1e-6, seed: int = 0,
              problem: FilterProblem | None = None, s: np.ndarray | None = None, out_dir=None):
    """Central-difference check of the adjoint gradient on random variables.

    Returns rows (variable, constraint, adjoint, fd, rel_error).
    """
    problem = problem or build_problem(cfg)
    s = initial_design(cfg, problem.mesh, seed) if s is None else s
    rng = np.random.Generator(np.random.PCG64(seed))
    # keep perturbed values inside the box
    interior = np.flatnonzero((s > step) & (s < 1 - step))
    idx = np.sort(rng.choice(interior, size=min(n_vars, interior.size), replace=False))
    ev = problem.evaluate(s)
    grads = problem.gradients(ev)
    rows = []
    for i in idx:
        sp_, sm = s.copy(), s.copy()
        sp_[i] += step
        sm[i] -= step
        fd = (problem.phi(sp_) - problem.phi(sm)) / (2 * step)
        for c in range(len(problem.bands)):
            adj = grads[c][i]
            denom = max(abs(adj), abs(fd[c]))
            rel = abs(adj - fd[c]) / denom if denom > 0 else 0.0
            rows.append((int(i), c + 1, adj, fd[c], rel))
    if out_dir:
        output.write_csv(Path(out_dir) / "gradcheck.csv", ["variable", "constraint", "adjoint", "fd", "rel_error"], rows)
    return rows


def harmonic_check(problem: FilterProblem, ev, out_dir=None):
    """Per-band mean |S_transient - S_harm| and the harmonic S on band bins."""
    freqs_all = spec.frequencies(problem.N, problem.nm.dt)
    bins = np.unique(np.concatenate([b.index for b in problem.bands]))
    S_h = harmonic_transmission(problem.asm, ev.s_bar, problem.empty_level_set(), freqs_all[bins])
    table = dict(zip(bins.tolist(), S_h))
    summary = []
    for band in problem.bands:
        sh = np.array([table[b] for b in band.bins])
        st = ev.S[band.index]
        summary.append({"tau": band.tau, "mean_abs_diff": float(np.mean(np.abs(st - sh))),
                        "mean_S_transient": float(st.mean()), "mean_S_harmonic": float(sh.mean())})
    if out_dir:
        output.write_csv(Path(out_dir) / "harmonic.csv", ["f_Hz", "S_transient", "S_harmonic"],
                         [(freqs_all[b], ev.S[b], table[b]) for b in bins])
    return summary
