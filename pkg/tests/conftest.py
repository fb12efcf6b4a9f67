import numpy as np
import pytest

from cutvibro import runner
from cutvibro.assembly import Assembler, Material
from cutvibro.config import preset
from cutvibro.mesh import Mesh


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("cache")


@pytest.fixture(scope="session")
def coarse_cfg(cache_dir):
    cfg = preset("lowpass-coarse")
    cfg.output.cache = str(cache_dir)
    return cfg


@pytest.fixture(scope="session")
def coarse_problem(coarse_cfg):
    return runner.build_problem(coarse_cfg)


@pytest.fixture(scope="session")
def coarse_s0(coarse_cfg, coarse_problem):
    return runner.initial_design(coarse_cfg, coarse_problem.mesh)


@pytest.fixture(scope="session")
def small_mesh():
    return Mesh.duct(0.02, 0.04, 0.08, 0.04, 0.06)


@pytest.fixture(scope="session")
def small_asm(small_mesh):
    return Assembler(small_mesh, Material())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


TINY_INI = """
[scenario]
name = tiny

[mesh]
h = 0.01
inlet_length = 0.02
design_length = 0.04
outlet_length = 0.02
height = 0.03

[time]
dt = 2.5e-5
steps = 40

[design]
filter_radius = 0.01
r1 = 1
r2 = 1
lx = 0.03
ly = 0.03
noise = 0.02

[bands]
pass = [1000, 3000]
stop = (3000, 6000]

[optimizer]
iterations = 3
snapshot_every = 1
"""


@pytest.fixture
def tiny_ini(tmp_path, cache_dir):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI + f"\n[output]\ncache = {cache_dir}\ndirectory = {tmp_path / 'out'}\n")
    return path


# acceptance criteria: one PASS/FAIL line each, repeated in the terminal summary
_ACCEPTANCE: dict[str, str] = {}


def _criterion_order(key):
    num = "".join(ch for ch in key if ch.isdigit())
    return int(num or 0), key


@pytest.fixture(scope="session")
def report():
    def record(criterion: str, ok: bool | None, detail: str) -> bool:
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {criterion:<4} {status}  {detail}"
        _ACCEPTANCE[criterion] = line
        print(line)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_ACCEPTANCE, key=_criterion_order):
            terminalreporter.write_line(_ACCEPTANCE[key])
