import functools

import numpy as np
import pytest

from entower.eigensolver import lanczos_ground
from entower.hamiltonian import ModelSpec, apply_h, compile_model
from entower.hilbert import build_sector_basis
from entower.lattice import build_lattice

# couplings used wherever "every model" is exercised
MODEL_SPECS = {
    "dimer": ModelSpec("dimer", J1=1.0, J2=1.90951),
    "jq3": ModelSpec("jq3", J=1.0, Q=1.49153),
    "cbjq": ModelSpec("cbjq", J=1.0, Q=4.598),
}


@functools.lru_cache(maxsize=None)
def ground_state(model, Lx, Ly, n_up=None, **couplings):
    spec = ModelSpec(model, **couplings) if couplings else MODEL_SPECS[model]
    lat = build_lattice(Lx, Ly)
    basis = build_sector_basis(lat.n, lat.n // 2 if n_up is None else n_up)
    terms = compile_model(spec, lat).packed()
    res = lanczos_ground(lambda v: apply_h(terms, basis, v), len(basis), seed=7)
    return lat, basis, terms, res


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, repeated at the end of the session
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
