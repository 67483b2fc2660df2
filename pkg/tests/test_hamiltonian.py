import numpy as np
import pytest

from conftest import MODEL_SPECS
from entower.errors import ConfigError
from entower.hamiltonian import (HEISENBERG_PAIR, SINGLET_PROJECTOR, ModelSpec, TermList,
                                 apply_h, apply_total_spin_squared, compile_model,
                                 pair_product_block, sector_matrix)
from entower.hilbert import build_sector_basis
from entower.lattice import build_lattice
from entower.oracles import full_hamiltonian, full_total_spin_squared, spin_dot

SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)  # (|up,dn> - |dn,up>)/sqrt2, c = b0 | b1<<1


def test_heisenberg_pair_on_up_down():
    up_down = np.array([0.0, 1.0, 0.0, 0.0])  # site 0 up, site 1 down
    assert np.allclose(HEISENBERG_PAIR @ up_down, [0.0, -0.25, 0.5, 0.0])


def test_singlet_projector_spectrum():
    assert np.allclose(SINGLET_PROJECTOR @ SINGLET, SINGLET)
    triplets = [np.array([1.0, 0, 0, 0]), np.array([0, 0, 0, 1.0]),
                np.array([0, 1.0, 1.0, 0]) / np.sqrt(2)]
    for t in triplets:
        assert np.allclose(SINGLET_PROJECTOR @ t, 0.0)


def test_projector_product_on_three_singlets():
    block = pair_product_block(6, [(0, 1), (2, 3), (4, 5)])
    # singlets on (0,1), (2,3), (4,5): local index = c01 | c23 << 2 | c45 << 4
    state = np.einsum("a,b,c->cba", SINGLET, SINGLET, SINGLET).reshape(-1)
    assert np.allclose(block @ state, state)
    evals = np.linalg.eigvalsh(block)
    assert np.allclose(np.sort(evals)[-1], 1.0) and np.isclose(evals.sum(), 1.0)


def test_pair_product_matches_kron():
    block = pair_product_block(4, [(0, 1), (2, 3)])
    # local bit 0 is least significant, so kron(op on (2,3), op on (0,1))
    assert np.allclose(block, np.kron(SINGLET_PROJECTOR, SINGLET_PROJECTOR))


def two_site_terms(J=1.0):
    terms = TermList()
    terms.add((0, 1), J * HEISENBERG_PAIR)
    return terms


def test_two_site_singlet_energy():
    basis = build_sector_basis(2, 1)  # states 0b01 (site0 up), 0b10
    v = np.array([1.0, -1.0]) / np.sqrt(2)
    assert np.allclose(apply_h(two_site_terms(), basis, v), -0.75 * v, atol=1e-15)


def ring_terms(n):
    terms = TermList()
    for i in range(n):
        terms.add((i, (i + 1) % n), HEISENBERG_PAIR)
    return terms


def test_four_site_ring_ground_energy():
    # oracle: 16x16 Pauli-built matrix
    oracle = sum(spin_dot(i, (i + 1) % 4, 4) for i in range(4)).toarray()
    e_oracle = np.linalg.eigvalsh(oracle)[0]
    assert e_oracle == pytest.approx(-2.0, abs=1e-12)
    lows = [np.linalg.eigvalsh(sector_matrix(ring_terms(4), build_sector_basis(4, k)).toarray())[0]
            for k in range(5)]
    assert min(lows) == pytest.approx(e_oracle, abs=1e-12)


@pytest.mark.parametrize("model", ["dimer", "jq3", "cbjq"])
def test_apply_h_is_symmetric(model, rng):
    lat = build_lattice(4, 4)
    basis = build_sector_basis(16, 8)
    terms = compile_model(MODEL_SPECS[model], lat).packed()
    u, v = rng.standard_normal((2, len(basis)))
    lhs = u @ apply_h(terms, basis, v)
    rhs = apply_h(terms, basis, u) @ v
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_apply_h_dimension_mismatch():
    with pytest.raises(ValueError):
        apply_h(two_site_terms(), build_sector_basis(2, 1), np.ones(3))


def test_apply_h_deterministic(rng):
    lat = build_lattice(4, 4)
    basis = build_sector_basis(16, 8)
    terms = compile_model(MODEL_SPECS["jq3"], lat).packed()
    v = rng.standard_normal(len(basis))
    assert np.array_equal(apply_h(terms, basis, v), apply_h(terms, basis, v))


@pytest.mark.parametrize("model", ["dimer", "jq3", "cbjq"])
def test_local_blocks_symmetric_and_conserving(model):
    compile_model(MODEL_SPECS[model], build_lattice(4, 4)).check()


def test_term_counts():
    lat = build_lattice(4, 4)
    assert len(compile_model(MODEL_SPECS["dimer"], lat)) == 32
    assert len(compile_model(MODEL_SPECS["jq3"], lat)) == 32 + 32
    assert len(compile_model(MODEL_SPECS["cbjq"], lat)) == 32 + 16
    single = ModelSpec("cbjq", Q=1.0, cbjq_single_pairing=True)
    assert len(compile_model(single, lat)) == 32 + 8


def test_model_spec_validation():
    with pytest.raises(ConfigError):
        ModelSpec("ising")
    with pytest.raises(ConfigError):
        ModelSpec("jq3", J=0.0, Q=0.0)
    with pytest.raises(ConfigError):
        ModelSpec("dimer", J1=float("nan"))


def test_total_spin_squared_examples():
    b2 = build_sector_basis(2, 1)
    singlet = np.array([1.0, -1.0]) / np.sqrt(2)
    triplet = np.array([1.0, 1.0]) / np.sqrt(2)
    assert np.allclose(apply_total_spin_squared(2, b2, singlet), 0.0, atol=1e-15)
    assert np.allclose(apply_total_spin_squared(2, b2, triplet), 2.0 * triplet)
    for n in (4, 7, 10):
        full = build_sector_basis(n, n)
        v = np.ones(1)
        assert np.allclose(apply_total_spin_squared(n, full, v), (n / 2) * (n / 2 + 1))


@pytest.mark.parametrize("model", ["dimer", "jq3", "cbjq"])
def test_h_commutes_with_total_spin(model, rng):
    lat = build_lattice(4, 4)
    basis = build_sector_basis(16, 8)
    terms = compile_model(MODEL_SPECS[model], lat).packed()
    for _ in range(20):
        v = rng.standard_normal(len(basis))
        hs = apply_h(terms, basis, apply_total_spin_squared(16, basis, v))
        sh = apply_total_spin_squared(16, basis, apply_h(terms, basis, v))
        assert np.max(np.abs(hs - sh)) < 1e-10


def _sector_slice(mat, basis):
    return mat[basis.states][:, basis.states].toarray()


# smallest admissible lattices; J-Q3 six-spin terms need Lx, Ly >= 4 for even sizes
ORACLE_CASES = [
    ("dimer", 2, 2), ("dimer", 2, 4), ("dimer", 4, 2), ("dimer", 2, 6),
    ("cbjq", 2, 2), ("cbjq", 2, 4), ("cbjq", 2, 6),
]


@pytest.mark.parametrize("model,Lx,Ly", ORACLE_CASES)
def test_dense_assembly_matches_pauli_oracle(model, Lx, Ly):
    lat = build_lattice(Lx, Ly)
    spec = MODEL_SPECS[model]
    full = full_hamiltonian(spec, lat)
    for n_up in range(lat.n + 1):
        basis = build_sector_basis(lat.n, n_up)
        ours = sector_matrix(compile_model(spec, lat), basis).toarray()
        assert np.max(np.abs(ours - _sector_slice(full, basis))) < 1e-12


def test_dense_assembly_matches_pauli_oracle_jq3():
    lat = build_lattice(4, 4)
    full = full_hamiltonian(MODEL_SPECS["jq3"], lat)
    for n_up in (8, 11):
        basis = build_sector_basis(16, n_up)
        ours = sector_matrix(compile_model(MODEL_SPECS["jq3"], lat), basis)
        assert abs(ours - full[basis.states][:, basis.states]).max() < 1e-12


def test_total_spin_matches_oracle():
    n = 8
    full = full_total_spin_squared(n)
    for n_up in range(n + 1):
        basis = build_sector_basis(n, n_up)
        eye = np.eye(len(basis))
        ours = np.column_stack([apply_total_spin_squared(n, basis, e) for e in eye])
        assert np.max(np.abs(ours - _sector_slice(full, basis))) < 1e-12
