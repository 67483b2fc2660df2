import numpy as np
import pytest
import scipy.linalg

from conftest import ground_state
from entower.entanglement import (admissible_spins, discarded_weight, entanglement_entropy,
                                  levels_to_csv, reduced_density_matrix,
                                  spin_resolved_spectrum, subsystem_spin_matrix)
from entower.errors import LabelingError, NumericalError
from entower.hilbert import build_sector_basis
from entower.lattice import Cut, build_lattice, make_cut


def brute_rdm(psi, basis, a_sites):
    """Partial trace through the full 2^n tensor, written independently of the package."""
    n = basis.n
    full = np.zeros(1 << n)
    full[basis.states] = psi
    # index the tensor by bit value per site: tensor[b_0, ..., b_{n-1}]
    tensor = full.reshape((2,) * n).transpose(list(range(n))[::-1])
    b_sites = [s for s in range(n) if s not in a_sites]
    mat = tensor.transpose(list(a_sites) + b_sites).reshape(1 << len(a_sites), -1)
    return mat @ mat.T


def cut_of(n, a_sites):
    return Cut(tuple(a_sites), tuple(s for s in range(n) if s not in a_sites))


def singlet_pair():
    basis = build_sector_basis(2, 1)
    return basis, np.array([1.0, -1.0]) / np.sqrt(2)


def test_singlet_pair_blocks():
    basis, psi = singlet_pair()
    rdm = reduced_density_matrix(psi, basis, cut_of(2, [0]))
    assert set(rdm.blocks) == {-0.5, 0.5}
    for block in rdm.blocks.values():
        assert np.allclose(block, [[0.5]])


def test_product_state_has_no_entanglement():
    basis = build_sector_basis(4, 2)
    psi = (basis.states == 0b0101).astype(float)
    for a in ([0], [1, 2], [0, 3, 2]):
        cut = cut_of(4, a)
        rdm = reduced_density_matrix(psi, basis, cut)
        lam = np.concatenate([np.linalg.eigvalsh(b) for b in rdm.blocks.values()])
        assert np.sum(lam > 1e-12) == 1 and np.isclose(lam.max(), 1.0)
        assert entanglement_entropy(rdm) == pytest.approx(0.0, abs=1e-12)
    cut = cut_of(4, [0])
    levels = spin_resolved_spectrum(reduced_density_matrix(psi, basis, cut), cut)
    assert len(levels) == 1
    assert levels[0].lam == pytest.approx(1.0) and levels[0].xi == pytest.approx(0.0, abs=1e-12)


def test_symmetry_breaking_state_cannot_be_labeled():
    # |down, up> on A is a mix of S_A = 0 and S_A = 1
    basis = build_sector_basis(4, 2)
    psi = (basis.states == 0b0101).astype(float)
    cut = cut_of(4, [1, 2])
    with pytest.raises(LabelingError):
        spin_resolved_spectrum(reduced_density_matrix(psi, basis, cut), cut)


def test_four_site_ring_block_matches_brute_force():
    from entower.hamiltonian import HEISENBERG_PAIR, TermList, sector_matrix

    terms = TermList()
    for i in range(4):
        terms.add((i, (i + 1) % 4), HEISENBERG_PAIR)
    basis = build_sector_basis(4, 2)
    psi = np.linalg.eigh(sector_matrix(terms, basis).toarray())[1][:, 0]
    cut = cut_of(4, [0, 1])
    rdm = reduced_density_matrix(psi, basis, cut)
    ref = brute_rdm(psi, basis, [0, 1])
    # m = 0 configurations of two sites: 0b01, 0b10
    assert np.allclose(np.linalg.eigvalsh(rdm.blocks[0.0]),
                       np.linalg.eigvalsh(ref[np.ix_([1, 2], [1, 2])]), atol=1e-12)
    assert np.allclose(np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in rdm.blocks.values()])),
                       np.linalg.eigvalsh(ref), atol=1e-12)


def test_normalization_checked():
    basis, psi = singlet_pair()
    with pytest.raises(NumericalError):
        reduced_density_matrix(1.1 * psi, basis, cut_of(2, [0]))


def test_spin_matrix_examples():
    one = cut_of(2, [0])
    assert np.allclose(subsystem_spin_matrix(one, 0.5), [[0.75]])
    two = cut_of(3, [0, 1])
    assert np.allclose(np.linalg.eigvalsh(subsystem_spin_matrix(two, 0.0)), [0, 2])


def test_spin_matrix_four_sites_oracle():
    from entower.oracles import full_total_spin_squared

    # dense oracle over the full 16-dim space restricted to Sz = 0
    full = full_total_spin_squared(4).toarray()
    idx = [c for c in range(16) if bin(c).count("1") == 2]
    oracle = np.linalg.eigvalsh(full[np.ix_(idx, idx)])
    ours = np.linalg.eigvalsh(subsystem_spin_matrix(cut_of(6, [0, 1, 2, 3]), 0.0))
    assert np.allclose(ours, oracle, atol=1e-12)
    assert np.allclose(ours, [0, 0, 2, 2, 2, 6], atol=1e-12)


def test_admissible_spins():
    assert admissible_spins(4, 0.0) == [0, 1, 2]
    assert admissible_spins(5, -0.5) == [0.5, 1.5, 2.5]
    assert admissible_spins(4, 2.0) == [2.0]


def test_singlet_pair_levels():
    basis, psi = singlet_pair()
    cut = cut_of(2, [0])
    levels = spin_resolved_spectrum(reduced_density_matrix(psi, basis, cut), cut)
    assert len(levels) == 2
    assert sorted(lv.sz for lv in levels) == [-0.5, 0.5]
    for lv in levels:
        assert lv.spin == 0.5 and lv.lam == pytest.approx(0.5) and lv.xi == pytest.approx(np.log(2))
    assert entanglement_entropy(reduced_density_matrix(psi, basis, cut)) == pytest.approx(np.log(2))


def test_levels_carry_exact_spin_4x4():
    lat, basis, _, res = ground_state("dimer", 4, 4, J1=1.0, J2=1.0)
    cut = make_cut(lat, "row:0")
    rdm = reduced_density_matrix(res.ground_vector, basis, cut)
    levels = spin_resolved_spectrum(rdm, cut, keep_vectors=True)
    s2 = subsystem_spin_matrix(cut, 0.0)
    block0 = [lv for lv in levels if lv.sz == 0.0]
    assert block0
    for lv in block0:
        assert np.linalg.norm(s2 @ lv.vector - lv.spin * (lv.spin + 1) * lv.vector) < 1e-8
        assert lv.xi == -np.log(lv.lam)
        assert lv.spin >= abs(lv.sz)


def test_entropy_matches_matrix_log(rng):
    basis = build_sector_basis(6, 3)
    psi = rng.standard_normal(len(basis))
    psi /= np.linalg.norm(psi)
    a = sorted(rng.choice(6, size=3, replace=False).tolist())
    rho = brute_rdm(psi, basis, a)
    oracle = -np.trace(rho @ scipy.linalg.logm(rho)).real
    rdm = reduced_density_matrix(psi, basis, cut_of(6, a))
    assert entanglement_entropy(rdm) == pytest.approx(oracle, abs=1e-9)


@pytest.mark.parametrize("model,Lx,Ly,cut_spec", [
    ("dimer", 2, 4, "row:0"), ("dimer", 4, 2, "sites:0,5,6"), ("cbjq", 2, 4, "sites:1,2,3"),
    ("dimer", 2, 2, "sites:0"), ("cbjq", 2, 2, "row:1")])
def test_sector_rdm_equals_brute_force(model, Lx, Ly, cut_spec):
    lat, basis, _, res = ground_state(model, Lx, Ly)
    cut = make_cut(lat, cut_spec)
    rdm = reduced_density_matrix(res.ground_vector, basis, cut)
    levels = spin_resolved_spectrum(rdm, cut, lambda_floor=1e-14)
    ref = np.linalg.eigvalsh(brute_rdm(res.ground_vector, basis, list(cut.a_sites)))
    ref = np.sort(ref[ref > 1e-14])
    assert np.allclose(np.sort([lv.lam for lv in levels]), ref, atol=1e-10, rtol=0)


def test_random_states_n10_against_brute_force(rng):
    basis = build_sector_basis(10, 5)
    for _ in range(5):
        psi = rng.standard_normal(len(basis))
        psi /= np.linalg.norm(psi)
        a = rng.permutation(10)[: rng.integers(1, 6)].tolist()
        rdm = reduced_density_matrix(psi, basis, cut_of(10, a))
        ours = np.sort(np.concatenate([np.linalg.eigvalsh(b) for b in rdm.blocks.values()]))
        assert np.allclose(ours, np.linalg.eigvalsh(brute_rdm(psi, basis, a)), atol=1e-12)


@pytest.mark.parametrize("model", ["dimer", "jq3", "cbjq"])
def test_rdm_invariants_4x4(model):
    lat, basis, _, res = ground_state(model, 4, 4)
    cut = make_cut(lat, "row:0")
    rdm = reduced_density_matrix(res.ground_vector, basis, cut)
    assert rdm.trace() == pytest.approx(1.0, abs=1e-10)
    for block in rdm.blocks.values():
        assert np.linalg.eigvalsh(block).min() > -1e-12
    levels = spin_resolved_spectrum(rdm, cut)
    assert sum(lv.lam for lv in levels) + discarded_weight(rdm) == pytest.approx(1.0, abs=1e-10)
    # every S multiplet of the m = 0 block reappears in each block with |m'| <= S
    for lv in (lv for lv in levels if lv.sz == 0.0):
        for m in np.arange(-lv.spin, lv.spin + 1):
            partners = [o for o in levels if o.sz == m and o.spin == lv.spin
                        and abs(o.lam - lv.lam) < 1e-9]
            assert partners, (lv, m)


def test_cut_order_invariance():
    lat, basis, _, res = ground_state("cbjq", 4, 4)
    spectra = []
    for spec in ("sites:0,1,2,3,5", "sites:5,3,0,2,1"):
        cut = make_cut(lat, spec)
        levels = spin_resolved_spectrum(reduced_density_matrix(res.ground_vector, basis, cut), cut)
        spectra.append(sorted((round(lv.lam, 11), lv.spin, lv.sz) for lv in levels))
    assert spectra[0] == spectra[1]


def test_odd_cut_half_integer_spins():
    lat, basis, _, res = ground_state("dimer", 4, 4, J1=1.0, J2=1.0)
    cut = make_cut(lat, "sites:0,1,2")
    levels = spin_resolved_spectrum(reduced_density_matrix(res.ground_vector, basis, cut), cut)
    assert {lv.spin for lv in levels} <= {0.5, 1.5}
    assert all(lv.sz in (-1.5, -0.5, 0.5, 1.5) for lv in levels)


def test_levels_csv_format():
    basis, psi = singlet_pair()
    cut = cut_of(2, [0])
    text = levels_to_csv(spin_resolved_spectrum(reduced_density_matrix(psi, basis, cut), cut))
    lines = text.splitlines()
    assert lines[0] == "sz,spin,lambda,xi"
    assert lines[1].split(",")[1] == "0.5"
    assert float(lines[1].split(",")[3]) == pytest.approx(np.log(2), abs=1e-15)
