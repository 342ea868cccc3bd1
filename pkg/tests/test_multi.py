import itertools
import math
from collections import Counter

import numpy as np
import pytest
import scipy.sparse as sp

from oscfield import operators as ops
from oscfield.fields import CoherentFieldSpec
from oscfield.modes import ModeSet
from oscfield.multi import (
    BoldOperator,
    ExtensionWeights,
    MultiState,
    VacuumSpec,
    bold_algebra_report,
    coherent_energies,
    dgamma,
    embed_identical,
    embed_product,
    entangled_pair,
    extend_operator,
    generalized_coherent,
    sector_basis,
    sector_dimension,
    sector_energy_spectrum_demo,
    vacuum_energy,
    vacuum_state,
)


# ---------------------------------------------------------------- oracle ---
# Everything sector-related is checked against the literal construction in
# the k-fold tensor power of C^d: columns of S are the normalized symmetric
# occupation states, so any symmetric-space matrix must equal S+ (...) S.

def _sym_basis_matrix(d, sb):
    cols = np.zeros((d ** sb.k, len(sb)), dtype=complex)
    for j, m in enumerate(sb.occupations):
        weight = 1.0 / math.sqrt(
            math.factorial(sb.k)
            * np.prod([math.factorial(c) for c in Counter(m).values()]))
        for perm in itertools.permutations(m):
            idx = 0
            for b in perm:
                idx = idx * d + b
            cols[idx, j] += weight
    return cols


def _slot_sum(X, k):
    d = X.shape[0]
    total = np.zeros((d ** k,) * 2, dtype=complex)
    for slot in range(k):
        term = np.eye(1, dtype=complex)
        for pos in range(k):
            term = np.kron(term, X if pos == slot else np.eye(d))
        total += term
    return total


def _tensor_product(vectors):
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(out, np.asarray(v, dtype=complex))
    return out


def _random_matrix(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def _random_unit(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


# ----------------------------------------------------------------- bases ---

def test_sector_dimensions():
    for d, k in [(2, 1), (3, 2), (3, 3), (5, 4)]:
        sb = sector_basis(d, k)
        assert sector_dimension(d, k) == len(sb) == math.comb(d + k - 1, k)
        for j, m in enumerate(sb.occupations):
            assert tuple(sorted(m)) == m
            assert sb.index[m] == j
        cols = _sym_basis_matrix(d, sb)
        np.testing.assert_allclose(cols.conj().T @ cols, np.eye(len(sb)),
                                   atol=1e-12)


# ---------------------------------------------------------------- dgamma ---

def test_dgamma_matches_slot_sum():
    rng = np.random.default_rng(31)
    for d, k in [(3, 1), (4, 2), (3, 3)]:
        sb = sector_basis(d, k)
        X = _random_matrix(rng, d)
        S = _sym_basis_matrix(d, sb)
        oracle = S.conj().T @ _slot_sum(X, k) @ S
        np.testing.assert_allclose(dgamma(X, sb).toarray(), oracle,
                                   atol=1e-12)


def test_dgamma_is_lie_homomorphism():
    rng = np.random.default_rng(8)
    sb = sector_basis(4, 3)
    X, Y = _random_matrix(rng, 4), _random_matrix(rng, 4)
    lhs = dgamma(X, sb) @ dgamma(Y, sb) - dgamma(Y, sb) @ dgamma(X, sb)
    rhs = dgamma(X @ Y - Y @ X, sb)
    assert ops.max_abs(lhs - rhs) <= 1e-12


def test_dgamma_diagonal_is_exact_integer_multiple():
    x = np.diag([0.1234567890123456, math.pi, math.e])
    sb = sector_basis(3, 3)
    g = dgamma(x, sb).toarray()
    for q in range(3):
        j = sb.index[(q, q, q)]
        assert g[j, j] == x[q, q] * 3  # bitwise, not just close


def test_dgamma_rejects_wrong_dimension():
    with pytest.raises(ValueError, match="dimension"):
        dgamma(np.eye(3), sector_basis(4, 2))


# ------------------------------------------------------------- embeddings ---

def test_embed_identical_multinomial_weights():
    a, b = 0.6, 0.8j
    sb = sector_basis(2, 3)
    out = embed_identical(np.array([a, b]), sb)
    assert out[sb.index[(0, 0, 0)]] == pytest.approx(a ** 3)
    assert out[sb.index[(0, 0, 1)]] == pytest.approx(math.sqrt(3) * a * a * b)
    assert out[sb.index[(0, 1, 1)]] == pytest.approx(math.sqrt(3) * a * b * b)
    assert out[sb.index[(1, 1, 1)]] == pytest.approx(b ** 3)
    assert np.linalg.norm(out) == pytest.approx(1.0)


def test_embed_identical_matches_tensor_power():
    rng = np.random.default_rng(41)
    for d, k in [(3, 2), (3, 3), (4, 2)]:
        sb = sector_basis(d, k)
        v = _random_unit(rng, d)
        S = _sym_basis_matrix(d, sb)
        np.testing.assert_allclose(embed_identical(v, sb),
                                   S.conj().T @ _tensor_product([v] * k),
                                   atol=1e-12)


def test_embed_product_matches_projected_tensor():
    rng = np.random.default_rng(42)
    for d, k in [(3, 2), (3, 3)]:
        sb = sector_basis(d, k)
        vs = [_random_unit(rng, d) for _ in range(k)]
        S = _sym_basis_matrix(d, sb)
        np.testing.assert_allclose(embed_product(vs, sb),
                                   S.conj().T @ _tensor_product(vs),
                                   atol=1e-12)
        # repeated vector degenerates to the identical-product embedding
        np.testing.assert_allclose(embed_product([vs[0]] * k, sb),
                                   embed_identical(vs[0], sb), atol=1e-12)


def test_embed_product_orthogonal_pair_norm():
    sb = sector_basis(2, 2)
    out = embed_product([np.array([1.0, 0.0]), np.array([0.0, 1.0])], sb)
    # projection onto the symmetric subspace halves the squared norm
    assert np.linalg.norm(out) == pytest.approx(1.0 / math.sqrt(2))
    with pytest.raises(ValueError, match="exactly 2"):
        embed_product([np.array([1.0, 0.0])], sb)


# ----------------------------------------------------- bold block algebra ---

def test_bold_operator_arithmetic():
    rng = np.random.default_rng(3)
    blk = {k: sp.csr_matrix(_random_matrix(rng, sector_dimension(3, k)))
           for k in (1, 2, 3)}
    A = BoldOperator({1: blk[1], 2: blk[2]})
    B = BoldOperator({2: blk[2], 3: blk[3]})

    tot = A + B
    assert set(tot.blocks) == {1, 2, 3}
    assert ops.max_abs(tot.blocks[2] - 2.0 * blk[2]) == 0.0
    assert ops.max_abs(tot.blocks[1] - blk[1]) == 0.0

    assert set((A @ B).blocks) == {2}
    np.testing.assert_allclose((A @ B).blocks[2].toarray(),
                               (blk[2] @ blk[2]).toarray())
    assert ops.max_abs((A - A).blocks[1]) == 0.0
    np.testing.assert_allclose((2.5 * A).blocks[1].toarray(),
                               2.5 * blk[1].toarray())
    np.testing.assert_allclose(A.adjoint().blocks[2].toarray(),
                               blk[2].conj().T.toarray())
    assert ops.max_abs(A.commutator(A).blocks[2]) <= 1e-12

    state = MultiState(3, {1: _random_unit(rng, 3), 3: _random_unit(rng, 10)})
    applied = B.apply(state)
    assert set(applied.sectors) == {3}
    np.testing.assert_allclose(applied.sectors[3],
                               blk[3] @ state.sectors[3])
    expect = B.expectation(state)
    assert expect == pytest.approx(
        np.vdot(state.sectors[3], blk[3] @ state.sectors[3]))


def test_multistate_validation_and_rows():
    with pytest.raises(ValueError, match="sector 2"):
        MultiState(3, {2: np.zeros(5)})
    st = MultiState(2, {1: np.array([1.0, 0.0]),
                        2: np.array([0.0, 0.8, 0.0])})
    rows = st.csv_rows(threshold=0.1)
    assert rows == [(1, "0", 1.0, 0.0), (2, "0|1", 0.8, 0.0)]
    assert st.norm() == pytest.approx(math.sqrt(1.64))


def test_extend_operator_scales_by_single_weight(two_modes):
    n_max = 2
    w = ExtensionWeights({1: 0.7, 2: 0.4})
    a = ops.mode_annihilator(two_modes, 0, n_max)
    bold = extend_operator(a, w, 2)
    d = ops.dim(two_modes, n_max)
    for k in (1, 2):
        want = w[k] * dgamma(a, sector_basis(d, k))
        assert ops.max_abs(bold.blocks[k] - want) == 0.0
    with pytest.raises(ValueError, match="M >= 1"):
        extend_operator(a, w, 0)


def test_bold_algebra_report_balanced(two_modes):
    rep = bold_algebra_report(two_modes, 3, ExtensionWeights.balanced(3), 3)
    assert rep.all_passed
    names = [r.name for r in rep.rows]
    assert any("delta_kl bold1_k" in n for n in names)
    assert any("c_k = 1/sqrt(k)" in n for n in names)
    wits = [r for r in rep.rows if r.at_least]
    assert len(wits) == 2 and all(r.passed for r in wits)


def test_bold_algebra_report_unbalanced(two_modes):
    w = ExtensionWeights.constant(2)
    assert not w.is_balanced()
    rep = bold_algebra_report(two_modes, 2, w, 2)
    assert rep.all_passed
    assert any("differs from identity" in r.name and r.at_least
               for r in rep.rows)


# ------------------------------------------------------- coherent sectors ---

def test_generalized_coherent_is_bold_eigenstate():
    ms = ModeSet(s=[1], kappa=[[0.9, 0.0, 0.0]], volume=1.0)
    n_max, M, alpha = 30, 3, 0.4
    w = ExtensionWeights.balanced(M)
    spec = CoherentFieldSpec(ms=ms, n_max=n_max, Phi=[1.0], alpha=[alpha])
    f = np.sqrt([0.2, 0.5, 0.3])
    state = generalized_coherent(spec, f, w, M)
    assert state.norm() == pytest.approx(1.0, abs=1e-10)

    bold_a = extend_operator(ops.mode_annihilator(ms, 0, n_max), w, M)
    moved = bold_a.apply(state)
    for k in range(1, M + 1):
        resid = moved.sectors[k] - alpha * state.sectors[k]
        assert np.linalg.norm(resid) <= 1e-8, k


def test_generalized_coherent_validates_f():
    ms = ModeSet(s=[1], kappa=[[1.0, 0.0, 0.0]], volume=1.0)
    spec = CoherentFieldSpec(ms=ms, n_max=12, Phi=[1.0], alpha=[0.3])
    w = ExtensionWeights.balanced(2)
    with pytest.raises(ValueError, match="one amplitude per sector"):
        generalized_coherent(spec, [1.0], w, 2)
    with pytest.raises(ValueError, match="expected 1"):
        generalized_coherent(spec, [1.0, 1.0], w, 2)


def test_coherent_energies_closed_vs_matrix(two_modes):
    rng = np.random.default_rng(19)
    spec = CoherentFieldSpec(ms=two_modes, n_max=20,
                             Phi=np.sqrt([0.5, 0.5]),
                             alpha=[0.5, 0.3j])
    M = 3
    w = ExtensionWeights.balanced(M)
    f = np.sqrt([0.2, 0.5, 0.3]) * np.exp(2j * np.pi * rng.uniform(size=3))
    state = generalized_coherent(spec, f, w, M)
    res = coherent_energies(state, spec, f, w)
    assert res.script_matrix == pytest.approx(res.script_closed, abs=1e-8)
    assert res.bold_matrix == pytest.approx(res.bold_closed, abs=1e-8)
    assert res.vacuum_difference is not None
    assert res.vacuum_difference <= 1e-10
    # the two energies genuinely disagree: same |alpha|^2, different vacuum
    assert abs(res.script_closed - res.bold_closed) > 1e-3


# ------------------------------------------------------------ vacuum, demo ---

def test_vacuum_spec_validation():
    with pytest.raises(ValueError, match="phi"):
        VacuumSpec(phi=[1.0, 1.0], p=[1.0])
    with pytest.raises(ValueError, match="probability"):
        VacuumSpec(phi=[1.0], p=[0.7, 0.6])
    with pytest.raises(ValueError, match="probability"):
        VacuumSpec(phi=[1.0], p=[1.5, -0.5])


def test_vacuum_energy_closed_form(two_modes):
    v = VacuumSpec(phi=np.sqrt([0.25, 0.75]), p=[0.5, 0.25, 0.25])
    st = vacuum_state(v, two_modes, 3)
    assert st.norm() == pytest.approx(1.0)
    h_phi = 0.5 * float(np.sum(np.abs(v.phi) ** 2
                               * two_modes.hbar * two_modes.omega))
    n_bar = 1 * 0.5 + 2 * 0.25 + 3 * 0.25
    got = vacuum_energy(v, two_modes, 3, cross_check=True)
    assert got == pytest.approx(n_bar * h_phi, rel=1e-13)
    with pytest.raises(ValueError, match="length of p"):
        vacuum_energy(v, two_modes, 3, M=2)


def test_sector_energy_spectrum_demo(two_modes):
    rows = sector_energy_spectrum_demo(two_modes, n_max=3, mode=0)
    counts = [r[1] for r in rows]
    energies = [r[2] for r in rows]
    assert counts == [1, 2, 1, 2]
    w = two_modes.hbar * two_modes.omega[0]
    np.testing.assert_allclose(energies, np.array([0.5, 1.0, 2.5, 3.0]) * w,
                               rtol=1e-13)
    # a pair of singly excited oscillators outranks one doubly excited one
    assert energies[3] > energies[2]


def test_entangled_pair():
    k1, k2 = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)
    ms = ModeSet(s=[1, -1, 1, -1], kappa=[k1, k1, k2, k2], volume=1.0)
    st = entangled_pair(ms, 2, [(k1, k2, 1.0)])
    assert st.norm() == pytest.approx(1.0)
    assert set(st.sectors) == {2}

    sym = entangled_pair(ms, 2, [(k1, k2, 0.5), (k2, k1, 0.5)], sign=1)
    assert sym.norm() == pytest.approx(1.0)
    with pytest.raises(ValueError, match="exchange"):
        entangled_pair(ms, 2, [(k1, k2, 0.5), (k2, k1, -0.5)], sign=1)
    anti = entangled_pair(ms, 2, [(k1, k2, 0.5), (k2, k1, -0.5)], sign=-1)
    assert anti.norm() == pytest.approx(1.0)
    with pytest.raises(ValueError, match="zero"):
        entangled_pair(ms, 2, [(k1, k1, 1.0)], sign=-1)
    with pytest.raises(ValueError, match="sign"):
        entangled_pair(ms, 2, [(k1, k2, 1.0)], sign=2)
