import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_hermitian, random_state
from eqvqc.experiments import make_experiment
from eqvqc.groups import enumerate_group, twirl
from eqvqc.simulator import (
    PauliObservable,
    append_zero_qubits,
    apply_unitary,
    expectation,
    expectation_dense,
    init_state,
    norm_defect,
    pauli_decompose,
    pauli_matrix,
)
from eqvqc.tensor_core import SWAP, X, Z, embed_operator, herm_expm, kron

seeds = st.integers(0, 2**32 - 1)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def basis(n, index):
    v = np.zeros(2**n, dtype=complex)
    v[index] = 1
    return v


def test_init_state_examples():
    assert np.array_equal(init_state(1), [1, 0])
    assert np.array_equal(init_state(2), [1, 0, 0, 0])
    assert expectation(init_state(3), "ZZZ") == 1.0
    assert init_state(2, batch=5).shape == (5, 4)


@pytest.mark.parametrize("n", [0, 9, -1])
def test_init_state_range(n):
    with pytest.raises(ValueError):
        init_state(n)


def test_apply_x_flips_qubit_zero():
    assert np.array_equal(apply_unitary(init_state(2), X, [0]), basis(2, 0b10))


def test_apply_swap():
    assert np.array_equal(apply_unitary(basis(2, 0b01), SWAP, [0, 1]), basis(2, 0b10))


@given(seeds, st.floats(-6, 6))
def test_rotation_then_inverse_restores_state(seed, phi):
    psi = random_state(np.random.default_rng(seed), 3)
    out = apply_unitary(apply_unitary(psi, herm_expm(Z, phi), [1]), herm_expm(Z, -phi), [1])
    assert np.max(np.abs(out - psi)) < 1e-12


def test_apply_unitary_errors():
    psi = init_state(3)
    with pytest.raises(ValueError):
        apply_unitary(psi, SWAP, [0])
    with pytest.raises(ValueError):
        apply_unitary(psi, SWAP, [1, 1])
    with pytest.raises(ValueError):
        apply_unitary(psi, X, [3])


@given(seeds, st.integers(1, 5), st.integers(1, 3))
def test_apply_unitary_matches_dense_oracle(seed, n, k):
    rng = np.random.default_rng(seed)
    k = min(k, n)
    targets = list(rng.permutation(n)[:k])
    u = herm_expm(random_hermitian(rng, 2**k), 1.0)
    psi = random_state(rng, n, batch=3)
    fast = apply_unitary(psi, u, targets)
    dense = psi @ embed_operator(u, targets, n).T
    assert np.max(np.abs(fast - dense)) < 1e-12


def test_apply_unitary_per_row_gates(rng):
    psi = random_state(rng, 2, batch=4)
    us = np.stack([herm_expm(random_hermitian(rng, 2), 1.0) for _ in range(4)])
    out = apply_unitary(psi, us, [1])
    for r in range(4):
        assert np.allclose(out[r], apply_unitary(psi[r], us[r], [1]), atol=1e-14)


@given(seeds)
def test_norm_preserved_under_gate_sequences(seed):
    rng = np.random.default_rng(seed)
    psi = init_state(4)
    for _ in range(30):
        k = int(rng.integers(1, 3))
        targets = list(rng.permutation(4)[:k])
        psi = apply_unitary(psi, herm_expm(random_hermitian(rng, 2**k), rng.normal()), targets)
    assert norm_defect(psi) < 1e-9


def test_append_zero_qubits(rng):
    psi = random_state(rng, 2)
    assert np.array_equal(append_zero_qubits(psi, 1), np.kron(psi, [1, 0]))


def test_expectation_examples():
    assert expectation(init_state(1), "Z") == 1.0
    plus = apply_unitary(init_state(1), H, [0])
    assert abs(expectation(plus, "Z")) < 1e-15
    with pytest.raises(ValueError):
        expectation(init_state(2), "ZZZ")


@given(seeds)
def test_expectation_bounded_by_coefficients(seed):
    rng = np.random.default_rng(seed)
    obs = PauliObservable(((0.7, "XYZ"), (-1.3, "ZZI"), (0.2, "IIY")))
    val = expectation(random_state(rng, 3), obs)
    assert abs(val) <= 0.7 + 1.3 + 0.2


@pytest.mark.parametrize("word", ["XXZZ", "ZZZZ", "ZZZZZZ", "IIZ", "ZI"])
def test_expectation_fast_path_matches_dense(word, rng):
    obs = PauliObservable.from_string(word)
    psi = random_state(rng, len(word), batch=20)
    assert np.max(np.abs(expectation(psi, obs) - expectation_dense(psi, obs))) < 1e-10


def test_expectation_mixed_observable_matches_dense(rng):
    obs = PauliObservable(((0.5, "XYIZ"), (2.0, "YYYY"), (-1.0, "IZXI")))
    psi = random_state(rng, 4, batch=10)
    assert np.max(np.abs(expectation(psi, obs) - expectation_dense(psi, obs))) < 1e-10


def test_pauli_matrix_examples():
    assert np.array_equal(pauli_matrix("II"), np.eye(4))
    assert np.array_equal(pauli_matrix("XX"), np.fliplr(np.eye(4)))
    m = pauli_matrix("XXZZ")
    assert np.array_equal(m, m.conj().T)
    assert np.array_equal(m @ m, np.eye(16))
    assert np.array_equal(pauli_matrix("ZX", 2.5), 2.5 * kron(Z, X))


@pytest.mark.parametrize("word", ["XQ", "", "xz"])
def test_pauli_matrix_invalid(word):
    with pytest.raises(ValueError):
        pauli_matrix(word)


def test_observable_validation():
    with pytest.raises(ValueError):
        PauliObservable(((1.0, "XX"), (1.0, "XXX")))
    with pytest.raises(ValueError):
        PauliObservable(())


def test_pauli_decompose_round_trip(rng):
    obs = PauliObservable(((0.5, "ZIXY"), (-1.25, "YYII"), (2.0, "IIII")))
    back = pauli_decompose(obs.matrix())
    assert dict((w, c) for c, w in back.terms) == pytest.approx({"ZIXY": 0.5, "YYII": -1.25, "IIII": 2.0})
    h = random_hermitian(rng, 8)
    assert np.max(np.abs(pauli_decompose(h).matrix() - h)) < 1e-12


@pytest.mark.parametrize("group", ["c2", "c2c2", "d4", "s6"])
def test_twirled_observable_expectation_is_group_invariant(group, rng):
    rep = make_experiment(group).w_rep
    n = rep.num_qubits
    word = "".join(rng.choice(list("IXYZ"), size=n))
    t = twirl(rep, pauli_matrix(word))
    obs = pauli_decompose(t)
    psi = random_state(rng, n, batch=4)
    base = expectation(psi, obs)
    elements = enumerate_group(rep)
    for el in elements[:: max(1, len(elements) // 40)]:
        moved = psi @ el.matrix.T
        assert np.max(np.abs(expectation(moved, obs) - base)) < 1e-10
