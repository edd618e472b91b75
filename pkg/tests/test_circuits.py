import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_state
from eqvqc.circuits import (
    LINE_GENERATORS,
    CircuitSpec,
    EmbeddingArch,
    GateSpec,
    Variant,
    amplitude_state,
    controlled,
    embed,
    estimate,
    gates_matrix,
    graph_edges,
    line_classifier_circuit,
    rotation,
    unnormalized_embed_vector,
)
from eqvqc.experiments import EXPERIMENTS, make_experiment, relabel
from eqvqc.groups import enumerate_group, is_invariant, twirl
from eqvqc.simulator import PauliObservable, expectation, pauli_decompose, pauli_matrix
from eqvqc.tensor_core import I2, X, Y, Z, commutator_norm, embed_operator, herm_expm, kron

seeds = st.integers(0, 2**32 - 1)
angle = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


def test_rotation_convention():
    for axis, p in (("X", X), ("Y", Y), ("Z", Z)):
        assert np.max(np.abs(rotation(axis, 0.9) - herm_expm(p, -0.45))) < 1e-14
    assert np.allclose(rotation("Y", np.pi) @ [1, 0], [0, 1])
    assert np.allclose(rotation("Y", 2 * np.pi), -np.eye(2))
    with pytest.raises(ValueError):
        rotation("W", 1.0)


def test_controlled_gate():
    cry = controlled(rotation("Y", 0.4))
    assert np.allclose(cry[:2, :2], np.eye(2)) and np.allclose(cry[2:, 2:], rotation("Y", 0.4))


def test_gate_validation():
    with pytest.raises(ValueError):
        GateSpec("fixed", (0, 1), matrix=X)
    with pytest.raises(ValueError):
        GateSpec("rotation", (0, 1), axis="Y")
    with pytest.raises(ValueError):
        GateSpec("controlled-rotation", (0, 1), axis="Y")
    with pytest.raises(ValueError):
        GateSpec("generator-exp", (0,), param=0, matrix=np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        GateSpec("teleport", (0,))


def test_product_ry_zero_is_all_zeros():
    arch = EmbeddingArch(Variant.PRODUCT_RY, 4)
    assert np.allclose(embed(arch, np.zeros(4), np.zeros(4)), np.eye(16)[0])


def test_product_ry_is_tensor_product(rng):
    arch = EmbeddingArch(Variant.PRODUCT_RY, 3)
    th, x = rng.normal(size=3), rng.normal(size=3)
    expected = kron(*[rotation("Y", th[i] + x[i]) for i in range(3)]) @ np.eye(8)[0]
    assert np.max(np.abs(embed(arch, th, x) - expected)) < 1e-14


def test_rzry_rule(rng):
    arch = EmbeddingArch(Variant.RZRY_2FEATURE, 4)
    th, x = rng.normal(size=8), rng.normal(size=2)
    per_qubit = [rotation("Z", th[i + 4] + x[(i + 1) % 2]) @ rotation("Y", th[i] + x[i % 2]) for i in range(4)]
    assert np.max(np.abs(embed(arch, th, x) - kron(*per_qubit) @ np.eye(16)[0])) < 1e-14


def test_graph_cry_lexicographic_order(rng):
    arch = EmbeddingArch(Variant.GRAPH_CRY, 3)
    a = np.array([[1, 1, 0], [0, 0, 1], [1, 0, 1]], dtype=bool)
    th = rng.normal(size=3)
    assert graph_edges(a) == [(0, 0), (0, 1), (1, 2), (2, 0), (2, 2)]
    u = np.eye(8, dtype=complex)
    for i, j in [(0, 0), (0, 1), (1, 2), (2, 0), (2, 2)]:
        g = rotation("Y", th[i]) if i == j else controlled(rotation("Y", th[i]))
        u = embed_operator(g, [i] if i == j else [i, j], 3) @ u
    assert np.max(np.abs(embed(arch, th, a) - u[:, 0])) < 1e-14


def test_amplitude_examples():
    arch = EmbeddingArch(Variant.AMPLITUDE, 2)
    assert np.allclose(embed(arch, [], [1, 0, 0, 0]), [1, 0, 0, 0])
    a, b, c, d = 0.3, -1.2, 0.5, 2.0
    assert np.allclose(embed(arch, [], [a, b, c, d]), np.array([a, b, c, d]) / np.sqrt(a * a + b * b + c * c + d * d))
    with pytest.raises(ValueError):
        embed(arch, [], [0, 0, 0, 0])
    with pytest.raises(ValueError):
        embed(arch, [], [1, 0, 0])
    with pytest.raises(ValueError):
        embed(EmbeddingArch(Variant.PRODUCT_RY, 2), [0.0], [0.0, 0.0])


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_unnormalized_embedding_is_linear(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(2, 4))
    lhs = unnormalized_embed_vector(alpha * x + beta * y)
    assert np.max(np.abs(lhs - (alpha * unnormalized_embed_vector(x) + beta * unnormalized_embed_vector(y)))) < 1e-12
    assert np.linalg.norm(unnormalized_embed_vector(x)) == pytest.approx(np.linalg.norm(x), rel=1e-14)
    assert np.array_equal(unnormalized_embed_vector(2 * x), 2 * unnormalized_embed_vector(x))


def test_unnormalized_basis_vector():
    assert np.array_equal(unnormalized_embed_vector([1, 0, 0, 0]), [1, 0, 0, 0])
    assert np.array_equal(unnormalized_embed_vector(np.zeros(4)), np.zeros(4))


@pytest.mark.parametrize("group", ["c2", "c2c2", "d4"])
def test_intertwining_equals_equivariance_up_to_norm(group, rng):
    from eqvqc.experiments import INTERTWINER_GROUPS, intertwiner_experiment

    spec = intertwiner_experiment(group)
    for _ in range(30):
        g = str(rng.choice(spec.generators))
        w = spec.w_rep.generator_matrix(g)
        v = INTERTWINER_GROUPS[group][g].real
        x = rng.normal(size=4) * rng.uniform(0.1, 5)
        lhs = np.linalg.norm(w @ unnormalized_embed_vector(x) - unnormalized_embed_vector(v @ x))
        rhs = np.linalg.norm(x) * np.linalg.norm(w @ amplitude_state(x) - amplitude_state(v @ x))
        assert abs(lhs - rhs) < 1e-10


def test_identity_circuit_estimate_is_one():
    spec = CircuitSpec(EmbeddingArch(Variant.PRODUCT_RY, 4), PauliObservable.from_string("ZZZZ"))
    assert estimate(spec, np.zeros(4), np.zeros(4)) == pytest.approx(1.0, abs=1e-15)


@given(seeds)
def test_c2_estimate_matches_closed_form(seed):
    # <XXZZ> on a product of RY states: sin * sin * cos * cos
    rng = np.random.default_rng(seed)
    spec = make_experiment("c2").circuit
    th, x = rng.uniform(0, 2 * np.pi, 4), rng.uniform(0, 1, 4)
    a = th + x
    assert estimate(spec, th, x) == pytest.approx(np.sin(a[0]) * np.sin(a[1]) * np.cos(a[2]) * np.cos(a[3]), abs=1e-12)


@given(angle, angle, seeds)
def test_c2_paired_parameters_are_invariant(a, b, seed):
    ex = make_experiment("c2")
    x = ex.sampler(20, np.random.default_rng(seed))
    th = np.array([a, a, b, b])
    assert np.max(np.abs(ex.circuit.estimate_batch(th, ex.action("Fv", x)) - ex.circuit.estimate_batch(th, x))) < 1e-12


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_batched_estimate_matches_dense_reference(name, rng):
    ex = make_experiment(name)
    x = ex.sampler(8, rng)
    th = rng.uniform(0, 2 * np.pi, ex.num_params)
    fast = ex.circuit.estimate_batch(th, x)
    for k in range(len(x)):
        assert abs(fast[k] - ex.circuit.estimate_dense(th, x[k])) < 1e-10


def test_estimate_rejects_wrong_parameter_count():
    spec = make_experiment("c2").circuit
    with pytest.raises(ValueError):
        estimate(spec, np.zeros(3), np.zeros(4))


def test_circuit_rejects_non_invariant_observable():
    rep = make_experiment("c2").w_rep
    with pytest.raises(ValueError, match="not G-invariant"):
        CircuitSpec(EmbeddingArch(Variant.PRODUCT_RY, 4), PauliObservable.from_string("ZIII"), symmetry=rep)
    with pytest.raises(ValueError):
        CircuitSpec(
            EmbeddingArch(Variant.PRODUCT_RY, 4),
            PauliObservable.from_string("ZZZZ"),
            invariant=(GateSpec("rotation", (0,), axis="Y", param=0),),
        )


def test_line_generators_commute_with_symmetry():
    for terms in LINE_GENERATORS.values():
        h = PauliObservable(terms).matrix()
        assert commutator_norm(h, pauli_matrix("XII")) == 0.0
        assert commutator_norm(h, pauli_matrix("IXI")) == 0.0


def test_line_classifier_shared_layout_at_zero_is_one(rng):
    spec = line_classifier_circuit(shared=True, readout_prep=False)
    assert spec.num_params == 1
    x = rng.uniform(0, 1, size=(50, 4))
    assert np.max(np.abs(spec.estimate_batch([0.0], x) - 1.0)) < 1e-14


def test_line_classifier_default_layout():
    spec = line_classifier_circuit()
    assert spec.num_params == 2
    assert [g.kind for g in spec.gates] == ["fixed", "generator-exp", "generator-exp"]
    assert all(v < 1e-12 for v in spec.commutant_norms.values())


def test_line_classifier_response_is_linear_in_x_expectations(rng):
    # from |-i> on the readout, h = c0 <X0> + c1 <X1>
    spec = line_classifier_circuit()
    phi = rng.uniform(0, 2 * np.pi, 2)
    x = rng.uniform(0, 1, size=(40, 4))
    psi = amplitude_state(x)
    feats = np.stack([expectation(psi, "XI"), expectation(psi, "IX")], axis=1)
    coef, *_ = np.linalg.lstsq(feats, spec.estimate_batch(phi, x), rcond=None)
    assert np.max(np.abs(feats @ coef - spec.estimate_batch(phi, x))) < 1e-12


@pytest.mark.parametrize("layout", [dict(), dict(shared=True, readout_prep=False), dict(shared=True)])
def test_line_classifier_invariant_over_whole_group(layout, rng):
    ex = make_experiment("line2x2", **layout)
    x = ex.sampler(50, rng)
    elements = ex.elements()
    assert len(elements) == 4
    for _ in range(5):
        phi = rng.uniform(-np.pi, np.pi, ex.num_params)
        base = ex.circuit.estimate_batch(phi, x)
        for el in elements:
            assert np.max(np.abs(ex.circuit.estimate_batch(phi, ex.act_word(el.word, x)) - base)) < 1e-12


def test_graph_cry_relabelling_exact_at_trivial_angles(rng):
    ex = make_experiment("s6")
    a = ex.sampler(50, rng)
    for th in (np.zeros(6), np.array([0, 2 * np.pi, 0, 2 * np.pi, 2 * np.pi, 0])):
        base = ex.circuit.estimate_batch(th, a)
        for _ in range(10):
            sigma = rng.permutation(6)
            assert np.max(np.abs(ex.circuit.estimate_batch(th, relabel(a, sigma)) - base)) < 1e-12


def test_graph_cry_equal_angles_not_relabelling_covariant_in_general(rng):
    # CRY gates sharing a qubit do not commute, so relabelling reorders non-commuting gates
    ex = make_experiment("s6")
    a = ex.sampler(200, rng)
    th = np.full(6, 1.0)
    base = ex.circuit.estimate_batch(th, a)
    worst = max(np.max(np.abs(ex.circuit.estimate_batch(th, relabel(a, rng.permutation(6))) - base)) for _ in range(10))
    assert worst > 1e-2


def test_twirled_observable_survives_group_unitaries(rng):
    rep = make_experiment("d4").w_rep
    obs = pauli_decompose(twirl(rep, pauli_matrix("ZXII")))
    psi = random_state(rng, 4, batch=6)
    base = expectation(psi, obs)
    for el in enumerate_group(rep):
        assert np.max(np.abs(expectation(psi @ el.matrix.T, obs) - base)) < 1e-12


def test_gates_matrix_of_invariant_blocks_is_invariant():
    for name in ("c2c2", "d4", "s6"):
        ex = make_experiment(name)
        u = gates_matrix(ex.circuit.invariant, ex.circuit.num_qubits)
        assert is_invariant(ex.w_rep, u)[0]
