import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oneway.graph import Graph
from oneway.measurement import AngleSpec
from oneway.patterns import CNOT_EDGES, ROT_EDGES, cnot_pattern
from oneway.pauli import PauliString, flip_signature, multiply, product, stabilizer_K, to_dense

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
I2 = np.eye(2, dtype=complex)

ROT = Graph(5, ROT_EDGES, inputs=[1], outputs=[5])
CNOT = Graph(15, CNOT_EDGES, inputs=[1, 9], outputs=[7, 15])


def paulis(n):
    mask = st.integers(0, (1 << n) - 1)
    return st.builds(PauliString, st.just(n), mask, mask, st.integers(0, 3))


def test_x_times_z_is_minus_i_y():
    x = PauliString.single(1, 1, "X")
    z = PauliString.single(1, 1, "Z")
    p = multiply(x, z)
    assert (p.x_mask, p.z_mask) == (1, 1)
    assert p.coefficient == -1j
    assert np.allclose(to_dense(p), X @ Z)


def test_identity_is_neutral():
    p = PauliString.from_ops(3, {1: "Y", 3: "Z"}, phase=1)
    assert multiply(PauliString.identity(3), p) == p
    assert multiply(p, PauliString.identity(3)) == p


def test_k2_k3_on_rot_chain():
    p = multiply(stabilizer_K(ROT, 2), stabilizer_K(ROT, 3))
    assert p == PauliString.from_ops(5, {1: "Z", 2: "Y", 3: "Y", 4: "Z"})
    dense = to_dense(stabilizer_K(ROT, 2)) @ to_dense(stabilizer_K(ROT, 3))
    assert np.allclose(dense, to_dense(p))


def test_size_mismatch():
    with pytest.raises(ValueError):
        multiply(PauliString.identity(2), PauliString.identity(3))


@pytest.mark.parametrize(
    "graph, i, ops",
    [
        (ROT, 2, {2: "X", 1: "Z", 3: "Z"}),
        (ROT, 4, {4: "X", 3: "Z", 5: "Z"}),
        (CNOT, 4, {4: "X", 3: "Z", 5: "Z", 8: "Z"}),
    ],
)
def test_stabilizer_k(graph, i, ops):
    assert stabilizer_K(graph, i) == PauliString.from_ops(graph.n, ops)


def test_stabilizer_unknown_vertex():
    with pytest.raises((KeyError, IndexError, ValueError)):
        stabilizer_K(ROT, 6)


def test_to_dense_examples():
    assert np.array_equal(to_dense(PauliString.identity(1)), I2)
    assert np.array_equal(to_dense(PauliString.single(1, 1, "X")), X)
    # qubit 1 is the least significant index bit, so it is the right Kronecker factor
    p = PauliString.from_ops(2, {1: "Z", 2: "X"})
    assert np.array_equal(to_dense(p), np.kron(X, Z))


def test_to_dense_limit():
    with pytest.raises(ValueError):
        to_dense(PauliString.identity(13))


def test_flip_signature_table_rows():
    specs = cnot_pattern().angles
    assert flip_signature(stabilizer_K(CNOT, 2), specs)[0] == {1, 2, 3}
    assert flip_signature(stabilizer_K(CNOT, 12), specs)[0] == {8, 11, 12, 13}
    assert flip_signature(PauliString.identity(15), specs) == (frozenset(), frozenset())


def test_flip_signature_adaptive_negation():
    specs = {1: AngleSpec.zero(), 2: AngleSpec.adaptive(0.3, -1, {1})}
    flipped, negated = flip_signature(PauliString.from_ops(3, {1: "Z", 2: "X"}), specs)
    assert flipped == {1}
    assert negated == {2}


def test_render():
    p = PauliString.from_ops(3, {1: "X", 3: "Z"}, phase=3)
    assert str(p) == "-iX1 Z3"
    assert "X{1}" in p.render_masks() and "Z{3}" in p.render_masks()


def test_product_and_relabel():
    p = product([PauliString.single(2, 1, "X"), PauliString.single(2, 2, "Z")], 2)
    q = p.relabel({1: 4, 2: 1}, 5)
    assert q == PauliString.from_ops(5, {4: "X", 1: "Z"})


@settings(max_examples=60, deadline=None)
@given(paulis(4), paulis(4))
def test_multiply_matches_dense(a, b):
    assert np.allclose(to_dense(multiply(a, b)), to_dense(a) @ to_dense(b), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(paulis(3), paulis(3), paulis(3))
def test_associative(a, b, c):
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))


@settings(max_examples=40, deadline=None)
@given(paulis(4))
def test_square_is_scalar(p):
    sq = multiply(p, p)
    assert sq.x_mask == 0 and sq.z_mask == 0


@settings(max_examples=40, deadline=None)
@given(paulis(3), paulis(3))
def test_commutation_matches_dense(a, b):
    da, db = to_dense(a), to_dense(b)
    assert a.commutes_with(b) == np.allclose(da @ db, db @ da)


def test_stabilizers_square_to_identity():
    for i in CNOT.vertices:
        sq = multiply(stabilizer_K(CNOT, i), stabilizer_K(CNOT, i))
        assert sq == PauliString.identity(15)


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(2, 15)), st.sets(st.integers(2, 15)))
def test_flip_signature_linear(a, b):
    specs = cnot_pattern().angles

    def prod(ids):
        return product((stabilizer_K(CNOT, i) for i in ids), 15)

    fa, _ = flip_signature(prod(a), specs)
    fb, _ = flip_signature(prod(b), specs)
    fab, _ = flip_signature(multiply(prod(a), prod(b)), specs)
    assert fab == fa ^ fb
