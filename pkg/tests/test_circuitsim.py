from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vdqc.circuitsim import (
    MAX_QUBITS,
    Circuit,
    CircuitParseError,
    Gate,
    PauliClass,
    PauliKeys,
    PauliString,
    acceptance_probability,
    apply_pauli,
    benign_invariance_check,
    classify_instance,
    classify_pauli,
    format_circuit,
    pad,
    parse_circuit,
    qotp_roundtrip,
    random_circuit,
    random_clifford_circuit,
    simulate,
    update_keys,
)
from vdqc.protocol import InstanceLabel

# --- dense-matrix oracle, built from Kronecker products -----------------------

M = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
}


def dense_1q(op, wire, n):
    # kron order: highest wire first (little-endian basis index)
    return reduce(np.kron, [M[op] if w == wire else M["I"] for w in reversed(range(n))])


def dense_cnot(c, t, n):
    dim = 1 << n
    U = np.zeros((dim, dim))
    for i in range(dim):
        j = i ^ (1 << t) if (i >> c) & 1 else i
        U[j, i] = 1
    return U


def dense_run(circuit):
    n = circuit.n_qubits
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    for g in circuit.gates:
        U = dense_cnot(*g.wires, n) if g.tag == "CNOT" else dense_1q(g.tag, g.wires[0], n)
        psi = U @ psi
    return psi


def test_simulator_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(1, 6))
        c = random_circuit(n, 25, rng)
        assert np.allclose(simulate(c), dense_run(c), atol=1e-12)


def test_parse_and_format_roundtrip():
    text = "# bell pair\nH 0\nCNOT 0 1  # entangle\n\nT 1\n"
    c = parse_circuit(text)
    assert c.n_qubits == 2
    assert c.gates == (Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("T", (1,)))
    assert parse_circuit(format_circuit(c), n_qubits=2) == c


def test_parse_identity_and_register_size():
    assert parse_circuit("I 2\n") == Circuit(3, ())
    assert parse_circuit("qubits 4\nX 1\n").n_qubits == 4
    assert parse_circuit("").n_qubits == 1


@pytest.mark.parametrize(
    "text,line",
    [("H 0\nFOO 1\n", 2), ("X\n", 1), ("CNOT 1 1\n", 1), ("H a\n", 1), ("H -1\n", 1), ("X 3\nqubits 2\n", 2)],
)
def test_parse_errors_report_line(text, line):
    with pytest.raises(CircuitParseError) as info:
        parse_circuit(text)
    assert info.value.line_no == line
    assert f"line {line}" in str(info.value)


def test_qubit_cap():
    with pytest.raises(CircuitParseError):
        parse_circuit(f"X {MAX_QUBITS}\n")


def test_acceptance_anchors():
    assert acceptance_probability(parse_circuit("I 0")) == pytest.approx(1.0)
    assert acceptance_probability(parse_circuit("X 0")) == pytest.approx(0.0)
    assert acceptance_probability(parse_circuit("H 0")) == pytest.approx(0.5)
    # the measured wire is the last one
    assert acceptance_probability(parse_circuit("X 0\nI 1")) == pytest.approx(1.0)
    assert acceptance_probability(parse_circuit("X 0\nCNOT 0 1")) == pytest.approx(0.0)


def test_classify_instance_anchors():
    q = 1 / 3
    assert classify_instance(parse_circuit("I 0"), q) == InstanceLabel.YES
    assert classify_instance(parse_circuit("X 0"), q) == InstanceLabel.NO
    assert classify_instance(parse_circuit("H 0"), q) == InstanceLabel.UNPROMISED


def test_classify_pauli():
    assert classify_pauli(PauliString("IZ"), [1]) is PauliClass.BENIGN
    assert classify_pauli(PauliString("XI"), [1]) is PauliClass.BENIGN
    assert classify_pauli(PauliString("IX"), [1]) is PauliClass.NON_BENIGN
    assert classify_pauli(PauliString("IY"), [0, 1]) is PauliClass.NON_BENIGN
    with pytest.raises(ValueError):
        PauliString("IQ")


def test_benign_invariance_and_guard():
    rng = np.random.default_rng(3)
    for _ in range(20):
        c = random_circuit(4, 20, rng)
        ok, d = benign_invariance_check(c, PauliString.single(4, 3, "Z"))
        assert ok and d <= 1e-10
        ok, _ = benign_invariance_check(c, PauliString("XYZZ"))
        assert ok
    with pytest.raises(ValueError):
        benign_invariance_check(parse_circuit("H 0"), PauliString("X"))


def test_non_benign_flips_output():
    c = parse_circuit("I 1")
    attacked = apply_pauli(simulate(c), PauliString.single(2, 1, "X"))
    assert abs(attacked[2]) == pytest.approx(1.0)


def test_key_update_commutes_pad_through_gate():
    rng = np.random.default_rng(11)
    n = 3
    for _ in range(50):
        keys = PauliKeys.random(n, rng)
        c = random_clifford_circuit(n, 1, rng)
        g = c.gates[0]
        psi = simulate(random_circuit(n, 10, rng))
        U = dense_cnot(*g.wires, n) if g.tag == "CNOT" else dense_1q(g.tag, g.wires[0], n)
        left = U @ pad(psi, keys)
        right = pad(U @ psi, update_keys(keys, g))
        # equal up to a global phase
        assert abs(np.vdot(left, right)) == pytest.approx(1.0, abs=1e-12)


def test_qotp_roundtrip_random_cliffords():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        c = random_clifford_circuit(n, 30, rng)
        worst = max(worst, qotp_roundtrip(c, PauliKeys.random(n, rng)))
    assert worst <= 1e-10


def test_qotp_rejects_t():
    with pytest.raises(ValueError):
        qotp_roundtrip(parse_circuit("T 0"), PauliKeys([0], [0]))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5))
def test_acceptance_probability_properties(seed, n):
    rng = np.random.default_rng(seed)
    c = random_circuit(n, 15, rng)
    p = acceptance_probability(c)
    assert 0.0 <= p <= 1.0
    assert acceptance_probability(c.then(Gate("Z", (n - 1,)))) == pytest.approx(p, abs=1e-12)
    assert acceptance_probability(parse_circuit(format_circuit(c) + f"I {n - 1}\n", n)) == pytest.approx(p, abs=1e-12)
    norm = np.linalg.norm(simulate(c))
    assert norm == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(p0=st.floats(0, 1), q=st.floats(0, 0.49), dq=st.floats(0, 0.49))
def test_classification_monotone_in_q(p0, q, dq):
    from vdqc.protocol import label_for

    q2 = min(q + dq, 0.499)
    if label_for(p0, q) == InstanceLabel.YES:
        assert label_for(p0, q2) == InstanceLabel.YES
