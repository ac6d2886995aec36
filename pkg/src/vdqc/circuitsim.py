"""Small statevector simulator for {X, Z, H, CNOT, T} circuits.

Wire ``i`` is bit ``i`` of the basis-state index (little endian); the
measured output register is the last wire, ``n_qubits - 1``.  Global phases
are ignored everywhere; only measurement distributions matter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .protocol import InstanceLabel, label_for

MAX_QUBITS = 12
GATES_1Q = ("X", "Z", "H", "T")
GATES = GATES_1Q + ("CNOT",)
NORM_TOL = 1e-10

_S2 = 1 / np.sqrt(2)
_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
}


class CircuitParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Gate:
    tag: str
    wires: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        gates = tuple(g if isinstance(g, Gate) else Gate(g[0], tuple(g[1:])) for g in self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if g.tag not in GATES:
                raise ValueError(f"unsupported gate {g.tag!r}")
            arity = 2 if g.tag == "CNOT" else 1
            if len(g.wires) != arity:
                raise ValueError(f"{g.tag} takes {arity} wire(s), got {g.wires}")
            if any(not 0 <= w < self.n_qubits for w in g.wires):
                raise ValueError(f"{g.tag} wire out of range in {g.wires} (n_qubits={self.n_qubits})")
            if g.tag == "CNOT" and g.wires[0] == g.wires[1]:
                raise ValueError("CNOT control and target must differ")

    @property
    def last_wire(self) -> int:
        return self.n_qubits - 1

    def then(self, *gates: Gate | tuple) -> "Circuit":
        return Circuit(self.n_qubits, self.gates + tuple(gates))


def parse_circuit(text: str, n_qubits: int | None = None) -> Circuit:
    """Parse ``<TAG> <wire>`` / ``CNOT <control> <target>`` lines; ``#`` starts a comment.

    ``I <wire>`` only widens the register and ``qubits <n>`` fixes its size;
    otherwise the size is one more than the highest wire used.
    """
    gates = []
    highest = -1
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0].upper()
        if tag == "QUBITS":
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise CircuitParseError(line_no, "qubits expects one positive integer")
            if n_qubits is not None and n_qubits != int(parts[1]):
                raise CircuitParseError(line_no, f"qubits {parts[1]} conflicts with register of {n_qubits}")
            n_qubits = int(parts[1])
            if highest >= n_qubits:
                raise CircuitParseError(line_no, f"wire {highest} exceeds register of {n_qubits}")
            continue
        if tag not in GATES and tag != "I":
            raise CircuitParseError(line_no, f"unknown gate {parts[0]!r}")
        arity = 2 if tag == "CNOT" else 1
        if len(parts) != arity + 1:
            raise CircuitParseError(line_no, f"{tag} expects {arity} wire index(es)")
        try:
            wires = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise CircuitParseError(line_no, f"wire indices must be integers: {line!r}") from None
        if any(w < 0 for w in wires):
            raise CircuitParseError(line_no, "wire indices are zero-based and non-negative")
        if tag == "CNOT" and wires[0] == wires[1]:
            raise CircuitParseError(line_no, "CNOT control and target must differ")
        if n_qubits is not None and max(wires) >= n_qubits:
            raise CircuitParseError(line_no, f"wire {max(wires)} exceeds register of {n_qubits}")
        highest = max(highest, *wires)
        if tag != "I":
            gates.append(Gate(tag, wires))
    n = n_qubits if n_qubits is not None else max(1, highest + 1)
    if n > MAX_QUBITS:
        raise CircuitParseError(0, f"{n} qubits exceeds the simulator cap of {MAX_QUBITS}")
    return Circuit(n, tuple(gates))


def format_circuit(circuit: Circuit) -> str:
    return "".join(f"{g.tag} {' '.join(map(str, g.wires))}\n" for g in circuit.gates)


# ---------------------------------------------------------------------------
# Statevector evolution
# ---------------------------------------------------------------------------


def _apply_1q(state: np.ndarray, matrix: np.ndarray, wire: int, n: int) -> np.ndarray:
    psi = state.reshape((2,) * n)
    axis = n - 1 - wire
    psi = np.moveaxis(np.tensordot(matrix, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def _apply_cnot(state: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    idx = np.arange(state.size)
    flipped = np.where((idx >> control) & 1, idx ^ (1 << target), idx)
    return state[flipped]


def apply_gate(state: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    if gate.tag == "CNOT":
        return _apply_cnot(state, gate.wires[0], gate.wires[1], n)
    return _apply_1q(state, _MATRICES[gate.tag], gate.wires[0], n)


def zero_state(n: int) -> np.ndarray:
    state = np.zeros(1 << n, dtype=complex)
    state[0] = 1.0
    return state


def _check_size(circuit: Circuit) -> None:
    if circuit.n_qubits > MAX_QUBITS:
        raise ValueError(f"{circuit.n_qubits} qubits exceeds the simulator cap of {MAX_QUBITS}")


def run_on(state: np.ndarray, circuit: Circuit) -> np.ndarray:
    _check_size(circuit)
    n = circuit.n_qubits
    for g in circuit.gates:
        state = apply_gate(state, g, n)
        if abs(np.linalg.norm(state) - 1.0) > NORM_TOL:
            raise AssertionError(f"norm drifted after {g}")
    return state


def simulate(circuit: Circuit) -> np.ndarray:
    """Final statevector of ``circuit`` applied to ``|0...0>``."""
    return run_on(zero_state(circuit.n_qubits), circuit)


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def last_wire_distribution(state: np.ndarray, n: int) -> np.ndarray:
    p = probabilities(state)
    half = 1 << (n - 1)
    # the last wire is the top bit, so the first half of the vector reads 0
    return np.array([p[:half].sum(), p[half:].sum()])


def acceptance_probability(circuit: Circuit) -> float:
    """Probability that measuring the last wire gives 0."""
    p0 = float(last_wire_distribution(simulate(circuit), circuit.n_qubits)[0])
    return min(1.0, max(0.0, p0))


def classify_instance(circuit: Circuit, q: float) -> InstanceLabel:
    if not 0.0 <= q < 0.5:
        raise ValueError(f"q must lie in [0, 1/2), got {q!r}")
    return label_for(acceptance_probability(circuit), q)


def total_variation(p: np.ndarray, r: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(r)).sum())


# ---------------------------------------------------------------------------
# Pauli attacks
# ---------------------------------------------------------------------------


class PauliClass(str, enum.Enum):
    BENIGN = "benign"
    NON_BENIGN = "non-benign"


@dataclass(frozen=True)
class PauliString:
    ops: str  # one of I, X, Y, Z per qubit, wire 0 first

    def __post_init__(self) -> None:
        ops = self.ops.upper()
        if not ops or set(ops) - set("IXYZ"):
            raise ValueError(f"Pauli string must use I, X, Y, Z only, got {self.ops!r}")
        object.__setattr__(self, "ops", ops)

    def __len__(self) -> int:
        return len(self.ops)

    @classmethod
    def single(cls, n: int, wire: int, op: str) -> "PauliString":
        ops = ["I"] * n
        ops[wire] = op
        return cls("".join(ops))


def classify_pauli(p: PauliString, measured_wires: Iterable[int]) -> PauliClass:
    wires = set(measured_wires)
    if any(not 0 <= w < len(p) for w in wires):
        raise ValueError(f"measured wires {sorted(wires)} out of range for a {len(p)}-qubit Pauli")
    if any(p.ops[w] in "XY" for w in wires):
        return PauliClass.NON_BENIGN
    return PauliClass.BENIGN


def apply_pauli(state: np.ndarray, p: PauliString) -> np.ndarray:
    n = len(p)
    for wire, op in enumerate(p.ops):
        if op != "I":
            state = _apply_1q(state, _MATRICES[op], wire, n)
    return state


def benign_invariance_check(circuit: Circuit, p: PauliString) -> tuple[bool, float]:
    """Does ``p`` applied before the final measurement leave the output bit's distribution unchanged?"""
    if len(p) != circuit.n_qubits:
        raise ValueError(f"Pauli has {len(p)} qubits, circuit has {circuit.n_qubits}")
    if classify_pauli(p, {circuit.last_wire}) is not PauliClass.BENIGN:
        raise ValueError("invariance only holds for benign attacks (I or Z on the measured wire)")
    n = circuit.n_qubits
    honest = simulate(circuit)
    attacked = apply_pauli(honest, p)
    d = total_variation(last_wire_distribution(honest, n), last_wire_distribution(attacked, n))
    return d <= NORM_TOL, d


# ---------------------------------------------------------------------------
# Pauli one-time pad
# ---------------------------------------------------------------------------


@dataclass
class PauliKeys:
    """Per-wire key bits: the pad on wire ``i`` is ``X**a[i] Z**b[i]``."""

    a: list[int] = field(default_factory=list)
    b: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.a = [int(x) for x in self.a]
        self.b = [int(x) for x in self.b]
        if len(self.a) != len(self.b) or any(x not in (0, 1) for x in self.a + self.b):
            raise ValueError("keys are equal-length bit lists")

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PauliKeys":
        bits = rng.integers(0, 2, size=(2, n))
        return cls(list(bits[0]), list(bits[1]))

    def copy(self) -> "PauliKeys":
        return PauliKeys(list(self.a), list(self.b))


def pad(state: np.ndarray, keys: PauliKeys) -> np.ndarray:
    n = len(keys.a)
    for wire in range(n):
        if keys.b[wire]:
            state = _apply_1q(state, _MATRICES["Z"], wire, n)
        if keys.a[wire]:
            state = _apply_1q(state, _MATRICES["X"], wire, n)
    return state


def update_keys(keys: PauliKeys, gate: Gate) -> PauliKeys:
    """Keys after commuting the pad through ``gate`` (up to global phase)."""
    k = keys.copy()
    if gate.tag == "H":
        w = gate.wires[0]
        k.a[w], k.b[w] = k.b[w], k.a[w]
    elif gate.tag == "CNOT":
        c, t = gate.wires
        k.a[t] ^= k.a[c]
        k.b[c] ^= k.b[t]
    elif gate.tag == "T":
        raise ValueError("T gates need the gadget construction; the pad cannot be tracked classically")
    # X and Z commute with the pad up to phase
    return k


def qotp_roundtrip(circuit: Circuit, keys: PauliKeys) -> float:
    """Encrypt ``|0...0>``, run the circuit, decrypt with updated keys.

    Returns the total-variation distance between the decrypted output
    distribution and the plain run's.
    """
    if any(g.tag == "T" for g in circuit.gates):
        raise ValueError("one-time-pad tracking is limited to X, Z, H, CNOT circuits")
    n = circuit.n_qubits
    if len(keys.a) != n:
        raise ValueError(f"need {n} key pairs, got {len(keys.a)}")
    _check_size(circuit)
    state = pad(zero_state(n), keys)
    k = keys
    for g in circuit.gates:
        state = apply_gate(state, g, n)
        k = update_keys(k, g)
    # X^a Z^b is its own inverse up to phase
    state = pad(state, k)
    return total_variation(probabilities(state), probabilities(simulate(circuit)))


def random_clifford_circuit(n: int, depth: int, rng: np.random.Generator) -> Circuit:
    gates: list[Gate] = []
    for _ in range(depth):
        if n > 1 and rng.random() < 0.3:
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate("CNOT", (int(c), int(t))))
        else:
            gates.append(Gate(("X", "Z", "H")[int(rng.integers(3))], (int(rng.integers(n)),)))
    return Circuit(n, tuple(gates))


def random_circuit(n: int, depth: int, rng: np.random.Generator, gates: Sequence[str] = GATES) -> Circuit:
    out: list[Gate] = []
    for _ in range(depth):
        tag = gates[int(rng.integers(len(gates)))]
        if tag == "CNOT":
            if n < 2:
                continue
            c, t = rng.choice(n, size=2, replace=False)
            out.append(Gate("CNOT", (int(c), int(t))))
        else:
            out.append(Gate(tag, (int(rng.integers(n)),)))
    return Circuit(n, tuple(out))
