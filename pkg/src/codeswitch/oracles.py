"""Brute-force oracles and exhaustive fault enumeration.

Everything here is deliberately simple and independent of the optimized
engines: dense state vectors for small circuits, a plain scan over the full
frame coset, and the fault-injection harness behind the `faults` CLI
subcommand.  Slow by design; used for verification, not production sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pauli import PauliError, PauliOperator

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
_T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

ONE_QUBIT_GATES = {
    "h": _H,
    "s": _S,
    "sdg": _S.conj().T,
    "t": _T,
    "tdg": _T.conj().T,
    "x": _X,
    "y": _Y,
    "z": _Z,
}

MAX_ORACLE_QUBITS = 6


class StateVector:
    """Dense amplitude vector on <= 6 qubits; Clifford + T allowed."""

    def __init__(self, n: int):
        if not 1 <= n <= MAX_ORACLE_QUBITS:
            raise PauliError(f"statevector oracle supports 1..{MAX_ORACLE_QUBITS} qubits, got {n}")
        self.n = n
        self.amps = np.zeros(2**n, dtype=np.complex128)
        self.amps[0] = 1.0

    def copy(self) -> "StateVector":
        sv = StateVector.__new__(StateVector)
        sv.n = self.n
        sv.amps = self.amps.copy()
        return sv

    def _axis(self, q: int) -> int:
        # amplitudes indexed with qubit 0 as the least significant bit
        return self.n - 1 - q

    def apply(self, gate: str, *qubits: int):
        if gate == "cx":
            c, t = qubits
            v = self.amps.reshape([2] * self.n)
            ac, at = self._axis(c), self._axis(t)
            v = np.moveaxis(v, (ac, at), (0, 1))
            v[1, 0], v[1, 1] = v[1, 1].copy(), v[1, 0].copy()
            self.amps = np.moveaxis(v, (0, 1), (ac, at)).reshape(-1)
            return
        mat = ONE_QUBIT_GATES.get(gate)
        if mat is None:
            raise PauliError(f"unknown gate {gate!r}")
        (q,) = qubits
        v = self.amps.reshape([2] * self.n)
        v = np.moveaxis(v, self._axis(q), 0)
        v2 = np.tensordot(mat, v, axes=(1, 0))
        self.amps = np.moveaxis(v2, 0, self._axis(q)).reshape(-1)

    def apply_pauli(self, op: PauliOperator):
        for q in range(op.n):
            k = op.kind_on(q)
            if k != "I":
                self.apply(k.lower(), q)

    def pauli_matrix(self, op: PauliOperator, sign: int = 1) -> np.ndarray:
        mats = {"I": np.eye(2, dtype=np.complex128), "X": _X, "Y": _Y, "Z": _Z}
        full = np.array([[1.0]], dtype=np.complex128)
        for q in reversed(range(self.n)):
            full = np.kron(full, mats[op.kind_on(q)])
        return sign * full

    def expectation(self, op: PauliOperator, sign: int = 1) -> float:
        mat = self.pauli_matrix(op, sign)
        return float(np.real(np.vdot(self.amps, mat @ self.amps)))

    def measure(self, op: PauliOperator, rng, sign: int = 1) -> int:
        """Projective measurement of a Hermitian Pauli, state updated."""
        mat = self.pauli_matrix(op, sign)
        plus = 0.5 * (self.amps + mat @ self.amps)
        p_plus = float(np.real(np.vdot(plus, plus)))
        if rng.random() < p_plus:
            self.amps = plus / np.sqrt(p_plus)
            return 1
        minus = self.amps - plus
        self.amps = minus / np.sqrt(max(1.0 - p_plus, 1e-300))
        return -1

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(np.vdot(self.amps, other.amps)) ** 2)


def coset_minimizer_oracle(p: PauliOperator, code, tiebreak: str = "lex") -> PauliOperator:
    """Reference minimum-weight frame: plain scan of the full 2^15 coset.

    The coset is p * <stabilizer group, logical X>; no memoization, no
    bit tricks beyond popcount.
    """
    gens = [g.z for g in code.z_stabilizers_independent()]
    xgens = [g.x for g in code.x_stabilizers] + [code.logical_x.x]
    best_key = None
    best_op = None
    for xi in range(1 << len(xgens)):
        xm = 0
        for b, g in enumerate(xgens):
            if (xi >> b) & 1:
                xm ^= g
        for zi in range(1 << len(gens)):
            zm = 0
            for b, g in enumerate(gens):
                if (zi >> b) & 1:
                    zm ^= g
            cx = p.x ^ xm
            cz = p.z ^ zm
            w = (cx | cz).bit_count()
            key = (w, cx, cz) if tiebreak == "lex" else (w, -cx, -cz)
            if best_key is None or key < best_key:
                best_key = key
                best_op = (cx, cz)
    return PauliOperator(p.n, best_op[0], best_op[1])


@dataclass
class FaultReport:
    """Classification totals from exhaustive fault injection."""

    order: int
    mode: str
    n_cases: int = 0
    rejected: int = 0
    flagged: int = 0
    corrected: int = 0
    benign: int = 0
    logical_failures: int = 0
    failure_examples: list = field(default_factory=list)
    subsampled: bool = False

    def add(self, cls: str, count: int = 1, example=None):
        self.n_cases += count
        if cls == "LOGICAL-FAILURE":
            self.logical_failures += count
            if example is not None and len(self.failure_examples) < 20:
                self.failure_examples.append(example)
        elif cls == "rejected":
            self.rejected += count
        elif cls == "flagged":
            self.flagged += count
        elif cls == "corrected":
            self.corrected += count
        elif cls == "benign":
            self.benign += count
        else:
            raise ValueError(f"unknown class {cls!r}")

    def summary(self) -> str:
        lines = [
            f"order-{self.order} fault injection, mode={self.mode}"
            + (" (subsampled)" if self.subsampled else " (exhaustive)"),
            f"  cases:            {self.n_cases}",
            f"  flagged (stage 1):{self.flagged:>10}",
            f"  rejected:         {self.rejected:>10}",
            f"  corrected:        {self.corrected:>10}",
            f"  benign:           {self.benign:>10}",
            f"  LOGICAL FAILURES: {self.logical_failures:>10}",
        ]
        return "\n".join(lines)


def enumerate_faults(order: int, mode: str, max_pairs: int | None = None, seed: int = 0, progress=None) -> FaultReport:
    """Exhaustive fault injection over the full protocol (delegates)."""
    from .faultenum import run_enumeration

    return run_enumeration(order=order, mode=mode, max_pairs=max_pairs, seed=seed, progress=progress)
