"""Phase-free and signed Pauli algebra over n qubits.

Operators are stored as a pair of bit-masks (x, z): qubit i carries an X
factor iff bit i of x is set, a Z factor iff bit i of z is set, and a Y
iff both.  Phases are ignored for plain :class:`PauliOperator`; the signed
variant used by the tableau engine tracks the power of i in the convention

    P = i^v * prod_q X_q^{x_q} Z_q^{z_q}   (per-qubit XZ order),

so a Hermitian operator has v congruent to its Y-count mod 2.  Masks are
plain Python ints, which keeps XOR/popcount fast for the qubit counts used
here (<= 32).
"""

from __future__ import annotations

from dataclasses import dataclass

GATE_NAMES = ("h", "s", "sdg", "x", "y", "z", "cx")


class PauliError(ValueError):
    """Usage error in Pauli algebra (size mismatch, bad gate, bad text)."""


@dataclass(frozen=True)
class PauliOperator:
    """Phase-free n-qubit Pauli: X iff x-bit, Z iff z-bit, Y iff both."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise PauliError(f"need n >= 1, got {self.n}")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise PauliError("mask has bits outside the qubit range")

    @staticmethod
    def identity(n: int) -> "PauliOperator":
        return PauliOperator(n)

    @staticmethod
    def single(n: int, kind: str, qubit: int) -> "PauliOperator":
        """Single-qubit X/Y/Z on `qubit` (0-based)."""
        if not 0 <= qubit < n:
            raise PauliError(f"qubit {qubit} out of range for n={n}")
        bit = 1 << qubit
        if kind == "X":
            return PauliOperator(n, bit, 0)
        if kind == "Z":
            return PauliOperator(n, 0, bit)
        if kind == "Y":
            return PauliOperator(n, bit, bit)
        raise PauliError(f"unknown Pauli kind {kind!r}")

    @staticmethod
    def from_support(n: int, kind: str, qubits) -> "PauliOperator":
        """Uniform X/Z/Y string on the given (0-based) support."""
        mask = 0
        for q in qubits:
            if not 0 <= q < n:
                raise PauliError(f"qubit {q} out of range for n={n}")
            mask |= 1 << q
        if kind == "X":
            return PauliOperator(n, mask, 0)
        if kind == "Z":
            return PauliOperator(n, 0, mask)
        if kind == "Y":
            return PauliOperator(n, mask, mask)
        raise PauliError(f"unknown Pauli kind {kind!r}")

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def weight(self) -> int:
        """Number of qubits acted on non-trivially."""
        return (self.x | self.z).bit_count()

    def kind_on(self, qubit: int) -> str:
        xb = (self.x >> qubit) & 1
        zb = (self.z >> qubit) & 1
        return ("I", "X", "Z", "Y")[xb + 2 * zb]

    def multiply(self, other: "PauliOperator") -> "PauliOperator":
        """Phase-free product (XOR of masks)."""
        if self.n != other.n:
            raise PauliError(f"size mismatch: {self.n} vs {other.n}")
        return PauliOperator(self.n, self.x ^ other.x, self.z ^ other.z)

    __mul__ = multiply

    def commutes(self, other: "PauliOperator") -> bool:
        """True iff the symplectic inner product is even."""
        if self.n != other.n:
            raise PauliError(f"size mismatch: {self.n} vs {other.n}")
        return ((self.x & other.z) ^ (self.z & other.x)).bit_count() % 2 == 0

    def restricted(self, qubits) -> "PauliOperator":
        """Sub-operator on the listed qubits, renumbered 0..len-1."""
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> q) & 1) << i
            z |= ((self.z >> q) & 1) << i
        return PauliOperator(len(list(qubits)) if not isinstance(qubits, (list, tuple)) else len(qubits), x, z)

    def embedded(self, n: int, qubits) -> "PauliOperator":
        """Embed into an n-qubit register, qubit i -> qubits[i]."""
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((self.x >> i) & 1) << q
            z |= ((self.z >> i) & 1) << q
        return PauliOperator(n, x, z)

    def to_text(self) -> str:
        """Human form, e.g. "X1 Z3 Y7" with 1-based qubits; "I" if trivial."""
        terms = []
        for q in range(self.n):
            k = self.kind_on(q)
            if k != "I":
                terms.append(f"{k}{q + 1}")
        return " ".join(terms) if terms else "I"

    @staticmethod
    def from_text(n: int, text: str) -> "PauliOperator":
        """Parse the `to_text` form ("X1 Z3 Y7", 1-based)."""
        op = PauliOperator(n)
        text = text.strip()
        if text in ("", "I"):
            return op
        for term in text.split():
            kind, idx = term[0].upper(), term[1:]
            if kind not in "XYZ" or not idx.isdigit():
                raise PauliError(f"bad Pauli term {term!r}")
            q = int(idx) - 1
            if not 0 <= q < n:
                raise PauliError(f"qubit {int(idx)} out of range for n={n}")
            if op.kind_on(q) != "I":
                raise PauliError(f"qubit {int(idx)} listed twice")
            op = op.multiply(PauliOperator.single(n, kind, q))
        return op

    def __str__(self):
        return self.to_text()


def phase_of_product(a_x: int, a_z: int, a_v: int, b_x: int, b_z: int, b_v: int) -> int:
    """i-power of (i^av X^ax Z^az)(i^bv X^bx Z^bz) in the same convention."""
    return (a_v + b_v + 2 * (a_z & b_x).bit_count()) % 4


@dataclass(frozen=True)
class SignedPauli:
    """Hermitian Pauli with a +/-1 sign on top of its phase-free part."""

    op: PauliOperator
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise PauliError(f"sign must be +1 or -1, got {self.sign}")

    @property
    def v(self) -> int:
        """Phase exponent of i in the X^xZ^z convention."""
        y_count = (self.op.x & self.op.z).bit_count()
        return (y_count + (0 if self.sign == 1 else 2)) % 4

    @staticmethod
    def from_phase(op: PauliOperator, v: int) -> "SignedPauli":
        y_count = (op.x & op.z).bit_count()
        d = (v - y_count) % 4
        if d == 0:
            return SignedPauli(op, 1)
        if d == 2:
            return SignedPauli(op, -1)
        raise PauliError("phase is not Hermitian for this operator")

    def multiply(self, other: "SignedPauli") -> "SignedPauli":
        """Signed product; raises if the result is anti-Hermitian."""
        op = self.op.multiply(other.op)
        v = phase_of_product(self.op.x, self.op.z, self.v, other.op.x, other.op.z, other.v)
        return SignedPauli.from_phase(op, v)

    __mul__ = multiply

    def times_i(self) -> "SignedPauli":
        """i * self, valid only when the result is Hermitian."""
        return SignedPauli.from_phase(self.op, (self.v + 1) % 4)

    def commutes(self, other: "SignedPauli") -> bool:
        return self.op.commutes(other.op)

    def negated(self) -> "SignedPauli":
        return SignedPauli(self.op, -self.sign)

    def __str__(self):
        return ("+" if self.sign == 1 else "-") + self.op.to_text()


def conjugate_masks(gate: str, qubits, x: int, z: int) -> tuple[int, int]:
    """Phase-free Heisenberg update of (x, z) masks under U . U^dagger."""
    if gate == "h":
        (q,) = qubits
        bit = 1 << q
        xb, zb = x & bit, z & bit
        x = (x & ~bit) | zb
        z = (z & ~bit) | xb
        return x, z
    if gate in ("s", "sdg"):
        (q,) = qubits
        bit = 1 << q
        z ^= x & bit
        return x, z
    if gate in ("x", "y", "z"):
        return x, z
    if gate == "cx":
        c, t = qubits
        cb, tb = 1 << c, 1 << t
        if x & cb:
            x ^= tb
        if z & tb:
            z ^= cb
        return x, z
    raise PauliError(f"unknown gate {gate!r}")


def conjugate_phase(gate: str, qubits, x: int, z: int, v: int) -> int:
    """Phase exponent after conjugating i^v X^x Z^z by the gate.

    Rules derived per qubit from S X S^dag = Y, H Y H = -Y, etc.; the CNOT
    needs no phase correction in the per-qubit XZ convention.
    """
    if gate == "h":
        (q,) = qubits
        if (x >> q) & (z >> q) & 1:
            v += 2
    elif gate == "s":
        (q,) = qubits
        v += (x >> q) & 1
    elif gate == "sdg":
        (q,) = qubits
        v += 3 * ((x >> q) & 1)
    elif gate == "x":
        (q,) = qubits
        v += 2 * ((z >> q) & 1)
    elif gate == "y":
        (q,) = qubits
        v += 2 * (((x ^ z) >> q) & 1)
    elif gate == "z":
        (q,) = qubits
        v += 2 * ((x >> q) & 1)
    elif gate == "cx":
        pass
    else:
        raise PauliError(f"unknown gate {gate!r}")
    return v % 4


def conjugate_by_gate(sp: SignedPauli, gate: str, qubits) -> SignedPauli:
    """U P U^dagger for a single Clifford gate, with correct sign."""
    n = sp.op.n
    for q in qubits:
        if not 0 <= q < n:
            raise PauliError(f"gate qubit {q} out of range for n={n}")
    v = conjugate_phase(gate, qubits, sp.op.x, sp.op.z, sp.v)
    x, z = conjugate_masks(gate, qubits, sp.op.x, sp.op.z)
    return SignedPauli.from_phase(PauliOperator(n, x, z), v)
