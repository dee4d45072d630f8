"""The Steane [[7,1,3]] and quantum Reed-Muller [[15,1,3]] codes.

Qubit labels follow the standard tetrahedral layout, 1-based in all tables
below and 0-based in the mask representation.  The qRM code stores all 18
Z-plaquettes; only the marked independent subset of 10 is measured by the
extraction rounds, and the 8 product constraints tie the rest down.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .pauli import PauliError, PauliOperator, SignedPauli

# Steane supports (1-based): p1..p3 are Z-type, p4..p6 X-type on the same
# plaquettes.
STEANE_PLAQUETTES = ((1, 2, 6, 7), (2, 3, 4, 7), (4, 5, 6, 7))

# qRM Z-plaquettes p1..p18 (1-based).
QRM_Z_PLAQUETTES = (
    (1, 2, 6, 7),      # p1
    (2, 3, 4, 7),      # p2
    (4, 5, 6, 7),      # p3
    (1, 6, 8, 13),     # p4
    (1, 2, 8, 9),      # p5
    (2, 3, 9, 10),     # p6
    (3, 4, 10, 11),    # p7
    (4, 5, 11, 12),    # p8
    (5, 6, 12, 13),    # p9
    (6, 7, 13, 14),    # p10
    (2, 7, 9, 14),     # p11
    (4, 7, 11, 14),    # p12
    (8, 12, 13, 15),   # p13
    (8, 9, 10, 15),    # p14
    (10, 11, 12, 15),  # p15
    (8, 9, 13, 14),    # p16
    (9, 10, 11, 14),   # p17
    (11, 12, 13, 14),  # p18
)

# qRM X-type 3-cells c1..c4.
QRM_X_CELLS = (
    (1, 2, 6, 7, 8, 9, 13, 14),
    (4, 5, 6, 7, 11, 12, 13, 14),
    (2, 3, 4, 7, 9, 10, 11, 14),
    (8, 9, 10, 11, 12, 13, 14, 15),
)

# Product constraints Gamma_1..Gamma_8 (1-based plaquette indices).
QRM_CONSTRAINTS = (
    (4, 5, 10, 11),
    (1, 5, 10, 16),
    (8, 9, 10, 12),
    (3, 8, 10, 18),
    (6, 7, 11, 12),
    (2, 6, 12, 17),
    (13, 15, 16, 17),
    (14, 15, 16, 18),
)

# Independent subset actually measured by the extraction rounds.
QRM_MEASURED_Z = (1, 2, 3, 7, 8, 9, 13, 16, 17, 18)


def _z_op(n, support):
    return PauliOperator.from_support(n, "Z", [q - 1 for q in support])


def _x_op(n, support):
    return PauliOperator.from_support(n, "X", [q - 1 for q in support])


@dataclass(frozen=True)
class DecoderTable:
    """Syndrome bit-pattern -> correction Pauli."""

    table: dict

    def correction(self, syndrome: tuple) -> PauliOperator:
        return self.table[tuple(syndrome)]


@dataclass(frozen=True)
class CssCode:
    name: str
    n: int
    z_stabilizers: tuple
    x_stabilizers: tuple
    constraints: tuple           # index sets into z_stabilizers (0-based)
    measured_z: tuple            # indices into z_stabilizers (0-based)
    logical_z: PauliOperator
    logical_x: PauliOperator
    d_x: int
    d_z: int

    def z_stabilizers_independent(self):
        return tuple(self.z_stabilizers[i] for i in self.measured_z)

    def logical_y(self) -> SignedPauli:
        """i * logical_x * logical_z, sign via exact phase bookkeeping."""
        sx = SignedPauli(self.logical_x)
        sz = SignedPauli(self.logical_z)
        from .pauli import phase_of_product

        v = phase_of_product(sx.op.x, sx.op.z, sx.v, sz.op.x, sz.op.z, sz.v)
        return SignedPauli.from_phase(sx.op.multiply(sz.op), (v + 1) % 4)

    def syndrome(self, error: PauliOperator, which: str) -> tuple:
        """Anticommutation bits against one stabilizer family.

        which="X" checks against the X-type stabilizers (detects Z parts),
        which="Z" against the Z-type family (detects X parts).
        """
        if error.n != self.n:
            raise PauliError("error size mismatch")
        if which == "X":
            fam = self.x_stabilizers
        elif which == "Z":
            fam = self.z_stabilizers
        else:
            raise PauliError(f"unknown stabilizer family {which!r}")
        return tuple(0 if error.commutes(s) else 1 for s in fam)

    def measured_syndrome(self, error: PauliOperator) -> tuple:
        """Z-family syndrome restricted to the measured generators."""
        full = self.syndrome(error, "Z")
        return tuple(full[i] for i in self.measured_z)

    def check_invariants(self):
        for sx in self.x_stabilizers:
            for sz in self.z_stabilizers:
                if not sx.commutes(sz):
                    raise AssertionError(f"{self.name}: stabilizers anticommute")
        for fam in (self.x_stabilizers, self.z_stabilizers):
            for s in fam:
                if not (s.commutes(self.logical_x) and s.commutes(self.logical_z)):
                    raise AssertionError(f"{self.name}: logicals vs stabilizers broken")
        if self.logical_x.commutes(self.logical_z):
            raise AssertionError(f"{self.name}: logicals commute")
        for c in self.constraints:
            prod = PauliOperator.identity(self.n)
            for i in c:
                prod = prod.multiply(self.z_stabilizers[i])
            if not prod.is_identity:
                raise AssertionError(f"{self.name}: constraint {c} does not multiply to identity")

    def stabilizer_listing(self) -> str:
        lines = [f"{self.name} [[{self.n},1,{min(self.d_x, self.d_z)}]]"]
        for i, s in enumerate(self.z_stabilizers):
            mark = " (measured)" if i in self.measured_z else ""
            lines.append(f"  z[{i + 1:>2}] {s.to_text()}{mark}")
        for i, s in enumerate(self.x_stabilizers):
            lines.append(f"  x[{i + 1:>2}] {s.to_text()}")
        lines.append(f"  logical Z: {self.logical_z.to_text()}")
        lines.append(f"  logical X: {self.logical_x.to_text()}")
        return "\n".join(lines)


@lru_cache(maxsize=None)
def build_steane() -> CssCode:
    n = 7
    code = CssCode(
        name="steane",
        n=n,
        z_stabilizers=tuple(_z_op(n, s) for s in STEANE_PLAQUETTES),
        x_stabilizers=tuple(_x_op(n, s) for s in STEANE_PLAQUETTES),
        constraints=(),
        measured_z=(0, 1, 2),
        logical_z=_z_op(n, (1, 2, 3)),
        logical_x=_x_op(n, (1, 2, 3)),
        d_x=3,
        d_z=3,
    )
    code.check_invariants()
    return code


@lru_cache(maxsize=None)
def build_qrm() -> CssCode:
    n = 15
    code = CssCode(
        name="qrm",
        n=n,
        z_stabilizers=tuple(_z_op(n, s) for s in QRM_Z_PLAQUETTES),
        x_stabilizers=tuple(_x_op(n, s) for s in QRM_X_CELLS),
        constraints=tuple(tuple(i - 1 for i in c) for c in QRM_CONSTRAINTS),
        measured_z=tuple(i - 1 for i in QRM_MEASURED_Z),
        logical_z=_z_op(n, (1, 2, 3)),
        logical_x=_x_op(n, (1, 2, 3, 4, 5, 6, 7)),
        d_x=7,
        d_z=3,
    )
    code.check_invariants()
    return code


def gf2_rank(masks) -> int:
    """Rank over GF(2) of bit-mask rows."""
    rank = 0
    rows = list(masks)
    for bit in range(max((m.bit_length() for m in rows), default=0)):
        pivot = None
        for i in range(rank, len(rows)):
            if (rows[i] >> bit) & 1:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and (rows[i] >> bit) & 1:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


@lru_cache(maxsize=None)
def steane_decoder(kind: str = "Z") -> DecoderTable:
    """Perfect lookup decoder for the Steane code.

    Syndrome bit i flags plaquette i; the 8 patterns map onto identity plus
    the 7 single-qubit errors of the given kind.
    """
    code = build_steane()
    table = {(0, 0, 0): PauliOperator.identity(7)}
    supports = STEANE_PLAQUETTES
    for q in range(1, 8):
        syn = tuple(1 if q in s else 0 for s in supports)
        table[syn] = PauliOperator.single(7, kind, q - 1)
    if len(table) != 8:
        raise AssertionError("Steane decoder table is not perfect")
    return DecoderTable(table=table)


def steane_decode(syndrome, kind: str = "Z") -> PauliOperator:
    return steane_decoder(kind).correction(tuple(syndrome))


# -- transversal logical gates -------------------------------------------


def qrm_t_layer() -> tuple:
    """Transversal T: T on odd-labeled qubits, T-dagger on even-labeled."""
    return tuple(("t" if (q + 1) % 2 == 1 else "tdg", q) for q in range(15))


def qrm_s_layer(dagger: bool = False) -> tuple:
    """Transversal S (T-layer squared): S on odd, S-dagger on even labels."""
    a, b = ("sdg", "s") if dagger else ("s", "sdg")
    return tuple((a if (q + 1) % 2 == 1 else b, q) for q in range(15))


def pauli_layer(op: PauliOperator) -> tuple:
    return tuple((op.kind_on(q).lower(), q) for q in range(op.n) if op.kind_on(q) != "I")


def intercode_cnot_pairs() -> tuple:
    """Transversal CNOT qRM -> Steane: qubit i of each block, i = 1..7."""
    return tuple((i, i) for i in range(7))


def transversal_ops(code: CssCode) -> dict:
    """Gate layers for the logical T, S, S-dagger, Z, X and the block CNOT."""
    if code.name == "qrm":
        return {
            "T": qrm_t_layer(),
            "S": qrm_s_layer(False),
            "Sdg": qrm_s_layer(True),
            "Z": pauli_layer(code.logical_z),
            "X": pauli_layer(code.logical_x),
            "CNOT": intercode_cnot_pairs(),
        }
    if code.name == "steane":
        return {
            "Z": pauli_layer(code.logical_z),
            "X": pauli_layer(code.logical_x),
        }
    raise PauliError(f"no transversal table for code {code.name!r}")
