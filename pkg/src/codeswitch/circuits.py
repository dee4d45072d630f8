"""Circuit IR and the concrete circuits of the preparation protocol.

Instructions are kept as a flat ordered list.  Builders transcribe the
encoding networks for the Steane |0> and qRM |+> blocks and adapt the two
flagged syndrome-extraction templates (a two-stabilizer and a
three-stabilizer variant, both with a single flag qubit) from the Steane
layout to the qRM groups.  Qubits are 0-based internally and 1-based in the
text format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .noise import NoiseModel
from .pauli import PauliError, PauliOperator

GATE1_KINDS = ("h", "s", "sdg", "x", "y", "z")
ROLES = ("flag", "verification", "syndrome", "teleport-readout", "tomography")

_FIXTURE_PATH = Path(__file__).with_name("fixtures") / "extraction_orders.json"


@dataclass(frozen=True)
class Instruction:
    kind: str                 # prep_z | prep_x | gate1 kinds | cx | mz | mx | my | noise1 | cond_pauli
    qubits: tuple
    role: str | None = None   # for measurements
    label: str | None = None
    noisy: bool = True
    cond: int | None = None   # record index, for cond_pauli
    pauli: str | None = None  # "x" | "z", for cond_pauli

    def __post_init__(self):
        if self.kind in ("mz", "mx", "my") and self.role not in ROLES:
            raise PauliError(f"measurement needs a role, got {self.role!r}")


@dataclass(frozen=True)
class MeasurementRecord:
    index: int          # position in the record stream
    instr_index: int
    qubit: int
    basis: str          # "z" | "x" | "y"
    role: str
    label: str | None


@dataclass(frozen=True)
class NoiseLocation:
    index: int          # position in the location stream
    instr_index: int
    kind: str           # prep_z | prep_x | mz | mx | gate1 | gate2
    qubits: tuple


@dataclass
class Circuit:
    n_qubits: int
    instructions: list = field(default_factory=list)

    def add(self, kind, *qubits, role=None, label=None, noisy=True, cond=None, pauli=None):
        for q in qubits:
            if not 0 <= q < self.n_qubits:
                raise PauliError(f"qubit {q} out of range (n={self.n_qubits})")
        if kind == "cx" and qubits[0] == qubits[1]:
            raise PauliError("cx needs distinct qubits")
        self.instructions.append(
            Instruction(kind, tuple(qubits), role=role, label=label, noisy=noisy, cond=cond, pauli=pauli)
        )

    def extend(self, other: "Circuit"):
        if other.n_qubits > self.n_qubits:
            raise PauliError("cannot extend with a wider circuit")
        self.instructions.extend(other.instructions)

    def remapped(self, n_qubits: int, mapping: dict) -> "Circuit":
        """Copy with qubits renumbered through `mapping`."""
        out = Circuit(n_qubits)
        for ins in self.instructions:
            out.add(
                ins.kind,
                *[mapping[q] for q in ins.qubits],
                role=ins.role,
                label=ins.label,
                noisy=ins.noisy,
                cond=ins.cond,
                pauli=ins.pauli,
            )
        return out

    @property
    def measurement_records(self) -> list:
        recs = []
        for i, ins in enumerate(self.instructions):
            if ins.kind in ("mz", "mx", "my"):
                recs.append(
                    MeasurementRecord(
                        index=len(recs),
                        instr_index=i,
                        qubit=ins.qubits[0],
                        basis=ins.kind[1],
                        role=ins.role,
                        label=ins.label,
                    )
                )
        return recs

    @property
    def noise_locations(self) -> list:
        locs = []
        for i, ins in enumerate(self.instructions):
            if not ins.noisy:
                continue
            if ins.kind in ("prep_z", "prep_x", "mz", "mx"):
                kind = ins.kind
            elif ins.kind in GATE1_KINDS or ins.kind == "noise1":
                kind = "gate1"
            elif ins.kind == "cx":
                kind = "gate2"
            else:
                continue
            locs.append(NoiseLocation(index=len(locs), instr_index=i, kind=kind, qubits=ins.qubits))
        return locs

    # -- text serialization (one instruction per line, 1-based qubits) -----

    def to_text(self) -> str:
        lines = [f"qubits {self.n_qubits}"]
        for ins in self.instructions:
            parts = [ins.kind] + [str(q + 1) for q in ins.qubits]
            if ins.role is not None:
                parts.append(f"role={ins.role}")
            if ins.label is not None:
                parts.append(f"label={ins.label}")
            if not ins.noisy:
                parts.append("noiseless")
            if ins.cond is not None:
                parts.append(f"cond={ins.cond}")
            if ins.pauli is not None:
                parts.append(f"pauli={ins.pauli}")
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
        if not lines or not lines[0].startswith("qubits "):
            raise PauliError("circuit text must start with a 'qubits N' line")
        circ = Circuit(int(lines[0].split()[1]))
        for ln in lines[1:]:
            parts = ln.split()
            kind = parts[0]
            qubits = []
            kw = {"role": None, "label": None, "noisy": True, "cond": None, "pauli": None}
            for p in parts[1:]:
                if p == "noiseless":
                    kw["noisy"] = False
                elif "=" in p:
                    k, v = p.split("=", 1)
                    kw[k] = int(v) if k == "cond" else v
                else:
                    qubits.append(int(p) - 1)
            circ.add(kind, *qubits, **kw)
        return circ


# -- encoding circuits ------------------------------------------------------


def steane_zero_prep() -> Circuit:
    """Encoded |0> on the Steane block, one flag ancilla verifying logical Z.

    Qubits 0-6 data, 7 ancilla.  Gate order transcribed column by column from
    the standard verified encoding network.
    """
    c = Circuit(8)
    for q in (0, 2, 4):
        c.add("prep_x", q)
    for q in (1, 3, 5, 6, 7):
        c.add("prep_z", q)
    for ctrl, tgt in (
        (2, 3),
        (2, 1),
        (4, 3),
        (0, 1),
        (4, 5),
        (1, 6),
        (4, 6),
        (0, 5),
        (2, 7),
        (6, 7),
        (5, 7),
    ):
        c.add("cx", ctrl, tgt)
    c.add("mz", 7, role="verification", label="steane-zero-verify")
    return c


# qRM |+> network: the five |+> qubits 7, 9, 11, 13, 14 (1-based) seed the
# X-type generators, CNOT columns as drawn, then the weight-7 logical-X
# representative X2 X4 X6 X8 X10 X12 X14 is verified through ancilla 16.
_QRM_PLUS_QUBITS_PLUS = (7, 9, 11, 13, 14)
_QRM_PLUS_CNOTS = (
    (7, 4), (11, 12),
    (7, 2), (11, 10), (13, 12),
    (14, 7),
    (14, 11),
    (13, 8),
    (4, 3), (14, 8),
    (8, 1), (12, 15),
    (9, 8), (11, 15),
    (14, 6),
    (9, 2),
    (11, 4),
    (7, 6), (9, 10),
    (2, 1), (12, 5),
    (6, 5), (10, 15),
    (10, 3),
    (13, 6),
)
_QRM_VERIFY_TARGETS = (2, 4, 6, 8, 10, 12, 14)


def qrm_plus_prep() -> Circuit:
    """Encoded |+> on the qRM block with the flagged logical-X verification."""
    c = Circuit(16)
    plus = set(q - 1 for q in _QRM_PLUS_QUBITS_PLUS)
    for q in range(15):
        c.add("prep_x" if q in plus else "prep_z", q)
    c.add("prep_x", 15)
    for ctrl, tgt in _QRM_PLUS_CNOTS:
        c.add("cx", ctrl - 1, tgt - 1)
    for tgt in _QRM_VERIFY_TARGETS:
        c.add("cx", 15, tgt - 1)
    c.add("mx", 15, role="verification", label="qrm-plus-verify")
    return c


# -- flagged syndrome extraction -------------------------------------------
#
# Two-stabilizer template (ancillas a, b, one flag):
#   data slots: t1 t2 shared between A and B, s1 s2 in A only, u1 u2 in B only
#   cx order: t1>a, f>a, t2>a, a>b, s1>a, s2>a, u1>b, u2>b, f>a, f>b
#   then M_Z(a)=A, M_Z(b)=B, M_X(flag).
# Three-stabilizer template (ancillas a, b, c, one flag):
#   w in A,B,C; tab in A,B; tac in A,C; tbc in B,C; ra/rb/rc exclusive
#   cx order: w>a, f>a, a>c, tab>a, a>b, tac>a, ra>a, rb>b, tbc>b,
#             tac>c, rc>c, tbc>c, f>a, f>b, f>c
#   then M_Z(a)=A, M_Z(b)=B, M_Z(c)=C, M_X(flag).


def _support_set(op: PauliOperator):
    return frozenset(q for q in range(op.n) if op.kind_on(q) != "I")


def pair_template_slots(a: PauliOperator, b: PauliOperator) -> dict:
    """Derive slot classes for the two-stabilizer template; order unresolved."""
    sa, sb = _support_set(a), _support_set(b)
    shared = sa & sb
    if len(sa) != 4 or len(sb) != 4 or len(shared) != 2:
        raise PauliError("pair template needs two weight-4 stabilizers sharing 2 qubits")
    return {"t": sorted(shared), "s": sorted(sa - shared), "u": sorted(sb - shared)}


def triple_template_slots(a: PauliOperator, b: PauliOperator, c: PauliOperator) -> dict:
    """Slots for the three-stabilizer template; fully determined by overlaps."""
    sa, sb, sc = _support_set(a), _support_set(b), _support_set(c)
    w = sa & sb & sc
    tab = (sa & sb) - w
    tac = (sa & sc) - w
    tbc = (sb & sc) - w
    ra, rb, rc = sa - sb - sc, sb - sa - sc, sc - sa - sb
    sizes = tuple(len(s) for s in (w, tab, tac, tbc, ra, rb, rc))
    if sizes != (1, 1, 1, 1, 1, 1, 1):
        raise PauliError("triple template needs the Steane-style overlap structure")
    (w,), (tab,), (tac,), (tbc,), (ra,), (rb,), (rc,) = w, tab, tac, tbc, ra, rb, rc
    return {"w": w, "tab": tab, "tac": tac, "tbc": tbc, "ra": ra, "rb": rb, "rc": rc}


def build_pair_round(
    a: PauliOperator,
    b: PauliOperator,
    order: dict,
    n_qubits: int,
    anc: tuple,
    labels: tuple,
) -> Circuit:
    """Two-stabilizer flagged round; `order` resolves slot ordering."""
    aa, ab, flag = anc
    c = Circuit(n_qubits)
    c.add("prep_z", aa)
    c.add("prep_z", ab)
    c.add("prep_x", flag)
    t1, t2 = order["t"]
    s1, s2 = order["s"]
    u1, u2 = order["u"]
    for ctrl, tgt in (
        (t1, aa), (flag, aa), (t2, aa), (aa, ab),
        (s1, aa), (s2, aa), (u1, ab), (u2, ab),
        (flag, aa), (flag, ab),
    ):
        c.add("cx", ctrl, tgt)
    c.add("mz", aa, role="syndrome", label=labels[0])
    c.add("mz", ab, role="syndrome", label=labels[1])
    c.add("mx", flag, role="flag", label=f"flag-{labels[0]}-{labels[1]}")
    return c


def build_triple_round(
    slots: dict,
    n_qubits: int,
    anc: tuple,
    labels: tuple,
) -> Circuit:
    aa, ab, ac, flag = anc
    c = Circuit(n_qubits)
    for q in (aa, ab, ac):
        c.add("prep_z", q)
    c.add("prep_x", flag)
    s = slots
    for ctrl, tgt in (
        (s["w"], aa), (flag, aa), (aa, ac), (s["tab"], aa), (aa, ab),
        (s["tac"], aa), (s["ra"], aa),
        (s["rb"], ab), (s["tbc"], ab),
        (s["tac"], ac), (s["rc"], ac), (s["tbc"], ac),
        (flag, aa), (flag, ab), (flag, ac),
    ):
        c.add("cx", ctrl, tgt)
    c.add("mz", aa, role="syndrome", label=labels[0])
    c.add("mz", ab, role="syndrome", label=labels[1])
    c.add("mz", ac, role="syndrome", label=labels[2])
    c.add("mx", flag, role="flag", label=f"flag-{labels[0]}-{labels[1]}-{labels[2]}")
    return c


# The four extraction groups (1-based plaquette numbers of the qRM table).
EXTRACTION_GROUPS = (
    ("pair", (13, 9)),
    ("pair", (7, 8)),
    ("triple", (1, 3, 2)),
    ("triple", (16, 18, 17)),
)


def _load_frozen_orders() -> dict:
    with open(_FIXTURE_PATH) as f:
        return json.load(f)


def flagged_extraction(group, n_qubits: int = 20, anc_base: int = 16) -> Circuit:
    """Flagged extraction round for one qRM group.

    `group` is a tuple of 1-based plaquette numbers, either a pair or a
    triple from EXTRACTION_GROUPS.  Slot ordering for pairs comes from the
    frozen fixture (chosen once by coverage search).
    """
    from .codes import build_qrm

    code = build_qrm()
    stabs = [code.z_stabilizers[i - 1] for i in group]
    labels = tuple(f"p{i}" for i in group)
    if len(stabs) == 2:
        frozen = _load_frozen_orders()["pairs"][f"p{group[0]}-p{group[1]}"]
        order = {k: [q - 1 for q in v] for k, v in frozen.items()}
        derived = pair_template_slots(stabs[0], stabs[1])
        for k in ("t", "s", "u"):
            if sorted(order[k]) != derived[k]:
                raise PauliError(f"frozen order for {labels} does not match the group")
        return build_pair_round(stabs[0], stabs[1], order, n_qubits, (anc_base, anc_base + 1, anc_base + 3), labels)
    if len(stabs) == 3:
        slots = triple_template_slots(*stabs)
        return build_triple_round(slots, n_qubits, (anc_base, anc_base + 1, anc_base + 2, anc_base + 3), labels)
    raise PauliError("group must contain 2 or 3 stabilizers")


# Stage-1 layout: data 0..14, encoding verification ancilla 15,
# round ancillas 16..18 (reused), flag 19.
STAGE1_N_QUBITS = 20
STAGE1_DATA = tuple(range(15))


def stage1_circuit() -> Circuit:
    """Full first stage: qRM |+> prep, verification, four flagged rounds."""
    c = Circuit(STAGE1_N_QUBITS)
    c.extend(qrm_plus_prep())
    for group_kind, group in EXTRACTION_GROUPS:
        c.extend(flagged_extraction(group))
    return c


def add_noise(circuit: Circuit, noise: NoiseModel) -> list:
    """Annotate noise locations with strengths (pure bookkeeping)."""
    return [(loc, noise.strength(loc.kind)) for loc in circuit.noise_locations]
