"""End-to-end orchestration of one Monte Carlo shot.

Stage 1 samples a Pauli frame through the flagged qRM |+> preparation and
post-selects on all flag/syndrome/verification records.  The accepted frame
is reduced, converted to its Clifford form, and the downstream half (Steane
|0> preparation, transversal inter-block CNOT, destructive X-readout of the
qRM block, teleportation correction, and logical tomography) is simulated
exactly on the tableau engine for each of the four stabilizer states whose
signed combination reconstructs the magic-state fidelity.

Teleportation: the logical X value of the qRM block is the parity of the
first seven X-readout bits; the conditional logical Z on the Steane block is
applied as a noiseless frame update.  The X-cell syndrome of the readout is
post-selected to be trivial in both tomography modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .circuits import Circuit, qrm_plus_prep, stage1_circuit
from .circuits import steane_zero_prep
from .codes import build_qrm, build_steane, steane_decoder
from .frames import check_deterministic_reference, sample_shot
from .noise import NoiseModel
from .pauli import PauliError, PauliOperator, SignedPauli
from .reduction import reduce_frame, s_layer_gates, to_clifford_frame
from .simrun import run_circuit
from .tableau import Tableau

MODES = ("ec", "ps")

# Joint register: qRM block 0..14, Steane block 15..21, Steane ancilla 22.
N_JOINT = 23
QRM_BLOCK = tuple(range(15))
STEANE_BLOCK = tuple(range(15, 22))
STEANE_ANCILLA = 22

# Decomposition of the magic-state density matrix into stabilizer states:
# labels, signs in the non-convex combination, and ideal logical
# (X, Y) expectations after a perfect run.
DECOMPOSITION_STATES = ("plus", "minus", "y_plus", "y_minus")
DECOMPOSITION_SIGNS = {"plus": 1, "minus": -1, "y_plus": 1, "y_minus": -1}
IDEAL_EXPECTATIONS = {
    "plus": (1, 0),
    "minus": (-1, 0),
    "y_plus": (0, 1),
    "y_minus": (0, -1),
}


@dataclass
class StateOutcome:
    teleport_accepted: bool
    tomo_x_accepted: bool = False
    tomo_y_accepted: bool = False
    outcome_x: int | None = None
    outcome_y: int | None = None


@dataclass
class ShotRecord:
    stage1_accepted: bool
    states: dict | None = None   # label -> StateOutcome


def twist_gates(state: str) -> tuple:
    """Noiseless transversal layer sending |+> to the decomposition state."""
    from .codes import pauli_layer, qrm_s_layer

    if state == "plus":
        return ()
    if state == "minus":
        return pauli_layer(build_qrm().logical_z)
    if state == "y_plus":
        return qrm_s_layer(False)
    if state == "y_minus":
        return qrm_s_layer(True)
    raise PauliError(f"unknown decomposition state {state!r}")


@lru_cache(maxsize=None)
def prep_segment(state: str) -> Circuit:
    """Noiseless qRM encoding network plus the decomposition twist."""
    c = Circuit(N_JOINT)
    src = qrm_plus_prep()
    for ins in src.instructions:
        if ins.kind == "mx" or 15 in ins.qubits:
            continue  # drop the verification ancilla: prep here is noiseless
        c.add(ins.kind, *ins.qubits, noisy=False)
    for g, q in twist_gates(state):
        c.add(g, q, noisy=False)
    return c


@lru_cache(maxsize=None)
def main_segment(s_pattern: int) -> Circuit:
    """Phase layer, T-layer noise sites, Steane prep, block CNOT."""
    c = Circuit(N_JOINT)
    for g, q in s_layer_gates(s_pattern):
        c.add(g, q, noisy=False)
    for q in QRM_BLOCK:
        c.add("noise1", q, label="t-layer")
    steane = steane_zero_prep().remapped(N_JOINT, {i: 15 + i for i in range(8)})
    c.extend(steane)
    for i in range(7):
        c.add("cx", i, 15 + i)
    return c


@lru_cache(maxsize=None)
def readout_segment() -> Circuit:
    """Destructive X-basis readout of the whole qRM block."""
    c = Circuit(N_JOINT)
    for q in QRM_BLOCK:
        c.add("mx", q, role="teleport-readout", label=f"ro{q + 1}")
    return c


@lru_cache(maxsize=None)
def tomo_segment(basis: str) -> Circuit:
    c = Circuit(N_JOINT)
    kind = "mx" if basis == "x" else "my"
    for q in STEANE_BLOCK:
        c.add(kind, q, role="tomography", noisy=False, label=f"tomo-{basis}{q - 14}")
    return c


# Steane tomography post-processing tables (0-based local qubits).
_PLAQUETTE_LOCAL = ((0, 1, 5, 6), (1, 2, 3, 6), (3, 4, 5, 6))
_LOGICAL_LOCAL = (0, 1, 2)


def _syndrome_bits(bits) -> tuple:
    return tuple(
        1 if sum(1 for q in s if bits[q] == -1) % 2 else 0 for s in _PLAQUETTE_LOCAL
    )


@lru_cache(maxsize=None)
def _correction_flips_logical() -> dict:
    """Syndrome pattern -> does the decoded correction flip the logical?"""
    table = {}
    dec = steane_decoder("Z")
    for syn, corr in dec.table.items():
        flips = any(corr.kind_on(q) != "I" for q in _LOGICAL_LOCAL)
        table[syn] = 1 if flips else 0
    return table


def tomography_outcome(bits, basis: str, mode: str, z_frame: bool):
    """(accepted, logical outcome) from 7 single-qubit tomography readings.

    `bits` are +/-1 readings of the 7 Steane qubits in the given basis;
    `z_frame` is the pending teleportation Z correction.  The logical Y
    observable carries the sign fixed by exact phase bookkeeping
    (-Y1 Y2 Y3), applied here so the returned outcome is the value of the
    signed logical operator.
    """
    syn = _syndrome_bits(bits)
    raw = 1
    for q in _LOGICAL_LOCAL:
        raw *= bits[q]
    if basis == "y":
        raw *= build_steane().logical_y().sign
    if z_frame:
        raw = -raw
    if mode == "ps":
        if any(syn):
            return False, None
        return True, raw
    if mode == "ec":
        if _correction_flips_logical()[syn]:
            raw = -raw
        return True, raw
    raise PauliError(f"unknown mode {mode!r}")


_CELL_SUPPORTS = tuple(
    tuple(q for q in range(15) if s.kind_on(q) != "I") for s in build_qrm().x_stabilizers
)
_XBAR_SUPPORT = tuple(range(7))


def readout_postselect(bits):
    """(accepted, xbar) from the 15 destructive X-basis readings."""
    for cell in _CELL_SUPPORTS:
        par = 1
        for q in cell:
            par *= bits[q]
        if par == -1:
            return False, None
    xbar = 1
    for q in _XBAR_SUPPORT:
        xbar *= bits[q]
    return True, xbar


def run_stage1(noise: NoiseModel, rng, reduce: bool = True, tiebreak: str = "lex"):
    """(accepted, frame) for one stage-1 shot; frame reduced unless disabled."""
    circ = stage1_circuit()
    check_deterministic_reference(circ)
    fs = sample_shot(circ, noise, rng)
    if any(fs.flips):
        return False, None
    raw = PauliOperator(15, fs.frame.x & 0x7FFF, fs.frame.z & 0x7FFF)
    return True, reduce_frame(raw, tiebreak) if reduce else raw


def run_downstream(p_frame: PauliOperator, state: str, mode: str, noise: NoiseModel, rng) -> StateOutcome:
    """Tableau-simulate the downstream half for one decomposition state."""
    if mode not in MODES:
        raise PauliError(f"unknown mode {mode!r}")
    cf = to_clifford_frame(p_frame)
    t = Tableau(N_JOINT)
    run_circuit(prep_segment(state), rng=None, tableau=t)
    t.apply_pauli(PauliOperator(N_JOINT, cf.residual.x, cf.residual.z))
    res = run_circuit(main_segment(cf.s_pattern), rng=rng, noise=noise, tableau=t)
    verif = res.outcomes[0]
    if verif == -1:
        return StateOutcome(teleport_accepted=False)
    ro = run_circuit(readout_segment(), rng=rng, noise=noise, tableau=t)
    accepted, xbar = readout_postselect(ro.outcomes)
    if not accepted:
        return StateOutcome(teleport_accepted=False)
    z_frame = xbar == -1

    out = StateOutcome(teleport_accepted=True)
    tx = run_circuit(tomo_segment("x"), rng=rng, tableau=t.copy())
    out.tomo_x_accepted, out.outcome_x = tomography_outcome(tx.outcomes, "x", mode, z_frame)
    ty = run_circuit(tomo_segment("y"), rng=rng, tableau=t.copy())
    out.tomo_y_accepted, out.outcome_y = tomography_outcome(ty.outcomes, "y", mode, z_frame)
    return out


def run_shot(noise: NoiseModel, mode: str, rng, reduce: bool = True, tiebreak: str = "lex") -> ShotRecord:
    """One full shot: stage 1, then all four sub-ensembles on acceptance."""
    accepted, frame = run_stage1(noise, rng, reduce=reduce, tiebreak=tiebreak)
    if not accepted:
        return ShotRecord(stage1_accepted=False)
    states = {s: run_downstream(frame, s, mode, noise, rng) for s in DECOMPOSITION_STATES}
    return ShotRecord(stage1_accepted=True, states=states)


# -- exact noiseless evaluation ---------------------------------------------


def combined_logical(basis: str) -> SignedPauli:
    """Teleportation-corrected logical observable on the joint register.

    The corrected tomography outcome equals the product of the qRM logical-X
    readout parity and the Steane logical reading, i.e. the value of
    X(qRM 1..7) tensor L_steane measured jointly.
    """
    xbar_qrm = PauliOperator.from_support(N_JOINT, "X", _XBAR_SUPPORT)
    if basis == "x":
        steane_l = SignedPauli(PauliOperator.from_support(N_JOINT, "X", STEANE_BLOCK[:3]))
    else:
        ly = build_steane().logical_y()
        steane_l = SignedPauli(
            PauliOperator(N_JOINT, ly.op.x << 15, ly.op.z << 15), ly.sign
        )
    return SignedPauli(steane_l.op.multiply(xbar_qrm), steane_l.sign)


def noiseless_expectations() -> dict:
    """Exact per-state (X, Y) logical expectations of the p = 0 protocol."""
    out = {}
    for state in DECOMPOSITION_STATES:
        t = Tableau(N_JOINT)
        run_circuit(prep_segment(state), rng=None, tableau=t)
        res = run_circuit(main_segment(0), rng=None, tableau=t)
        if res.outcomes[0] != 1:
            raise AssertionError("noiseless Steane verification failed")
        for cell in build_qrm().x_stabilizers:
            e = t.expectation(SignedPauli(PauliOperator(N_JOINT, cell.x, cell.z)))
            if e != 1:
                raise AssertionError("noiseless readout cell not +1")
        ex = t.expectation(combined_logical("x"))
        ey = t.expectation(combined_logical("y"))
        out[state] = (ex, ey)
    return out


def noiseless_delta() -> float:
    """Exact Delta of the p = 0 protocol (should be 4)."""
    exps = noiseless_expectations()
    dx = sum(DECOMPOSITION_SIGNS[s] * exps[s][0] for s in DECOMPOSITION_STATES)
    dy = sum(DECOMPOSITION_SIGNS[s] * exps[s][1] for s in DECOMPOSITION_STATES)
    return float(dx + dy)
