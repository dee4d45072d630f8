"""Per-shot Pauli-frame sampler for the first protocol stage.

The frame is the sampled Pauli error relative to the noiseless reference
execution; measurements record a flip bit wherever the frame anticommutes
with the measured observable.  This engine requires every measurement of the
reference circuit to be deterministic (true for the whole stage-1 circuit,
where flags, syndromes and the verification all read +1 noiselessly); the
check runs once per circuit through the tableau engine.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import Circuit
from .noise import ONE_QUBIT_PAULIS, TWO_QUBIT_PAULIS, NoiseModel
from .pauli import PauliError, PauliOperator
from .simrun import run_circuit

_checked_reference: dict = {}


@dataclass
class FrameSample:
    frame: PauliOperator     # residual error at the end of the circuit
    flips: list              # flip bit per measurement record


def check_deterministic_reference(circuit: Circuit) -> list:
    """Verify all reference measurements are deterministic; returns outcomes.

    Results are cached per circuit identity.
    """
    key = id(circuit)
    if key not in _checked_reference:
        try:
            res = run_circuit(circuit, rng=None)
        except PauliError as e:
            raise PauliError(f"frame engine precondition violated: {e}") from e
        _checked_reference[key] = res.outcomes
    return _checked_reference[key]


def _conj_cx(fx: int, fz: int, c: int, t: int):
    if (fx >> c) & 1:
        fx ^= 1 << t
    if (fz >> t) & 1:
        fz ^= 1 << c
    return fx, fz


def _conj_gate1(kind: str, fx: int, fz: int, q: int):
    bit = 1 << q
    if kind == "h":
        xb, zb = fx & bit, fz & bit
        fx = (fx & ~bit) | zb
        fz = (fz & ~bit) | xb
    elif kind in ("s", "sdg"):
        fz ^= fx & bit
    # Pauli gates commute up to phase; the frame is phase-free
    return fx, fz


def _frame_pass(circuit: Circuit, error_at) -> FrameSample:
    """Shared frame propagation; `error_at(loc_index) -> (x, z) or None`."""
    n = circuit.n_qubits
    fx = fz = 0
    flips: list = []
    loc_index = 0
    for ins in circuit.instructions:
        k = ins.kind
        if k == "prep_z" or k == "prep_x":
            bit = 1 << ins.qubits[0]
            fx &= ~bit
            fz &= ~bit
            if ins.noisy:
                e = error_at(loc_index)
                if e is not None:
                    fx ^= e[0]
                    fz ^= e[1]
                loc_index += 1
        elif k == "cx":
            fx, fz = _conj_cx(fx, fz, *ins.qubits)
            if ins.noisy:
                e = error_at(loc_index)
                if e is not None:
                    fx ^= e[0]
                    fz ^= e[1]
                loc_index += 1
        elif k in ("h", "s", "sdg", "x", "y", "z"):
            fx, fz = _conj_gate1(k, fx, fz, ins.qubits[0])
            if ins.noisy:
                e = error_at(loc_index)
                if e is not None:
                    fx ^= e[0]
                    fz ^= e[1]
                loc_index += 1
        elif k == "noise1":
            if ins.noisy:
                e = error_at(loc_index)
                if e is not None:
                    fx ^= e[0]
                    fz ^= e[1]
                loc_index += 1
        elif k in ("mz", "mx"):
            if ins.noisy:
                e = error_at(loc_index)
                if e is not None:
                    fx ^= e[0]
                    fz ^= e[1]
                loc_index += 1
            q = ins.qubits[0]
            flips.append((fx >> q) & 1 if k == "mz" else (fz >> q) & 1)
        elif k == "my":
            flips.append(((fx ^ fz) >> ins.qubits[0]) & 1)
        else:
            raise PauliError(f"frame engine cannot execute instruction kind {k!r}")
    return FrameSample(frame=PauliOperator(n, fx, fz), flips=flips)


def sample_shot(circuit: Circuit, noise: NoiseModel, rng) -> FrameSample:
    """One Monte Carlo frame sample through the (deterministic) circuit."""
    check_deterministic_reference(circuit)
    locs = circuit.noise_locations

    def error_at(i):
        loc = locs[i]
        p = noise.strength(loc.kind)
        if p <= 0.0:
            return None
        u = rng.random()
        if u >= p:
            return None
        if loc.kind in ("prep_z", "mz"):
            return (1 << loc.qubits[0], 0)
        if loc.kind in ("prep_x", "mx"):
            return (0, 1 << loc.qubits[0])
        if loc.kind == "gate1":
            xb, zb = ONE_QUBIT_PAULIS[int(u / p * 3) % 3]
            bit = 1 << loc.qubits[0]
            return (bit if xb else 0, bit if zb else 0)
        xc, zc, xt, zt = TWO_QUBIT_PAULIS[int(u / p * 15) % 15]
        c, t = loc.qubits
        return (
            ((1 << c) if xc else 0) | ((1 << t) if xt else 0),
            ((1 << c) if zc else 0) | ((1 << t) if zt else 0),
        )

    return _frame_pass(circuit, error_at)


def forced_fault_shot(circuit: Circuit, faults) -> FrameSample:
    """Deterministic frame propagation with the given faults inserted.

    `faults` is a list of (location_index, PauliOperator); each Pauli must be
    supported on its location's qubits.
    """
    locs = circuit.noise_locations
    by_loc: dict = {}
    for loc_index, op in faults:
        if not 0 <= loc_index < len(locs):
            raise PauliError(f"no noise location {loc_index}")
        loc = locs[loc_index]
        allowed = 0
        for q in loc.qubits:
            allowed |= 1 << q
        if (op.x | op.z) & ~allowed:
            raise PauliError(f"fault at location {loc_index} acts outside {loc.qubits}")
        x, z = by_loc.get(loc_index, (0, 0))
        by_loc[loc_index] = (x ^ op.x, z ^ op.z)

    return _frame_pass(circuit, lambda i: by_loc.get(i))
