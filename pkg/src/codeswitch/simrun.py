"""Per-shot circuit execution on the tableau engine.

Noise is sampled per location following the placement rules (errors after
preparations and gates, before measurements).  Deterministic faults can be
injected at named noise locations, which is how the fault-injection harness
drives the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import Circuit
from .noise import ONE_QUBIT_PAULIS, TWO_QUBIT_PAULIS, NoiseModel
from .pauli import PauliError, PauliOperator, SignedPauli
from .tableau import Tableau


@dataclass
class RunResult:
    outcomes: list          # +1/-1 per measurement record
    deterministic: list     # bool per record
    tableau: Tableau


def sample_location_error(kind: str, qubits, n: int, noise: NoiseModel, rng) -> PauliOperator | None:
    p = noise.strength(kind)
    if p <= 0.0:
        return None
    u = rng.random()
    if u >= p:
        return None
    if kind == "prep_z" or kind == "mz":
        return PauliOperator.single(n, "X", qubits[0])
    if kind == "prep_x" or kind == "mx":
        return PauliOperator.single(n, "Z", qubits[0])
    if kind == "gate1":
        xb, zb = ONE_QUBIT_PAULIS[int(u / p * 3) % 3]
        q = qubits[0]
        return PauliOperator(n, (1 << q) if xb else 0, (1 << q) if zb else 0)
    if kind == "gate2":
        xc, zc, xt, zt = TWO_QUBIT_PAULIS[int(u / p * 15) % 15]
        c, t = qubits
        x = ((1 << c) if xc else 0) | ((1 << t) if xt else 0)
        z = ((1 << c) if zc else 0) | ((1 << t) if zt else 0)
        return PauliOperator(n, x, z)
    raise PauliError(f"unknown location kind {kind!r}")


def run_circuit(
    circuit: Circuit,
    rng=None,
    noise: NoiseModel | None = None,
    faults: dict | None = None,
    tableau: Tableau | None = None,
) -> RunResult:
    """Execute a circuit on a (fresh or given) tableau.

    `faults` maps noise-location index -> list of PauliOperator to inject at
    that location's attachment point.  Measurement outcomes are sampled with
    `rng` when random (noiseless reference runs may pass rng=None, in which
    case a random measurement is a contract violation).
    """
    n = circuit.n_qubits
    t = tableau if tableau is not None else Tableau(n)
    if t.n != n:
        raise PauliError("tableau size mismatch")
    outcomes: list = []
    det_flags: list = []
    faults = faults or {}
    loc_index = 0

    def attach(kind, qubits):
        nonlocal loc_index
        for op in faults.get(loc_index, ()):
            t.apply_pauli(op)
        if noise is not None:
            err = sample_location_error(kind, qubits, n, noise, rng)
            if err is not None:
                t.apply_pauli(err)
        loc_index += 1

    for ins in circuit.instructions:
        k = ins.kind
        if k == "prep_z" or k == "prep_x":
            t.prepare(k[-1], ins.qubits[0], rng=rng)
            if ins.noisy:
                attach(k, ins.qubits)
        elif k == "cx":
            t.apply("cx", *ins.qubits)
            if ins.noisy:
                attach("gate2", ins.qubits)
        elif k in ("h", "s", "sdg", "x", "y", "z"):
            t.apply(k, ins.qubits[0])
            if ins.noisy:
                attach("gate1", ins.qubits)
        elif k == "noise1":
            if ins.noisy:
                attach("gate1", ins.qubits)
        elif k in ("mz", "mx", "my"):
            if ins.noisy:
                attach(k if k != "my" else "mx", ins.qubits)
            q = ins.qubits[0]
            obs = SignedPauli(PauliOperator.single(n, k[1].upper(), q))
            if rng is None:
                outcome = t.expectation(obs)
                if outcome == 0:
                    raise PauliError(
                        f"random outcome for noiseless reference at record {len(outcomes)} ({ins.label})"
                    )
                det = True
            else:
                outcome, det = t.measure(obs, rng=rng)
            outcomes.append(outcome)
            det_flags.append(det)
        elif k == "cond_pauli":
            if outcomes[ins.cond] == -1:
                t.apply(ins.pauli, ins.qubits[0])
        else:
            raise PauliError(f"unknown instruction kind {k!r}")
    return RunResult(outcomes=outcomes, deterministic=det_flags, tableau=t)
