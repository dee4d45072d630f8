"""Exhaustive single- and double-fault injection over the full protocol.

Fault effects compose linearly at the level of record flips and residual
frames, so every fault configuration is first reduced to a compact signature
(stage-1 flip mask, residual frame masks, downstream flip mask) and
classification is memoized on composed signatures.  Configurations whose
reduced frame carries phase gates (a non-empty S-pattern) leave the linear
regime; those are classified by a branch-exploring tableau analysis that
follows every random measurement outcome with positive probability.

A case is a LOGICAL-FAILURE when some accepted branch of some decomposition
state yields a corrected logical expectation different from the ideal one
(including a deterministic value where the ideal is the cross-basis zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit
from .codes import build_qrm, build_steane
from .frames import forced_fault_shot
from .noise import ONE_QUBIT_PAULIS, TWO_QUBIT_PAULIS
from .oracles import FaultReport
from .pauli import PauliOperator, SignedPauli
from .protocol import (
    DECOMPOSITION_SIGNS,
    DECOMPOSITION_STATES,
    IDEAL_EXPECTATIONS,
    N_JOINT,
    STEANE_BLOCK,
    _CELL_SUPPORTS,
    _LOGICAL_LOCAL,
    _PLAQUETTE_LOCAL,
    _XBAR_SUPPORT,
    main_segment,
    prep_segment,
    readout_segment,
)
from .reduction import reduce_frame
from .simrun import run_circuit
from .tableau import Tableau

# ---------------------------------------------------------------------------
# fault configuration enumeration


def _location_options(kind: str, qubits, n: int):
    """(x, z, weight) fault options at one noise location; weights sum to 1."""
    if kind in ("prep_z", "mz"):
        return [(1 << qubits[0], 0, 1.0)]
    if kind in ("prep_x", "mx"):
        return [(0, 1 << qubits[0], 1.0)]
    if kind == "gate1":
        b = 1 << qubits[0]
        return [((b if xb else 0), (b if zb else 0), 1 / 3) for xb, zb in ONE_QUBIT_PAULIS]
    if kind == "gate2":
        c, t = qubits
        return [
            (
                ((1 << c) if xc else 0) | ((1 << t) if xt else 0),
                ((1 << c) if zc else 0) | ((1 << t) if zt else 0),
                1 / 15,
            )
            for xc, zc, xt, zt in TWO_QUBIT_PAULIS
        ]
    raise ValueError(kind)


@dataclass(frozen=True)
class Stage1Fault:
    loc: int
    x: int
    z: int
    weight: float
    flips: int       # bit per stage-1 record
    frame_x: int     # residual on the 15 data qubits
    frame_z: int


@dataclass(frozen=True)
class DownstreamFault:
    loc: int
    x: int
    z: int
    weight: float
    flips: int       # bit per downstream record (30 records)


@lru_cache(maxsize=None)
def _stage1_circuit_cached():
    from .circuits import stage1_circuit

    return stage1_circuit()


@lru_cache(maxsize=None)
def stage1_faults() -> tuple:
    circ = _stage1_circuit_cached()
    out = []
    for loc in circ.noise_locations:
        for x, z, w in _location_options(loc.kind, loc.qubits, circ.n_qubits):
            fs = forced_fault_shot(circ, [(loc.index, PauliOperator(circ.n_qubits, x, z))])
            flips = 0
            for i, f in enumerate(fs.flips):
                flips |= f << i
            out.append(
                Stage1Fault(loc.index, x, z, w, flips, fs.frame.x & 0x7FFF, fs.frame.z & 0x7FFF)
            )
    return tuple(out)


# Downstream fault circuit: phase-free frame propagation through the physical
# second half (T-layer sites, Steane prep, block CNOT, readout) plus the
# noiseless dual-basis tomography captures.  Record layout:
#   0 verif | 1..15 readout | 16..22 tomo-X | 23..29 tomo-Y
N_DS_RECORDS = 30
DS_VERIF = 0
DS_RO = tuple(range(1, 16))
DS_TX = tuple(range(16, 23))
DS_TY = tuple(range(23, 30))


@lru_cache(maxsize=None)
def _downstream_fault_circuit() -> Circuit:
    c = Circuit(N_JOINT)
    c.extend(main_segment(0))
    c.extend(readout_segment())
    for q in STEANE_BLOCK:
        c.add("mx", q, role="tomography", noisy=False, label=f"tx{q}")
    for q in STEANE_BLOCK:
        c.add("my", q, role="tomography", noisy=False, label=f"ty{q}")
    return c


def _ds_flips_for(faults) -> int:
    circ = _downstream_fault_circuit()
    fs = forced_fault_shot(circ, faults)
    flips = 0
    for i, f in enumerate(fs.flips):
        flips |= f << i
    return flips


@lru_cache(maxsize=None)
def downstream_faults() -> tuple:
    circ = _downstream_fault_circuit()
    out = []
    for loc in circ.noise_locations:
        for x, z, w in _location_options(loc.kind, loc.qubits, circ.n_qubits):
            flips = _ds_flips_for([(loc.index, PauliOperator(circ.n_qubits, x, z))])
            out.append(DownstreamFault(loc.index, x, z, w, flips))
    return tuple(out)


@lru_cache(maxsize=None)
def residual_flip_basis() -> tuple:
    """Downstream flip mask of an initial Z on each qRM qubit.

    The first 15 noise locations of the downstream circuit are the T-layer
    sites in qubit order, which precede every other operation on the block.
    """
    circ = _downstream_fault_circuit()
    locs = circ.noise_locations
    basis = []
    for q in range(15):
        loc = locs[q]
        assert loc.kind == "gate1" and loc.qubits == (q,)
        basis.append(_ds_flips_for([(loc.index, PauliOperator(N_JOINT, 0, 1 << q))]))
    return tuple(basis)


def residual_z_flips(z_mask: int) -> int:
    flips = 0
    basis = residual_flip_basis()
    m = z_mask
    while m:
        low = m & (-m)
        flips ^= basis[low.bit_length() - 1]
        m ^= low
    return flips


# ---------------------------------------------------------------------------
# fast classification (no phase pattern)

_EC_LUT_FLIPS = None


def _ec_flip(syn: tuple) -> int:
    """Does the decoded correction flip the logical (Hamming decoder)?"""
    global _EC_LUT_FLIPS
    if _EC_LUT_FLIPS is None:
        from .protocol import _correction_flips_logical

        _EC_LUT_FLIPS = _correction_flips_logical()
    return _EC_LUT_FLIPS[syn]


def _bit(mask: int, i: int) -> int:
    return (mask >> i) & 1


def _parity(mask: int, idxs) -> int:
    out = 0
    for i in idxs:
        out ^= (mask >> i) & 1
    return out


def classify_flips(ds_flips: int, mode: str):
    """(teleport_rejected, fails, any_syndrome, any_branch_rejected).

    `fails` is true when any decomposition state's aligned-basis corrected
    outcome flips relative to ideal in an accepted branch.
    """
    if _bit(ds_flips, DS_VERIF):
        return True, False, False, False
    for cell in _CELL_SUPPORTS:
        if _parity(ds_flips, [DS_RO[q] for q in cell]):
            return True, False, False, False
    b_flip = _parity(ds_flips, [DS_RO[q] for q in _XBAR_SUPPORT])
    any_syn = False
    any_branch_rej = False
    fails = False
    for basis, recs in (("x", DS_TX), ("y", DS_TY)):
        syn = tuple(_parity(ds_flips, [recs[i] for i in plaq]) for plaq in _PLAQUETTE_LOCAL)
        logical_flip = _parity(ds_flips, [recs[i] for i in _LOGICAL_LOCAL]) ^ b_flip
        if any(syn):
            any_syn = True
        if mode == "ps":
            if any(syn):
                any_branch_rej = True
                continue
            final_flip = logical_flip
        else:
            final_flip = logical_flip ^ _ec_flip(syn)
        if final_flip:
            # flips only matter where the ideal value is deterministic
            for state in DECOMPOSITION_STATES:
                ideal = IDEAL_EXPECTATIONS[state][0 if basis == "x" else 1]
                if ideal != 0:
                    fails = True
                    break
    return False, fails, any_syn, any_branch_rej


# ---------------------------------------------------------------------------
# slow classification: branch-exploring tableau analysis


def _steane_parity_obs(basis: str, plaq) -> SignedPauli:
    mask = 0
    for i in plaq:
        mask |= 1 << (15 + i)
    if basis == "x":
        return SignedPauli(PauliOperator(N_JOINT, mask, 0))
    return SignedPauli(PauliOperator(N_JOINT, mask, mask))


@lru_cache(maxsize=None)
def _slow_observables():
    cells = [SignedPauli(PauliOperator(N_JOINT, c.x, 0)) for c in build_qrm().x_stabilizers]
    xbar = SignedPauli(PauliOperator.from_support(N_JOINT, "X", _XBAR_SUPPORT))
    lx = SignedPauli(PauliOperator.from_support(N_JOINT, "X", STEANE_BLOCK[:3]))
    ly_local = build_steane().logical_y()
    ly = SignedPauli(PauliOperator(N_JOINT, ly_local.op.x << 15, ly_local.op.z << 15), ly_local.sign)
    parities = {
        b: [_steane_parity_obs(b, plaq) for plaq in _PLAQUETTE_LOCAL] for b in ("x", "y")
    }
    return cells, xbar, lx, ly, parities


def classify_branches(p_red: PauliOperator, ds_faults: tuple, mode: str):
    """(teleport_rejected_everywhere, fails, corrected) via branch exploration.

    Explores every measurement branch with its probability and accumulates the
    exact per-state conditional logical means; the case is a failure when the
    reconstructed-fidelity deficit 4 - Delta is nonzero.  A case that merely
    permutes the decomposition states (Delta still 4) leaves the magic state
    estimate untouched and is not a failure.

    ds_faults: tuple of (loc, x, z) on the downstream fault circuit.
    """
    cells, xbar, lx, ly, parities = _slow_observables()

    main = main_segment(p_red.x)
    n_main_locs = len(main.noise_locations)
    # map composite-circuit locations onto the pattern-specific main segment:
    # both start with the 15 T-layer sites and continue identically, since the
    # phase layer carries no noise locations.
    main_faults: dict = {}
    late_paulis = []
    for loc, x, z in ds_faults:
        if loc < n_main_locs:
            main_faults.setdefault(loc, []).append(PauliOperator(N_JOINT, x, z))
        else:
            late_paulis.append(PauliOperator(N_JOINT, x, z))

    corrected = False
    any_accept = False
    deficit = 0.0
    for state in DECOMPOSITION_STATES:
        t = Tableau(N_JOINT)
        run_circuit(prep_segment(state), rng=None, tableau=t)
        t.apply_pauli(PauliOperator(N_JOINT, p_red.x, p_red.z))
        res = run_circuit(main, rng=None, faults=main_faults, tableau=t)
        if res.outcomes[0] == -1:
            # the verification is Steane-local and state-independent: the
            # whole case is discarded
            return True, False, corrected
        for op in late_paulis:
            t.apply_pauli(op)
        # cells: post-select +1, branch weight halves per random cell
        p_keep = 1.0
        for cell in cells:
            e = t.expectation(cell)
            if e == -1:
                p_keep = 0.0
                break
            if e == 0:
                p_keep *= 0.5
                t.measure(cell, forced=1)
        if p_keep == 0.0:
            continue  # this state never reaches tomography: contributes nothing
        e_xbar = t.expectation(xbar)
        b_branches = [(0, 1.0)] if e_xbar == 1 else [(1, 1.0)] if e_xbar == -1 else [(0, 0.5), (1, 0.5)]
        sign = DECOMPOSITION_SIGNS[state]
        for basis, logical in (("x", lx), ("y", ly)):
            ideal = IDEAL_EXPECTATIONS[state][0 if basis == "x" else 1]
            num = 0.0
            den = 0.0
            for b, pb in b_branches:
                tb = t.copy()
                if e_xbar == 0:
                    tb.measure(xbar, forced=1 if b == 0 else -1)
                stack = [(tb, [], 0, p_keep * pb)]
                while stack:
                    tt, syn, depth, prob = stack.pop()
                    if depth < 3:
                        obs = parities[basis][depth]
                        e = tt.expectation(obs)
                        if e == 0:
                            if mode == "ps":
                                tt.measure(obs, forced=1)
                                stack.append((tt, syn + [0], depth + 1, prob * 0.5))
                                # the -1 half is a tomography rejection
                            else:
                                t2 = tt.copy()
                                tt.measure(obs, forced=1)
                                t2.measure(obs, forced=-1)
                                stack.append((tt, syn + [0], depth + 1, prob * 0.5))
                                stack.append((t2, syn + [1], depth + 1, prob * 0.5))
                        else:
                            bitv = 0 if e == 1 else 1
                            if mode == "ps" and bitv:
                                continue  # deterministic tomography rejection
                            stack.append((tt, syn + [bitv], depth + 1, prob))
                        continue
                    any_accept = True
                    syn_t = tuple(syn)
                    corr = _ec_flip(syn_t) if mode == "ec" else 0
                    if any(syn_t):
                        corrected = True
                    val = tt.expectation(logical)
                    if val != 0:
                        val = val * (-1 if b else 1) * (-1 if corr else 1)
                    num += prob * val
                    den += prob
            # acceptance-weighted deviation of this stream from ideal: the
            # case's leading-order contribution to the fidelity deficit
            deficit += sign * (num - den * ideal)
    fails = abs(deficit) > 1e-9
    return (not any_accept), fails, corrected


# ---------------------------------------------------------------------------
# the enumeration driver


def _classify_case(s1_flips: int, fx: int, fz: int, ds_flips: int, ds_faults: tuple, mode: str, memo: dict):
    """Classification string for one composed fault case."""
    if s1_flips:
        return "flagged"
    key = (fx, fz, ds_flips, ds_faults, mode)
    hit = memo.get(key)
    if hit is not None:
        return hit
    p_red = reduce_frame(PauliOperator(15, fx, fz))
    if p_red.x == 0:
        flips = ds_flips ^ residual_z_flips(p_red.z)
        rejected, fails, any_syn, any_branch_rej = classify_flips(flips, mode)
        if fails:
            cls = "LOGICAL-FAILURE"
        elif rejected or any_branch_rej:
            cls = "rejected"
        elif any_syn or flips or fx or fz:
            cls = "corrected" if mode == "ec" and any_syn else "benign"
        else:
            cls = "benign"
    else:
        all_rejected, fails, corrected = classify_branches(p_red, ds_faults, mode)
        if fails:
            cls = "LOGICAL-FAILURE"
        elif all_rejected:
            cls = "rejected"
        else:
            cls = "corrected" if corrected else "benign"
    memo[key] = cls
    return cls


def run_enumeration(order: int, mode: str, max_pairs: int | None = None, seed: int = 0, progress=None) -> FaultReport:
    if mode not in ("ec", "ps"):
        raise ValueError(f"unknown mode {mode!r}")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    s1 = stage1_faults()
    ds = downstream_faults()
    memo: dict = {}
    report = FaultReport(order=order, mode=mode)

    if order == 1:
        for f in s1:
            cls = _classify_case(f.flips, f.frame_x, f.frame_z, 0, (), mode, memo)
            report.add(cls, example=("s1", f.loc, f.x, f.z) if cls == "LOGICAL-FAILURE" else None)
        for g in ds:
            cls = _classify_case(0, 0, 0, g.flips, ((g.loc, g.x, g.z),), mode, memo)
            report.add(cls, example=("ds", g.loc, g.x, g.z) if cls == "LOGICAL-FAILURE" else None)
        return report

    # order 2: all unordered pairs of distinct fault locations, all options
    pairs = []
    n_s1, n_ds = len(s1), len(ds)
    for i in range(n_s1):
        for j in range(i + 1, n_s1):
            if s1[i].loc != s1[j].loc:
                pairs.append((0, i, j))
    for i in range(n_s1):
        for j in range(n_ds):
            pairs.append((1, i, j))
    for i in range(n_ds):
        for j in range(i + 1, n_ds):
            if ds[i].loc != ds[j].loc:
                pairs.append((2, i, j))

    rng = np.random.default_rng(seed)
    if max_pairs is not None and len(pairs) > max_pairs:
        idx = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[i] for i in idx]
        report.subsampled = True

    for count, (fam, i, j) in enumerate(pairs):
        if progress is not None and count % 200000 == 0:
            progress(count, len(pairs))
        if fam == 0:
            a, bq = s1[i], s1[j]
            cls = _classify_case(
                a.flips ^ bq.flips, a.frame_x ^ bq.frame_x, a.frame_z ^ bq.frame_z, 0, (), mode, memo
            )
            ex = ("s1+s1", a.loc, bq.loc)
        elif fam == 1:
            a, g = s1[i], ds[j]
            cls = _classify_case(
                a.flips, a.frame_x, a.frame_z, g.flips, ((g.loc, g.x, g.z),), mode, memo
            )
            ex = ("s1+ds", a.loc, g.loc)
        else:
            g1, g2 = ds[i], ds[j]
            cls = _classify_case(
                0, 0, 0, g1.flips ^ g2.flips, ((g1.loc, g1.x, g1.z), (g2.loc, g2.x, g2.z)), mode, memo
            )
            ex = ("ds+ds", g1.loc, g2.loc)
        report.add(cls, example=ex if cls == "LOGICAL-FAILURE" else None)
    return report


def linear_rejection_coefficient(mode: str) -> float:
    """First-order coefficient of the pooled rejection rate.

    Sums, over every noise location and fault option, the option weight times
    the pooled probability (over states and tomography branches) that the
    fault causes the shot to be discarded; the diagnostic counterpart of the
    leading term of the fitted rejection polynomial.
    """
    s1 = stage1_faults()
    ds = downstream_faults()
    memo: dict = {}
    total = 0.0
    for f in s1:
        if f.flips:
            total += f.weight
            continue
        total += f.weight * _rejection_fraction(f.frame_x, f.frame_z, 0, (), mode, memo)
    for g in ds:
        total += g.weight * _rejection_fraction(0, 0, g.flips, ((g.loc, g.x, g.z),), mode, memo)
    return total


def _rejection_fraction(fx, fz, ds_flips, ds_faults, mode, memo) -> float:
    """Pooled per-stream rejection probability of one accepted-stage-1 case."""
    key = ("rf", fx, fz, ds_flips, ds_faults, mode)
    hit = memo.get(key)
    if hit is not None:
        return hit
    p_red = reduce_frame(PauliOperator(15, fx, fz))
    if p_red.x == 0:
        flips = ds_flips ^ residual_z_flips(p_red.z)
        if _bit(flips, DS_VERIF) or any(
            _parity(flips, [DS_RO[q] for q in cell]) for cell in _CELL_SUPPORTS
        ):
            out = 1.0
        elif mode == "ps":
            rej = 0
            for recs in (DS_TX, DS_TY):
                syn = tuple(_parity(flips, [recs[i] for i in plaq]) for plaq in _PLAQUETTE_LOCAL)
                if any(syn):
                    rej += 1
            out = rej / 2.0
        else:
            out = 0.0
    else:
        out = _rejection_fraction_slow(p_red, ds_faults, mode)
    memo[key] = out
    return out


def _rejection_fraction_slow(p_red: PauliOperator, ds_faults: tuple, mode: str) -> float:
    """Monte-Carlo-free rejection probability with a phase pattern: branch weights."""
    cells, xbar, lx, ly, parities = _slow_observables()
    main = main_segment(p_red.x)
    n_main_locs = len(main.noise_locations)
    main_faults: dict = {}
    late_paulis = []
    for loc, x, z in ds_faults:
        if loc < n_main_locs:
            main_faults.setdefault(loc, []).append(PauliOperator(N_JOINT, x, z))
        else:
            late_paulis.append(PauliOperator(N_JOINT, x, z))
    total = 0.0
    for state in DECOMPOSITION_STATES:
        t = Tableau(N_JOINT)
        run_circuit(prep_segment(state), rng=None, tableau=t)
        t.apply_pauli(PauliOperator(N_JOINT, p_red.x, p_red.z))
        res = run_circuit(main, rng=None, faults=main_faults, tableau=t)
        if res.outcomes[0] == -1:
            total += 1.0
            continue
        for op in late_paulis:
            t.apply_pauli(op)
        p_keep = 1.0
        rejected = False
        for cell in cells:
            e = t.expectation(cell)
            if e == -1:
                rejected = True
                break
            if e == 0:
                p_keep *= 0.5
                t.measure(cell, forced=1)
        if rejected:
            total += 1.0
            continue
        rej_state = 1.0 - p_keep
        if mode == "ps":
            # tomography rejection probability per basis on the kept branch
            rej_tomo = 0.0
            for basis in ("x", "y"):
                p_pass = 1.0
                tt = t.copy()
                for obs in parities[basis]:
                    e = tt.expectation(obs)
                    if e == -1:
                        p_pass = 0.0
                        break
                    if e == 0:
                        p_pass *= 0.5
                        tt.measure(obs, forced=1)
                rej_tomo += (1.0 - p_pass) / 2.0
            rej_state += p_keep * rej_tomo
        total += rej_state
    return total / len(DECOMPOSITION_STATES)