"""Bit-packed batched sampler behind `montecarlo.run_point`.

Shots occupy the bit dimension of uint64 planes.  Stage 1 is a plain Pauli
frame pass (all reference measurements are deterministic).  The downstream
stage is also frame-based, against a per-(state, phase-pattern) reference
sample: preparations seed fresh random conjugate-frame bits, so random
reference measurements (the individual X readings, the cross-basis
tomography) come out with the exact joint distribution.  Equivalence with
the per-shot tableau path is property-tested.

Randomness is counter-based: every (site, shot) pair maps to a fixed Philox
draw, keyed by (seed, namespace, site) and offset by the global shot index,
so chunking, shot order and worker count never change any outcome.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuits import Circuit
from .montecarlo import SufficientStats, SweepResult
from .noise import NoiseModel
from .pauli import PauliOperator, SignedPauli
from .protocol import (
    DECOMPOSITION_STATES,
    N_JOINT,
    QRM_BLOCK,
    STEANE_BLOCK,
    _CELL_SUPPORTS,
    _LOGICAL_LOCAL,
    _PLAQUETTE_LOCAL,
    _XBAR_SUPPORT,
    main_segment,
    prep_segment,
    readout_segment,
    tomo_segment,
)
from .reduction import FrameReducer
from .simrun import run_circuit
from .tableau import Tableau

CHUNK = 1 << 16
WORDS = CHUNK >> 6
_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)

TWOQ = np.array(
    [
        (a in (1, 3), a in (2, 3), b in (1, 3), b in (2, 3))
        for a in range(4)
        for b in range(4)
        if (a, b) != (0, 0)
    ],
    dtype=bool,
)


def _philox(seed: int, namespace: str, site: int, offset_draws: int = 0):
    digest = hashlib.blake2b(f"{seed}:{namespace}:{site}".encode(), digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    bg = np.random.Philox(key=key)
    if offset_draws:
        if offset_draws % 4:
            raise ValueError("draw offsets must be multiples of 4")
        bg.advance(offset_draws // 4)
    return np.random.Generator(bg)


def site_uniforms(seed: int, namespace: str, site: int, shot_offset: int, count: int) -> np.ndarray:
    return _philox(seed, namespace, site, shot_offset).random(count)


def site_words(seed: int, namespace: str, site: int, word_offset: int, n_words: int) -> np.ndarray:
    g = _philox(seed, namespace, site, word_offset)
    return g.integers(0, 1 << 64, size=n_words, dtype=np.uint64)


def pack_bool(bits: np.ndarray) -> np.ndarray:
    n_words = (len(bits) + 63) >> 6
    u8 = np.packbits(bits, bitorder="little")
    buf = np.zeros(n_words * 8, dtype=np.uint8)
    buf[: len(u8)] = u8
    return buf.view(np.uint64)


def unpack_words(words: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), count=n, bitorder="little").astype(bool)


def tail_mask(n: int) -> np.ndarray:
    n_words = (n + 63) >> 6
    m = np.full(n_words, _ALL_ONES, dtype=np.uint64)
    rem = n & 63
    if rem:
        m[-1] = np.uint64((1 << rem) - 1)
    return m


def popcount(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


# -- compiled programs -------------------------------------------------------
#
# op tuples:
#   ("prep", q, basis, noise_site | -1, seed_site | -1)
#   ("cx", c, t, noise_site | -1)
#   ("g1", kind, q, noise_site | -1)        kind in h/s/sdg (mask action only)
#   ("n1", q, noise_site)                   bare one-qubit depolarizing site
#   ("meas", q, basis, record_index, noise_site | -1)


@dataclass
class Program:
    n_qubits: int
    ops: list
    n_records: int
    n_noise_sites: int
    n_seed_sites: int
    site_kinds: list  # noise-site kind strings, in site order


def _compile(circuits, seed_preps: bool) -> Program:
    ops = []
    n_noise = 0
    n_seed = 0
    n_rec = 0
    kinds = []
    nq = circuits[0].n_qubits
    for circ in circuits:
        for ins in circ.instructions:
            k = ins.kind
            if k in ("prep_z", "prep_x"):
                site = -1
                if ins.noisy:
                    site = n_noise
                    kinds.append(k)
                    n_noise += 1
                seed = -1
                if seed_preps:
                    seed = n_seed
                    n_seed += 1
                ops.append(("prep", ins.qubits[0], k[-1], site, seed))
            elif k == "cx":
                site = -1
                if ins.noisy:
                    site = n_noise
                    kinds.append("gate2")
                    n_noise += 1
                ops.append(("cx", ins.qubits[0], ins.qubits[1], site))
            elif k in ("h", "s", "sdg"):
                site = -1
                if ins.noisy:
                    site = n_noise
                    kinds.append("gate1")
                    n_noise += 1
                ops.append(("g1", k, ins.qubits[0], site))
            elif k in ("x", "y", "z"):
                if ins.noisy:
                    ops.append(("n1", ins.qubits[0], n_noise))
                    kinds.append("gate1")
                    n_noise += 1
            elif k == "noise1":
                if ins.noisy:
                    ops.append(("n1", ins.qubits[0], n_noise))
                    kinds.append("gate1")
                    n_noise += 1
            elif k in ("mz", "mx", "my"):
                site = -1
                if ins.noisy:
                    site = n_noise
                    kinds.append("mz" if k == "mz" else "mx")
                    n_noise += 1
                ops.append(("meas", ins.qubits[0], k[1], n_rec, site))
                n_rec += 1
            else:
                raise ValueError(f"cannot compile instruction kind {k!r}")
    return Program(nq, ops, n_rec, n_noise, n_seed, kinds)


@lru_cache(maxsize=None)
def stage1_program() -> Program:
    from .circuits import stage1_circuit
    from .frames import check_deterministic_reference

    circ = stage1_circuit()
    outs = check_deterministic_reference(circ)
    if any(o != 1 for o in outs):
        raise AssertionError("stage-1 reference outcomes must all be +1")
    return _compile([circ], seed_preps=False)


@lru_cache(maxsize=None)
def downstream_program(state: str, s_pattern: int) -> Program:
    return _compile(
        [prep_segment(state), main_segment(s_pattern), readout_segment()], seed_preps=True
    )


@lru_cache(maxsize=None)
def prep_op_count(state: str) -> int:
    """Op index of the Clifford-frame insertion point (end of the prep part)."""
    return len(_compile([prep_segment(state)], seed_preps=True).ops)


# record layout of the downstream program: verif, 15 readout
REC_VERIF = 0
REC_RO = tuple(range(1, 16))


@dataclass
class Reference:
    verif: int
    ro: tuple
    tomo_x: tuple
    tomo_y: tuple


@lru_cache(maxsize=None)
def downstream_reference(seed: int, state: str, s_pattern: int) -> Reference:
    """One consistent noiseless sample of the downstream reference circuit."""
    rng = _philox(seed, f"ref:{state}", s_pattern)
    t = Tableau(N_JOINT)
    run_circuit(prep_segment(state), rng=None, tableau=t)
    res = run_circuit(main_segment(s_pattern), rng=rng, tableau=t)
    if res.outcomes[0] != 1:
        raise AssertionError("reference Steane verification must be +1")
    ro = run_circuit(readout_segment(), rng=rng, tableau=t)
    tx = run_circuit(tomo_segment("x"), rng=rng, tableau=t.copy())
    ty = run_circuit(tomo_segment("y"), rng=rng, tableau=t.copy())
    bit = lambda o: 0 if o == 1 else 1
    return Reference(
        verif=bit(res.outcomes[0]),
        ro=tuple(bit(o) for o in ro.outcomes),
        tomo_x=tuple(bit(o) for o in tx.outcomes),
        tomo_y=tuple(bit(o) for o in ty.outcomes),
    )


# -- frame-plane execution ---------------------------------------------------


class PlaneState:
    def __init__(self, n_qubits: int, n_words: int):
        self.x = np.zeros((n_qubits, n_words), dtype=np.uint64)
        self.z = np.zeros((n_qubits, n_words), dtype=np.uint64)
        self.w = n_words


def _apply_noise(planes: PlaneState, kind: str, qubits, u: np.ndarray, p: float):
    if p <= 0.0:
        return
    hit = u < p
    if not hit.any():
        return
    if kind in ("prep_z", "mz"):
        planes.x[qubits[0]] ^= pack_bool(hit)
    elif kind in ("prep_x", "mx"):
        planes.z[qubits[0]] ^= pack_bool(hit)
    elif kind == "gate1":
        t = np.minimum((u[hit] * (3.0 / p)).astype(np.int64), 2)
        q = qubits[0]
        xb = np.zeros(len(u), dtype=bool)
        zb = np.zeros(len(u), dtype=bool)
        xb[hit] = t <= 1
        zb[hit] = t >= 1
        planes.x[q] ^= pack_bool(xb)
        planes.z[q] ^= pack_bool(zb)
    elif kind == "gate2":
        t = np.minimum((u[hit] * (15.0 / p)).astype(np.int64), 14)
        c, tq = qubits
        sel = TWOQ[t]
        for col, (q, plane) in enumerate(((c, planes.x), (c, planes.z), (tq, planes.x), (tq, planes.z))):
            bits = np.zeros(len(u), dtype=bool)
            bits[hit] = sel[:, col]
            if bits.any():
                plane[q] ^= pack_bool(bits)
    else:
        raise ValueError(f"unknown site kind {kind!r}")


def _run_program(
    program: Program,
    planes: PlaneState,
    noise: NoiseModel,
    noise_u: list,
    seed_words: list,
    residual_at: tuple | None = None,
):
    """Execute a compiled program on frame planes.

    `noise_u` / `seed_words` are per-site arrays already sliced to this batch.
    `residual_at` = (op_index, x_planes, z_planes) XORs a per-shot Pauli in
    before the op at op_index (the Clifford-frame insertion point).
    Returns the list of record flip planes.
    """
    x, z = planes.x, planes.z
    records = [None] * program.n_records
    for i, op in enumerate(program.ops):
        if residual_at is not None and i == residual_at[0]:
            rx, rz = residual_at[1], residual_at[2]
            for q in range(rx.shape[0]):
                x[q] ^= rx[q]
                z[q] ^= rz[q]
        k = op[0]
        if k == "prep":
            _, q, basis, site, seed = op
            x[q][:] = 0
            z[q][:] = 0
            if seed >= 0:
                if basis == "z":
                    z[q] ^= seed_words[seed]
                else:
                    x[q] ^= seed_words[seed]
            if site >= 0:
                _apply_noise(planes, program.site_kinds[site], (q,), noise_u[site], noise.strength(program.site_kinds[site]))
        elif k == "cx":
            _, c, t, site = op
            x[t] ^= x[c]
            z[c] ^= z[t]
            if site >= 0:
                _apply_noise(planes, "gate2", (c, t), noise_u[site], noise.p_2)
        elif k == "g1":
            _, kind, q, site = op
            if kind == "h":
                x[q], z[q] = z[q].copy(), x[q].copy()
            else:  # s, sdg
                z[q] ^= x[q]
            if site >= 0:
                _apply_noise(planes, "gate1", (q,), noise_u[site], noise.p_1)
        elif k == "n1":
            _, q, site = op
            _apply_noise(planes, "gate1", (q,), noise_u[site], noise.p_1)
        elif k == "meas":
            _, q, basis, rec, site = op
            if site >= 0:
                kind = program.site_kinds[site]
                _apply_noise(planes, kind, (q,), noise_u[site], noise.strength(kind))
            if basis == "z":
                records[rec] = x[q].copy()
            elif basis == "x":
                records[rec] = z[q].copy()
            else:
                records[rec] = x[q] ^ z[q]
        else:
            raise ValueError(f"bad op {op!r}")
    return records


def _const_plane(bit: int, n_words: int) -> np.ndarray:
    return np.full(n_words, _ALL_ONES if bit else np.uint64(0), dtype=np.uint64)


# -- stage 1 over one chunk --------------------------------------------------


def stage1_chunk(noise: NoiseModel, seed: int, shot_offset: int, n_shots: int):
    """Returns (accepted_count, frames_x, frames_z, accepted_positions)."""
    prog = stage1_program()
    n_words = (n_shots + 63) >> 6
    planes = PlaneState(prog.n_qubits, n_words)
    noise_u = [
        site_uniforms(seed, "s1", s, shot_offset, n_shots) for s in range(prog.n_noise_sites)
    ]
    records = _run_program(prog, planes, noise, noise_u, [])
    bad = np.zeros(n_words, dtype=np.uint64)
    for r in records:
        bad |= r
    acc_words = ~bad & tail_mask(n_shots)
    acc_bool = unpack_words(acc_words, n_shots)
    pos = np.nonzero(acc_bool)[0]
    fx = np.zeros(len(pos), dtype=np.uint32)
    fz = np.zeros(len(pos), dtype=np.uint32)
    for q in range(15):
        xb = unpack_words(planes.x[q], n_shots)[pos]
        zb = unpack_words(planes.z[q], n_shots)[pos]
        fx |= xb.astype(np.uint32) << np.uint32(q)
        fz |= zb.astype(np.uint32) << np.uint32(q)
    return fx, fz, pos


def reduce_masks(fx: np.ndarray, fz: np.ndarray, reducer: FrameReducer):
    """Vectorized reduction through the memoized reducer (unique keys only)."""
    keys = fx.astype(np.uint64) << np.uint64(15) | fz.astype(np.uint64)
    uniq, inv = np.unique(keys, return_inverse=True)
    rx = np.zeros(len(uniq), dtype=np.uint32)
    rz = np.zeros(len(uniq), dtype=np.uint32)
    for i, k in enumerate(uniq.tolist()):
        red = reducer.reduce(PauliOperator(15, int(k) >> 15, int(k) & 0x7FFF))
        rx[i] = red.x
        rz[i] = red.z
    return rx[inv], rz[inv]


# -- downstream over one chunk -----------------------------------------------


_PLAQ_GLOBAL = _PLAQUETTE_LOCAL
_STEANE_Y_SIGN_BIT = None


def _y_sign_bit() -> int:
    global _STEANE_Y_SIGN_BIT
    if _STEANE_Y_SIGN_BIT is None:
        from .codes import build_steane

        _STEANE_Y_SIGN_BIT = 0 if build_steane().logical_y().sign == 1 else 1
    return _STEANE_Y_SIGN_BIT


def downstream_chunk_state(
    state: str,
    mode: str,
    noise: NoiseModel,
    seed: int,
    shot_offset: int,
    n_shots: int,
    pos: np.ndarray,
    red_x: np.ndarray,
    red_z: np.ndarray,
    stats: SufficientStats,
):
    """Process all accepted shots of one chunk for one decomposition state."""
    prog0 = downstream_program(state, 0)
    ns = f"ds:{state}"
    seed_ns = f"sd:{state}"
    noise_full = [
        site_uniforms(seed, ns, s, shot_offset, n_shots) for s in range(prog0.n_noise_sites)
    ]
    word_offset = shot_offset >> 6
    seed_full = [
        unpack_words(site_words(seed, seed_ns, s, word_offset, (n_shots + 63) >> 6), n_shots)
        for s in range(prog0.n_seed_sites)
    ]

    patterns = np.unique(red_x)
    for pattern in patterns.tolist():
        sel = red_x == pattern
        gpos = pos[sel]
        gz = red_z[sel]
        n_g = len(gpos)
        n_words = (n_g + 63) >> 6
        prog = downstream_program(state, int(pattern))
        ref = downstream_reference(seed, state, int(pattern))

        noise_u = [u[gpos] for u in noise_full]
        seed_words = [pack_bool(sb[gpos]) for sb in seed_full]

        # per-shot residual Pauli planes on the qRM block
        res_x = np.zeros((15, n_words), dtype=np.uint64)
        res_z = np.zeros((15, n_words), dtype=np.uint64)
        for q in range(15):
            if (pattern >> q) & 1:
                res_x[q] = _ALL_ONES
            zb = (gz >> np.uint32(q)) & np.uint32(1)
            if zb.any():
                res_z[q] = pack_bool(zb.astype(bool))
        planes = PlaneState(prog.n_qubits, n_words)
        n_prep_ops = prep_op_count(state)
        records = _run_program(
            prog, planes, noise, noise_u, seed_words, residual_at=(n_prep_ops, res_x, res_z)
        )
        tomo_x_flips = [planes.z[q].copy() for q in STEANE_BLOCK]
        tomo_y_flips = [planes.x[q] ^ planes.z[q] for q in STEANE_BLOCK]

        tm = tail_mask(n_g)
        ok = tm & ~(records[REC_VERIF] ^ _const_plane(ref.verif, n_words))
        for cell in _CELL_SUPPORTS:
            plane = _const_plane(sum(ref.ro[q] for q in cell) & 1, n_words)
            for q in cell:
                plane = plane ^ records[REC_RO[q]]
            ok &= ~plane
        b_plane = _const_plane(sum(ref.ro[q] for q in _XBAR_SUPPORT) & 1, n_words)
        for q in _XBAR_SUPPORT:
            b_plane = b_plane ^ records[REC_RO[q]]

        stats.n_teleport[state] += popcount(ok)

        for basis, flips, refbits in (
            ("x", tomo_x_flips, ref.tomo_x),
            ("y", tomo_y_flips, ref.tomo_y),
        ):
            syn = []
            for plaq in _PLAQ_GLOBAL:
                plane = _const_plane(sum(refbits[i] for i in plaq) & 1, n_words)
                for i in plaq:
                    plane = plane ^ flips[i]
                syn.append(plane)
            raw = _const_plane(sum(refbits[i] for i in _LOGICAL_LOCAL) & 1, n_words)
            for i in _LOGICAL_LOCAL:
                raw = raw ^ flips[i]
            out = raw ^ b_plane
            if basis == "y" and _y_sign_bit():
                out = ~out
            if mode == "ec":
                out = out ^ ((syn[0] | syn[1]) & ~syn[2])
                acc = ok
            else:
                acc = ok & ~(syn[0] | syn[1] | syn[2])
            stats.n_acc[(state, basis)] += popcount(acc)
            stats.n_plus[(state, basis)] += popcount(acc & ~out & tm)


def run_chunk(
    noise: NoiseModel,
    mode: str,
    seed: int,
    shot_offset: int,
    n_shots: int,
    reduce_frames: bool,
    tiebreak: str,
    reducer: FrameReducer,
) -> SufficientStats:
    stats = SufficientStats(n_tot=n_shots)
    fx, fz, pos = stage1_chunk(noise, seed, shot_offset, n_shots)
    stats.n_stage1 = len(pos)
    if len(pos) == 0:
        return stats
    if reduce_frames:
        red_x, red_z = reduce_masks(fx, fz, reducer)
    else:
        red_x, red_z = fx, fz
    for state in DECOMPOSITION_STATES:
        downstream_chunk_state(
            state, mode, noise, seed, shot_offset, n_shots, pos, red_x, red_z, stats
        )
    return stats


def _chunk_args(noise, mode, seed, shots, reduce_frames, tiebreak):
    offset = 0
    while offset < shots:
        n = min(CHUNK, shots - offset)
        yield (noise, mode, seed, offset, n, reduce_frames, tiebreak)
        offset += CHUNK


def _run_chunk_star(args):
    noise, mode, seed, offset, n, reduce_frames, tiebreak = args
    return run_chunk(noise, mode, seed, offset, n, reduce_frames, tiebreak, FrameReducer(tiebreak))


def run_point_batched(
    noise: NoiseModel,
    mode: str,
    shots: int,
    seed: int,
    reduce_frames: bool = True,
    tiebreak: str = "lex",
    workers: int = 1,
) -> SweepResult:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    total = SufficientStats()
    if workers <= 1:
        reducer = FrameReducer(tiebreak)
        for args in _chunk_args(noise, mode, seed, shots, reduce_frames, tiebreak):
            total = total.merge(run_chunk(*args[:5], reduce_frames, tiebreak, reducer))
    else:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(workers) as pool:
            for part in pool.imap(
                _run_chunk_star, _chunk_args(noise, mode, seed, shots, reduce_frames, tiebreak)
            ):
                total = total.merge(part)
    p = noise.p if noise.kind == "uniform" else (noise.p_i, noise.p_m, noise.p_1, noise.p_2)
    return SweepResult.from_stats(total, p, mode, seed)
