"""Minimum-weight reduction of the stage-1 Pauli frame and its Clifford form.

A sampled frame is only defined up to the stabilizer group of the encoded
|+> state (code stabilizers plus the logical X).  Conjugation through the
transversal T-layer turns X-components into S/S-dagger gates, so two
equivalent frames can behave very differently downstream: a frame equal to a
stabilizer element must be replaced by the identity before conversion, or the
phase gates it generates corrupt the estimate.  Reduction therefore picks the
minimum-weight representative of the coset frame * <stabilizers, logical X>.

The search scans all 2^5 X-combinations x 2^10 Z-combinations with a
popcount-vectorized weight; results are memoized since few distinct frames
occur at realistic noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import build_qrm
from .pauli import PauliError, PauliOperator

TIEBREAKS = ("lex", "revlex")


@dataclass(frozen=True)
class CliffordFrame:
    """Image of a Pauli frame under the transversal T-layer.

    `s_pattern` marks qubits receiving a phase gate (S on odd-labeled,
    S-dagger on even-labeled qubits); it equals the x-mask of the reduced
    frame.  Application order downstream: `residual` first, then the phase
    layer.
    """

    s_pattern: int
    residual: PauliOperator


class FrameReducer:
    def __init__(self, tiebreak: str = "lex"):
        if tiebreak not in TIEBREAKS:
            raise PauliError(f"unknown tiebreak {tiebreak!r}")
        self.tiebreak = tiebreak
        code = build_qrm()
        self.n = code.n
        xgens = [s.x for s in code.x_stabilizers] + [code.logical_x.x]
        zgens = [s.z for s in code.z_stabilizers_independent()]
        self._x_combos = _subset_xors(xgens)           # (32,)  uint32
        self._z_combos = _subset_xors(zgens)           # (1024,) uint32
        self._memo: dict = {}

    def reduce(self, p: PauliOperator) -> PauliOperator:
        if p.n != self.n:
            raise PauliError(f"frame must be on {self.n} qubits")
        key = (p.x, p.z)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        cx = np.bitwise_xor(np.uint32(p.x), self._x_combos)[:, None]   # (32, 1)
        cz = np.bitwise_xor(np.uint32(p.z), self._z_combos)[None, :]   # (1, 1024)
        w = np.bitwise_count(np.bitwise_or(cx, cz))
        wmin = int(w.min())
        ii, jj = np.nonzero(w == wmin)
        cand_x = np.bitwise_xor(np.uint32(p.x), self._x_combos[ii])
        cand_z = np.bitwise_xor(np.uint32(p.z), self._z_combos[jj])
        pairs = sorted(zip(cand_x.tolist(), cand_z.tolist()))
        bx, bz = pairs[0] if self.tiebreak == "lex" else pairs[-1]
        out = PauliOperator(self.n, bx, bz)
        self._memo[key] = out
        return out


def _subset_xors(gens) -> np.ndarray:
    """combination k = XOR of the generators whose bits are set in k."""
    out = np.zeros(1 << len(gens), dtype=np.uint32)
    for k in range(1, len(out)):
        low = k & (-k)
        out[k] = out[k ^ low] ^ np.uint32(gens[low.bit_length() - 1])
    return out


_default_reducers: dict = {}


def reduce_frame(p: PauliOperator, tiebreak: str = "lex") -> PauliOperator:
    """Minimum-weight representative of p * <qRM stabilizers, logical X>."""
    r = _default_reducers.get(tiebreak)
    if r is None:
        r = _default_reducers[tiebreak] = FrameReducer(tiebreak)
    return r.reduce(p)


def to_clifford_frame(p_reduced: PauliOperator) -> CliffordFrame:
    """Clifford error frame of a (reduced) 15-qubit Pauli frame."""
    if p_reduced.n != 15:
        raise PauliError("Clifford frame is defined on the 15-qubit block")
    return CliffordFrame(s_pattern=p_reduced.x, residual=p_reduced)


def s_layer_gates(s_pattern: int) -> tuple:
    """Phase-gate layer of a Clifford frame: S on odd labels, S-dagger on even."""
    gates = []
    for q in range(15):
        if (s_pattern >> q) & 1:
            gates.append(("s" if (q + 1) % 2 == 1 else "sdg", q))
    return tuple(gates)
