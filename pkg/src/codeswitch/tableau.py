"""Exact stabilizer-state simulator (stabilizer/destabilizer tableau).

Rows are signed Paulis stored as (x-mask, z-mask, phase exponent v) with the
convention of :mod:`codeswitch.pauli`.  Measurement of an arbitrary Hermitian
Pauli observable is first class: logical operators and plaquette parities are
measured directly, no ancilla bookkeeping.  A single instance is not
thread-safe; run independent copies across shots.
"""

from __future__ import annotations

from .pauli import (
    PauliError,
    PauliOperator,
    SignedPauli,
    conjugate_masks,
    conjugate_phase,
    phase_of_product,
)


class Tableau:
    """Pure stabilizer state on n qubits, initially |0...0>."""

    __slots__ = ("n", "xs", "zs", "vs")

    def __init__(self, n: int):
        if n < 1:
            raise PauliError(f"need n >= 1, got {n}")
        self.n = n
        # rows 0..n-1 destabilizers (X_i), rows n..2n-1 stabilizers (Z_i)
        self.xs = [1 << i for i in range(n)] + [0] * n
        self.zs = [0] * n + [1 << i for i in range(n)]
        self.vs = [0] * (2 * n)

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        t.xs = list(self.xs)
        t.zs = list(self.zs)
        t.vs = list(self.vs)
        return t

    # -- gates ------------------------------------------------------------

    def apply(self, gate: str, *qubits: int):
        for q in qubits:
            if not 0 <= q < self.n:
                raise PauliError(f"gate qubit {q} out of range for n={self.n}")
        xs, zs, vs = self.xs, self.zs, self.vs
        for i in range(2 * self.n):
            vs[i] = conjugate_phase(gate, qubits, xs[i], zs[i], vs[i])
            xs[i], zs[i] = conjugate_masks(gate, qubits, xs[i], zs[i])

    def apply_pauli(self, op: PauliOperator):
        """Multiply the state by a Pauli (sign-only row updates)."""
        if op.n != self.n:
            raise PauliError("Pauli size mismatch")
        xs, zs, vs = self.xs, self.zs, self.vs
        for i in range(2 * self.n):
            # P row P^dag = (-1)^{anticommute} row
            if ((xs[i] & op.z) ^ (zs[i] & op.x)).bit_count() & 1:
                vs[i] = (vs[i] + 2) % 4

    def prepare(self, basis: str, qubit: int, rng=None):
        """Reset one qubit to |0> (basis "z") or |+> (basis "x").

        Implemented as a measurement in the target basis followed by a
        corrective flip, so it is valid mid-circuit on entangled states.
        """
        if basis == "z":
            obs = SignedPauli(PauliOperator.single(self.n, "Z", qubit))
            flip = "x"
        elif basis == "x":
            obs = SignedPauli(PauliOperator.single(self.n, "X", qubit))
            flip = "z"
        else:
            raise PauliError(f"unknown preparation basis {basis!r}")
        outcome, _ = self.measure(obs, rng=rng, forced=None if rng is not None else 1)
        if outcome == -1:
            self.apply(flip, qubit)

    # -- measurement ------------------------------------------------------

    def _row_times(self, i: int, x: int, z: int, v: int):
        """rows[i] <- rows[i] * (x, z, v)."""
        xs, zs, vs = self.xs, self.zs, self.vs
        vs[i] = phase_of_product(xs[i], zs[i], vs[i], x, z, v)
        xs[i] ^= x
        zs[i] ^= z

    def measure(self, observable: SignedPauli, rng=None, forced: int | None = None):
        """Measure a Hermitian Pauli observable.

        Returns (outcome, deterministic).  Deterministic observables keep the
        state unchanged; random ones project it.  `forced` pins the outcome of
        a random measurement (used by branch-exploring fault analysis); it is
        ignored for deterministic measurements.
        """
        op = observable.op
        if op.n != self.n:
            raise PauliError("observable size mismatch")
        n = self.n
        xs, zs, vs = self.xs, self.zs, self.vs
        ox, oz, ov = op.x, op.z, observable.v

        pivot = -1
        for i in range(n, 2 * n):
            if ((xs[i] & oz) ^ (zs[i] & ox)).bit_count() & 1:
                pivot = i
                break
        if pivot < 0:
            # deterministic: O = +/- product of stabilizers selected by the
            # destabilizer pairing
            ax = az = av = 0
            for i in range(n):
                if ((xs[i] & oz) ^ (zs[i] & ox)).bit_count() & 1:
                    s = i + n
                    av = phase_of_product(ax, az, av, xs[s], zs[s], vs[s])
                    ax ^= xs[s]
                    az ^= zs[s]
            if ax != ox or az != oz:
                raise AssertionError("deterministic measurement reconstruction failed")
            outcome = 1 if av == ov else -1
            return outcome, True

        px, pz, pv = xs[pivot], zs[pivot], vs[pivot]
        for i in range(2 * n):
            if i != pivot and ((xs[i] & oz) ^ (zs[i] & ox)).bit_count() & 1:
                self._row_times(i, px, pz, pv)
        # destabilizer partner takes the old stabilizer row
        d = pivot - n
        xs[d], zs[d], vs[d] = px, pz, pv
        if forced is None:
            outcome = 1 if (rng.integers(0, 2) == 0) else -1
        else:
            outcome = forced
        xs[pivot], zs[pivot] = ox, oz
        vs[pivot] = ov if outcome == 1 else (ov + 2) % 4
        return outcome, False

    def expectation(self, observable: SignedPauli) -> int:
        """+1/-1 if the observable is deterministic, 0 if random; no change."""
        op = observable.op
        if op.n != self.n:
            raise PauliError("observable size mismatch")
        n = self.n
        xs, zs, vs = self.xs, self.zs, self.vs
        ox, oz, ov = op.x, op.z, observable.v
        for i in range(n, 2 * n):
            if ((xs[i] & oz) ^ (zs[i] & ox)).bit_count() & 1:
                return 0
        ax = az = av = 0
        for i in range(n):
            if ((xs[i] & oz) ^ (zs[i] & ox)).bit_count() & 1:
                s = i + n
                av = phase_of_product(ax, az, av, xs[s], zs[s], vs[s])
                ax ^= xs[s]
                az ^= zs[s]
        if ax != ox or az != oz:
            raise AssertionError("expectation reconstruction failed")
        return 1 if av == ov else -1

    # -- diagnostics --------------------------------------------------------

    def stabilizer_rows(self) -> list[SignedPauli]:
        return [
            SignedPauli.from_phase(PauliOperator(self.n, self.xs[i], self.zs[i]), self.vs[i])
            for i in range(self.n, 2 * self.n)
        ]

    def destabilizer_rows(self) -> list[SignedPauli]:
        return [
            SignedPauli.from_phase(PauliOperator(self.n, self.xs[i], self.zs[i]), self.vs[i])
            for i in range(self.n)
        ]

    def check_valid(self):
        """Assert the defining commutation structure of the tableau."""
        n = self.n
        for i in range(n):
            for j in range(n):
                si, sj = i + n, j + n
                anti_ss = ((self.xs[si] & self.zs[sj]) ^ (self.zs[si] & self.xs[sj])).bit_count() & 1
                if anti_ss:
                    raise AssertionError(f"stabilizer rows {i},{j} anticommute")
                anti_ds = ((self.xs[i] & self.zs[sj]) ^ (self.zs[i] & self.xs[sj])).bit_count() & 1
                if anti_ds != (1 if i == j else 0):
                    raise AssertionError(f"destabilizer {i} vs stabilizer {j} pairing broken")
