"""Circuit-level depolarizing noise model.

Placement semantics: preparations and gates are followed by their error,
measurements are preceded by theirs.  One-qubit gates draw from {X, Y, Z}
at p/3 each, two-qubit gates from the 15 non-identity pair Paulis at p/15
each.  Idling is not modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

# (x_control, z_control, x_target, z_target) for the 15 two-qubit Paulis,
# ordered IX, IY, IZ, XI, XX, ..., ZZ.
TWO_QUBIT_PAULIS = tuple(
    (a in (1, 3), a in (2, 3), b in (1, 3), b in (2, 3))
    for a in range(4)
    for b in range(4)
    if (a, b) != (0, 0)
)

ONE_QUBIT_PAULIS = ((True, False), (True, True), (False, True))  # X, Y, Z


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "uniform"  # "uniform" | "multiparameter"
    p: float = 0.0
    p_i: float = 0.0
    p_m: float = 0.0
    p_1: float = 0.0
    p_2: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "multiparameter"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "uniform":
            object.__setattr__(self, "p_i", self.p)
            object.__setattr__(self, "p_m", self.p)
            object.__setattr__(self, "p_1", self.p)
            object.__setattr__(self, "p_2", self.p)
        for name in ("p", "p_i", "p_m", "p_1", "p_2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @staticmethod
    def uniform(p: float) -> "NoiseModel":
        return NoiseModel(kind="uniform", p=p)

    @staticmethod
    def multiparameter(p_i: float, p_m: float, p_1: float, p_2: float) -> "NoiseModel":
        return NoiseModel(kind="multiparameter", p_i=p_i, p_m=p_m, p_1=p_1, p_2=p_2)

    @property
    def is_noiseless(self) -> bool:
        return self.p_i == self.p_m == self.p_1 == self.p_2 == 0.0

    def strength(self, location_kind: str) -> float:
        """Error probability for one noise-location kind."""
        if location_kind in ("prep_z", "prep_x"):
            return self.p_i
        if location_kind in ("mz", "mx"):
            return self.p_m
        if location_kind == "gate1":
            return self.p_1
        if location_kind == "gate2":
            return self.p_2
        raise ValueError(f"unknown location kind {location_kind!r}")

    def describe(self) -> str:
        if self.kind == "uniform":
            return f"uniform p={self.p:g}"
        return f"multiparameter p_i={self.p_i:g} p_m={self.p_m:g} p_1={self.p_1:g} p_2={self.p_2:g}"
