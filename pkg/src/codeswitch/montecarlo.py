"""Shot aggregation and estimation.

Sufficient statistics are per-(state, basis) acceptance and +1-outcome
counts; everything else (acceptance rate, Delta, infidelity, uncertainty) is
derived, so partial results merge exactly by summation.  The headline
acceptance rate pools the eight streams: at p = 0 it is exactly 1 and in
error-correct mode the two basis streams of one state coincide.

The fidelity estimate is F = 1/2 + Delta/8 with Delta the signed sum of the
eight per-state logical means; p_fail = 1 - F, and sigma_fail propagates the
per-stream sample variances (about 1/(4 sqrt(N_post)) at low noise, where
the cross-basis coin flips dominate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .noise import NoiseModel
from .protocol import DECOMPOSITION_SIGNS, DECOMPOSITION_STATES, ShotRecord

BASES = ("x", "y")
STREAMS = tuple((s, b) for s in DECOMPOSITION_STATES for b in BASES)


@dataclass
class SufficientStats:
    n_tot: int = 0
    n_stage1: int = 0
    n_teleport: dict = field(default_factory=lambda: {s: 0 for s in DECOMPOSITION_STATES})
    n_acc: dict = field(default_factory=lambda: {sb: 0 for sb in STREAMS})
    n_plus: dict = field(default_factory=lambda: {sb: 0 for sb in STREAMS})

    def merge(self, other: "SufficientStats") -> "SufficientStats":
        out = SufficientStats()
        out.n_tot = self.n_tot + other.n_tot
        out.n_stage1 = self.n_stage1 + other.n_stage1
        for s in DECOMPOSITION_STATES:
            out.n_teleport[s] = self.n_teleport[s] + other.n_teleport[s]
        for sb in STREAMS:
            out.n_acc[sb] = self.n_acc[sb] + other.n_acc[sb]
            out.n_plus[sb] = self.n_plus[sb] + other.n_plus[sb]
        return out

    def add_record(self, rec: ShotRecord):
        self.n_tot += 1
        if not rec.stage1_accepted:
            return
        self.n_stage1 += 1
        for s in DECOMPOSITION_STATES:
            out = rec.states[s]
            if not out.teleport_accepted:
                continue
            self.n_teleport[s] += 1
            if out.tomo_x_accepted:
                self.n_acc[(s, "x")] += 1
                if out.outcome_x == 1:
                    self.n_plus[(s, "x")] += 1
            if out.tomo_y_accepted:
                self.n_acc[(s, "y")] += 1
                if out.outcome_y == 1:
                    self.n_plus[(s, "y")] += 1


@dataclass
class SweepResult:
    p: float | tuple
    mode: str
    n_tot: int
    n_post: float
    p_accept: float
    p_reject: float
    delta: float | None
    p_fail: float | None
    sigma_fail: float | None
    seed: int
    table: dict            # (state, basis) -> {n, mean}
    stats: SufficientStats
    no_estimate: bool = False
    sigma_accept: float = 0.0

    @staticmethod
    def from_stats(stats: SufficientStats, p, mode: str, seed: int) -> "SweepResult":
        n_tot = stats.n_tot
        total_acc = sum(stats.n_acc.values())
        n_post = total_acc / len(STREAMS)
        p_accept = n_post / n_tot if n_tot else 0.0
        sigma_accept = (
            math.sqrt(max(p_accept * (1 - p_accept), 0.0) / (len(STREAMS) * n_tot)) if n_tot else 0.0
        )
        table = {}
        no_estimate = any(stats.n_acc[sb] == 0 for sb in STREAMS)
        delta = p_fail = sigma_fail = None
        if not no_estimate:
            var_sum = 0.0
            delta = 0.0
            for s, b in STREAMS:
                n = stats.n_acc[(s, b)]
                mean = (2 * stats.n_plus[(s, b)] - n) / n
                table[(s, b)] = {"n": n, "mean": mean}
                delta += DECOMPOSITION_SIGNS[s] * mean
                var_sum += max(1.0 - mean * mean, 0.0) / n
            p_fail = 1.0 - (0.5 + delta / 8.0)
            sigma_fail = math.sqrt(var_sum) / 8.0
        else:
            for s, b in STREAMS:
                n = stats.n_acc[(s, b)]
                table[(s, b)] = {"n": n, "mean": (2 * stats.n_plus[(s, b)] - n) / n if n else None}
        return SweepResult(
            p=p,
            mode=mode,
            n_tot=n_tot,
            n_post=n_post,
            p_accept=p_accept,
            p_reject=1.0 - p_accept,
            delta=delta,
            p_fail=p_fail,
            sigma_fail=sigma_fail,
            seed=seed,
            table=table,
            stats=stats,
            no_estimate=no_estimate,
            sigma_accept=sigma_accept,
        )

    @staticmethod
    def exact_noiseless(n_tot: int, p, mode: str, seed: int) -> "SweepResult":
        """Closed form for p = 0: every record accepted, Delta exactly 4."""
        stats = SufficientStats(n_tot=n_tot, n_stage1=n_tot)
        for s in DECOMPOSITION_STATES:
            stats.n_teleport[s] = n_tot
        ideal_mean = {}
        from .protocol import IDEAL_EXPECTATIONS

        for s, b in STREAMS:
            stats.n_acc[(s, b)] = n_tot
            m = IDEAL_EXPECTATIONS[s][0 if b == "x" else 1]
            ideal_mean[(s, b)] = m
            stats.n_plus[(s, b)] = round(n_tot * (1 + m) / 2)
        table = {sb: {"n": n_tot, "mean": float(ideal_mean[sb])} for sb in STREAMS}
        return SweepResult(
            p=p,
            mode=mode,
            n_tot=n_tot,
            n_post=float(n_tot),
            p_accept=1.0,
            p_reject=0.0,
            delta=4.0,
            p_fail=0.0,
            sigma_fail=0.0,
            seed=seed,
            table=table,
            stats=stats,
        )


def estimate(records, p, mode: str, seed: int = 0) -> SweepResult:
    """Aggregate an iterable of ShotRecord into a SweepResult."""
    stats = SufficientStats()
    for rec in records:
        stats.add_record(rec)
    return SweepResult.from_stats(stats, p, mode, seed)


def run_point(
    noise: NoiseModel,
    mode: str,
    shots: int,
    seed: int,
    reduce_frames: bool = True,
    tiebreak: str = "lex",
    workers: int = 1,
) -> SweepResult:
    """Monte Carlo estimate at one noise point (batched engine)."""
    from .batchsim import run_point_batched

    if noise.is_noiseless:
        p = noise.p if noise.kind == "uniform" else (noise.p_i, noise.p_m, noise.p_1, noise.p_2)
        return SweepResult.exact_noiseless(shots, p, mode, seed)
    return run_point_batched(
        noise, mode, shots, seed, reduce_frames=reduce_frames, tiebreak=tiebreak, workers=workers
    )


def run_sweep(config) -> list:
    """Sweep over the configured noise points; deterministic given the seed."""
    from .config import RunConfig

    if not isinstance(config, RunConfig):
        raise TypeError("run_sweep expects a RunConfig")
    results = []
    for noise in config.noise_points():
        p = noise.p if noise.kind == "uniform" else (noise.p_i, noise.p_m, noise.p_1, noise.p_2)
        res = run_point(
            noise,
            config.mode,
            config.shots,
            config.seed,
            reduce_frames=config.reduction_enabled,
            tiebreak=config.tiebreak,
            workers=config.workers,
        )
        res.p = p
        results.append(res)
    return results
