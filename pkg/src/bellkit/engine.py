"""Measurement semantics and the deterministic shot engine.

Randomness contract
-------------------
Every shot draws from its own substream: shot i of a run with master seed s
uses ``numpy.random.Generator(PCG64(SeedSequence([s, i])))``.  The derivation
is platform-independent and independent of execution order, so shot-level
parallelism cannot change any outcome.  Within a shot, draws happen in
program order: one uniform for a random-sign preparation, then one uniform
per genuinely probabilistic measurement.  Measurements whose outcome
probability is 0 or 1 within EPS_DET take a deterministic branch and consume
no draw, so adding or removing them never perturbs downstream sampling.

The only operation required of a random stream is ``random() -> float``
uniform on [0, 1); an outcome with probability p is realized when the draw
is strictly below p.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Protocol, Union

import numpy as np

from .bell import EPS_SEP, BellDescriptor, bell_state, separability_defect
from .circuit import (
    ApplyBellOperator,
    ApplyNamed,
    ApplyRaw,
    BasisPreparation,
    BellPreparation,
    BellRandomSignPreparation,
    CircuitProgram,
    MeasureRelative,
    MeasureValue,
    RawPreparation,
)
from .core import (
    Particle,
    TwoQubitOperator,
    TwoQubitState,
    apply2,
    basis_state,
    bell_operator,
    lift_a,
    lift_b,
    named_operator,
    normalize,
    projector,
)

__all__ = [
    "EPS_DET",
    "RandomStream",
    "RelativeBit",
    "RelativeBitResult",
    "MeasurementRecord",
    "ShotResult",
    "ShotStatistics",
    "relative_bit",
    "measure_relative",
    "measure_value",
    "derive_rng",
    "run_shot",
    "run",
    "outcome_key",
]

EPS_DET = 1e-9  # outcome probabilities within this of 0 or 1 are deterministic

MAX_SEED = 2**64 - 1


class RandomStream(Protocol):
    def random(self) -> float: ...


class RelativeBit(enum.Enum):
    """Whether the two particles agree in value on the |00>/|11> diagonal."""

    SAME = "Same"
    DIFFERENT = "Different"


@dataclass(frozen=True)
class RelativeBitResult:
    """Outcome of the relative-value question.

    `bit` is None when the state has weight on both diagonals (indeterminate);
    `p_same` always carries |g00|^2 + |g11|^2.
    """

    bit: Optional[RelativeBit]
    p_same: float

    @property
    def determinate(self) -> bool:
        return self.bit is not None


@dataclass(frozen=True)
class MeasurementRecord:
    """One measurement event inside a shot.

    step_index is the 0-based position in the program's step list.
    projected_norm is the norm of the projected state before renormalization
    (1.0 on a deterministic relative branch, where the state is untouched).
    """

    step_index: int
    kind: str  # "relative" | "value"
    particle: Optional[Particle]
    outcome: Union[RelativeBit, int]
    probability: float
    projected_norm: float
    post_state: TwoQubitState


@dataclass(frozen=True)
class ShotResult:
    records: tuple[MeasurementRecord, ...]
    final_state: TwoQubitState


@dataclass(frozen=True)
class ShotStatistics:
    """Aggregated outcomes of a run; equality covers per-shot results too."""

    shots: int
    seed: int
    counts: dict[str, int]
    results: Optional[tuple[ShotResult, ...]] = None

    @property
    def frequencies(self) -> dict[str, float]:
        return {key: count / self.shots for key, count in self.counts.items()}

    def to_payload(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "counts": {key: self.counts[key] for key in sorted(self.counts)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_payload(), indent=2, sort_keys=True)


def relative_bit(s: TwoQubitState) -> RelativeBitResult:
    """Read the same/different bit without collapsing the state.

    Determinate iff the state lives on one diagonal: p_same within EPS_DET of
    1 gives SAME, of 0 gives DIFFERENT; anything else is indeterminate.
    """
    p_same = abs(s.g00) ** 2 + abs(s.g11) ** 2
    if p_same >= 1.0 - EPS_DET:
        return RelativeBitResult(RelativeBit.SAME, p_same)
    if p_same <= EPS_DET:
        return RelativeBitResult(RelativeBit.DIFFERENT, p_same)
    return RelativeBitResult(None, p_same)


def measure_relative(
    s: TwoQubitState, rng: RandomStream, step_index: int = 0
) -> tuple[MeasurementRecord, TwoQubitState]:
    """Measure the same/different bit, collapsing onto the realized diagonal.

    Deterministic inputs (one diagonal empty within EPS_DET) consume no draw
    and pass the state through unchanged.
    """
    p_same = abs(s.g00) ** 2 + abs(s.g11) ** 2
    p_diff = abs(s.g01) ** 2 + abs(s.g10) ** 2
    if p_same >= 1.0 - EPS_DET:
        outcome, post, probability, projected_norm = RelativeBit.SAME, s, 1.0, 1.0
    elif p_same <= EPS_DET:
        outcome, post, probability, projected_norm = RelativeBit.DIFFERENT, s, 1.0, 1.0
    elif rng.random() < p_same:
        outcome, probability = RelativeBit.SAME, p_same
        projected = TwoQubitState(s.g00, 0.0, 0.0, s.g11)
        projected_norm = projected.norm()
        post = normalize(projected)
    else:
        outcome, probability = RelativeBit.DIFFERENT, p_diff
        projected = TwoQubitState(0.0, s.g01, s.g10, 0.0)
        projected_norm = projected.norm()
        post = normalize(projected)
    record = MeasurementRecord(
        step_index=step_index,
        kind="relative",
        particle=None,
        outcome=outcome,
        probability=probability,
        projected_norm=projected_norm,
        post_state=post,
    )
    return record, post


def measure_value(
    s: TwoQubitState, particle: Particle, rng: RandomStream, step_index: int = 0
) -> tuple[MeasurementRecord, TwoQubitState]:
    """Projectively measure one particle's value (Born rule).

    Probabilities within EPS_DET of 0 or 1 take the deterministic branch and
    consume no draw.  The record keeps the projected state's norm before
    renormalization.  The post-state is always a product state: projection
    zeroes one row of the coefficient matrix, so the defect vanishes.
    """
    projected0 = apply2(projector(particle, 0), s)
    p0 = projected0.norm() ** 2
    deterministic = p0 >= 1.0 - EPS_DET or p0 <= EPS_DET
    if deterministic:
        outcome = 0 if p0 >= 1.0 - EPS_DET else 1
    else:
        outcome = 0 if rng.random() < p0 else 1
    projected = projected0 if outcome == 0 else apply2(projector(particle, 1), s)
    projected_norm = projected.norm()
    probability = 1.0 if deterministic else projected_norm**2
    post = normalize(projected)
    assert separability_defect(post) <= EPS_SEP
    record = MeasurementRecord(
        step_index=step_index,
        kind="value",
        particle=particle,
        outcome=outcome,
        probability=probability,
        projected_norm=projected_norm,
        post_state=post,
    )
    return record, post


def derive_rng(seed: int, shot_index: int) -> np.random.Generator:
    """The documented substream for one shot: PCG64(SeedSequence([seed, i]))."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, shot_index])))


def _prepare(program: CircuitProgram, rng: RandomStream) -> TwoQubitState:
    prep = program.preparation
    if isinstance(prep, BasisPreparation):
        return basis_state(prep.index)
    if isinstance(prep, BellPreparation):
        return bell_state(prep.descriptor)
    if isinstance(prep, BellRandomSignPreparation):
        sign = 1 if rng.random() < 0.5 else -1
        return bell_state(BellDescriptor(prep.bell_class, sign, prep.s0))
    if isinstance(prep, RawPreparation):
        return prep.state
    raise TypeError(f"unknown preparation {prep!r}")


def _lift_for(particle: Particle, op) -> TwoQubitOperator:
    return lift_a(op) if particle == "A" else lift_b(op)


def _compiled_steps(program: CircuitProgram) -> list[tuple]:
    """Resolve each step to an action tag plus a precomputed operator."""
    compiled: list[tuple] = []
    for index, step in enumerate(program.steps):
        if isinstance(step, ApplyNamed):
            compiled.append(("apply", _lift_for(step.particle, named_operator(step.name))))
        elif isinstance(step, ApplyBellOperator):
            compiled.append(("apply", bell_operator()))
        elif isinstance(step, ApplyRaw):
            compiled.append(("apply", _lift_for(step.particle, step.operator)))
        elif isinstance(step, MeasureRelative):
            compiled.append(("measure_relative", index))
        elif isinstance(step, MeasureValue):
            compiled.append(("measure_value", index, step.particle))
        else:
            raise TypeError(f"unknown step {step!r}")
    return compiled


def _execute(
    compiled: list[tuple], program: CircuitProgram, rng: RandomStream
) -> ShotResult:
    state = _prepare(program, rng)
    records: list[MeasurementRecord] = []
    for action in compiled:
        if action[0] == "apply":
            state = apply2(action[1], state)
        elif action[0] == "measure_relative":
            record, state = measure_relative(state, rng, step_index=action[1])
            records.append(record)
        else:
            record, state = measure_value(state, action[2], rng, step_index=action[1])
            records.append(record)
    return ShotResult(records=tuple(records), final_state=state)


def run_shot(program: CircuitProgram, rng: RandomStream) -> ShotResult:
    """Execute one shot: prepare, apply steps in order, record measurements."""
    return _execute(_compiled_steps(program), program, rng)


def outcome_key(records: tuple[MeasurementRecord, ...]) -> str:
    """Canonical counts key: comma-joined outcome tokens, or "none"."""
    if not records:
        return "none"
    tokens = []
    for r in records:
        if r.kind == "relative":
            assert isinstance(r.outcome, RelativeBit)
            tokens.append(f"rel={r.outcome.value}")
        else:
            tokens.append(f"{r.particle}={r.outcome}")
    return ",".join(tokens)


def _run_range(
    program: CircuitProgram, seed: int, start: int, stop: int, keep_results: bool
) -> tuple[int, dict[str, int], Optional[list[ShotResult]]]:
    compiled = _compiled_steps(program)
    counts: dict[str, int] = {}
    results: Optional[list[ShotResult]] = [] if keep_results else None
    for index in range(start, stop):
        shot = _execute(compiled, program, derive_rng(seed, index))
        key = outcome_key(shot.records)
        counts[key] = counts.get(key, 0) + 1
        if results is not None:
            results.append(shot)
    return start, counts, results


def run(
    program: CircuitProgram,
    shots: Optional[int] = None,
    seed: Optional[int] = None,
    *,
    keep_results: bool = False,
    workers: int = 1,
) -> ShotStatistics:
    """Run the program for `shots` independent shots and aggregate outcomes.

    shots/seed default to the program's own settings.  With workers > 1 the
    shot range is split into contiguous chunks executed in worker processes;
    because every shot's stream depends only on (seed, shot index), the
    aggregate is identical to the serial run.
    """
    shots = program.shots if shots is None else shots
    seed = program.seed if seed is None else seed
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    if not (0 <= seed <= MAX_SEED):
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    if workers == 1 or shots == 1:
        _, counts, results = _run_range(program, seed, 0, shots, keep_results)
        chunks = [(0, counts, results)]
    else:
        size = math.ceil(shots / workers)
        bounds = [(lo, min(lo + size, shots)) for lo in range(0, shots, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_range, program, seed, lo, hi, keep_results)
                for lo, hi in bounds
            ]
            chunks = sorted((f.result() for f in futures), key=lambda item: item[0])

    total_counts: dict[str, int] = {}
    merged: list[ShotResult] = []
    for _, chunk_counts, chunk_results in chunks:
        for key, value in chunk_counts.items():
            total_counts[key] = total_counts.get(key, 0) + value
        if keep_results and chunk_results is not None:
            merged.extend(chunk_results)
    return ShotStatistics(
        shots=shots,
        seed=seed,
        counts=total_counts,
        results=tuple(merged) if keep_results else None,
    )
