"""Reduced stochastic model of DAG-ledger tip dynamics.

Instead of tracking the full ledger graph, this model keeps four integer
counters per conflict type: cumulative created transactions, current tip
count, pending tips (selected by a not-yet-attached transaction), and free
tips.  A new transaction picks two parents uniformly at random with
replacement from the current tips, conditioned on both picks sharing a type;
the number of *distinct free* tips it covers drives all counter updates.
Each transaction attaches a fixed delay after its creation, and attach events
at the same instant are processed before creations so that every draw sees
left-limit counter values.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .arrivals import ArrivalProcess
from .trajectory import GridRecorder, TrajectoryFrame, make_grid


class ExtinctLedgerError(RuntimeError):
    """Raised when a transaction must be created but no type has any tips."""


def type_probabilities(tips) -> np.ndarray:
    """Probability that a new transaction extends each conflict type.

    Proportional to the squared tip count of the type: conditioning two
    independent uniform tip picks on landing in the same type weights a
    type by the square of its share of the tip population.
    """
    arr = np.asarray(tips, dtype=float)
    if arr.ndim != 1 or len(arr) == 0:
        raise ValueError("tips must be a non-empty 1-d array")
    if np.any(arr < 0):
        raise ValueError("tip counts must be non-negative")
    sq = arr * arr
    total = sq.sum()
    if total == 0:
        raise ExtinctLedgerError("every conflict type has zero tips")
    return sq / total


def sample_type(tips, rng: np.random.Generator) -> int:
    """Draw the conflict type extended by the next transaction (0-based).

    Consumes one uniform variate only when more than one type is live, so a
    single-type ledger uses the random stream exactly like an untyped model.
    """
    live = [i for i, l in enumerate(tips) if l > 0]
    if not live:
        raise ExtinctLedgerError("every conflict type has zero tips")
    if len(live) == 1:
        return live[0]
    weights = [float(tips[i]) ** 2 for i in live]
    r = rng.random() * sum(weights)
    acc = 0.0
    for i, w in zip(live, weights):
        acc += w
        if r <= acc:
            return i
    return live[-1]


def free_consumed_distribution(free, pending, tips):
    """Distribution of the number of distinct free tips a selection covers.

    Returns the probabilities of covering 0, 1 or 2 distinct free tips when
    two parents are drawn uniformly with replacement from ``tips`` tips of
    which ``free`` are free and ``pending`` already selected.  The arithmetic
    is generic: pass ``fractions.Fraction`` values to get exact results.
    """
    if tips != free + pending:
        raise ValueError("tips must equal free + pending")
    if tips <= 0:
        raise ValueError("a type with zero tips cannot be selected")
    if free < 0 or pending < 0:
        raise ValueError("counts must be non-negative")
    denom = tips * tips
    p0 = (pending * pending) / denom
    p1 = ((2 * pending + 1) * free) / denom
    p2 = (free * free - free) / denom
    return p0, p1, p2


def expected_free_consumed(free, tips):
    """Mean number of distinct free tips covered: 2*free/tips - free/tips**2."""
    return 2 * free / tips - free / (tips * tips)


def sample_free_consumed(free, pending, tips, rng: np.random.Generator) -> int:
    """Draw how many distinct free tips the next selection covers (0, 1 or 2)."""
    p0, p1, _ = free_consumed_distribution(free, pending, tips)
    r = rng.random()
    if r < p0:
        return 0
    if r < p0 + p1:
        return 1
    return 2


@dataclass(frozen=True)
class Injection:
    """A burst of forced-type transactions created at one instant."""

    time: float
    type_label: int
    count: int

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError("injection time must be non-negative")
        if self.type_label < 2:
            raise ValueError("injected conflict type must differ from type 1")
        if self.count < 1:
            raise ValueError("injection count must be at least 1")


class ReducedTangleSim:
    """Event-driven simulation of the per-type counter model.

    The ledger starts from a single attached free tip of type 1.  Honest
    transactions arrive via ``arrivals``; injections force their type but
    sample tip coverage against that type's counters like any creation.  The
    first injection of a type with no tips contributes one attached free tip
    immediately (the forced branch point), so the remaining burst members
    have a tip to select.
    """

    def __init__(
        self,
        arrivals: ArrivalProcess,
        delay: float,
        types: int = 1,
        injections: tuple[Injection, ...] = (),
        check_invariants: bool = False,
    ):
        if not delay > 0:
            raise ValueError("attach delay must be positive")
        if types < 1:
            raise ValueError("need at least one conflict type")
        for inj in injections:
            if inj.type_label > types:
                raise ValueError(
                    f"injection type {inj.type_label} exceeds declared types {types}"
                )
        self.arrivals = arrivals
        self.delay = delay
        self.types = types
        self.injections = tuple(sorted(injections, key=lambda i: i.time))
        self.check_invariants = check_invariants

    def run(
        self, horizon: float, rng: np.random.Generator, grid_dt: float = 0.5
    ) -> TrajectoryFrame:
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        d = self.types
        h = self.delay
        tips = [0.0] * d
        free = [0.0] * d
        pend = [0.0] * d
        created = [0] * d
        tips[0] = free[0] = 1.0
        created[0] = 1

        arrival_times = self.arrivals.times(horizon, rng)
        waiting: deque[tuple[float, int, int]] = deque()
        inj_list = list(self.injections)
        recorder = GridRecorder(make_grid(horizon, grid_dt), d)

        check = self.check_invariants

        def verify() -> None:
            for i in range(d):
                assert free[i] + pend[i] == tips[i], "free + pending != tips"
                assert free[i] >= 0 and pend[i] >= 0 and tips[i] >= 0

        def create(i: int, now: float) -> None:
            u = sample_free_consumed(free[i], pend[i], tips[i], rng)
            created[i] += 1
            free[i] -= u
            pend[i] += u
            waiting.append((now + h, i, u))
            if check:
                verify()

        ai = 0
        ii = 0
        n_arrivals = len(arrival_times)
        while True:
            t_arr = arrival_times[ai] if ai < n_arrivals else np.inf
            t_att = waiting[0][0] if waiting else np.inf
            t_inj = inj_list[ii].time if ii < len(inj_list) else np.inf
            t_next = min(t_arr, t_att, t_inj)
            if t_next > horizon or t_next == np.inf:
                break
            recorder.advance(t_next, tips, free, pend, created)
            # attach events take priority at equal times (left-limit rule),
            # then injections, then honest creations
            if t_att <= t_arr and t_att <= t_inj:
                _, i, u = waiting.popleft()
                tips[i] += 1 - u
                free[i] += 1
                pend[i] -= u
                if check:
                    verify()
            elif t_inj <= t_arr:
                inj = inj_list[ii]
                ii += 1
                i = inj.type_label - 1
                m = inj.count
                if tips[i] == 0:
                    # forced branch point: one attached free tip, no delay
                    created[i] += 1
                    tips[i] += 1
                    free[i] += 1
                    m -= 1
                for _ in range(m):
                    create(i, inj.time)
            else:
                ai += 1
                i = sample_type(tips, rng)
                create(i, t_arr)
        return recorder.finish(tips, free, pend, created)
