"""Agent-based DAG-ledger simulator.

Every transaction is an explicit site with two parent references, a conflict
type, and a fixed creation-to-attach delay.  Tips are attached sites without
attached children; a tip selected by a not-yet-attached transaction counts as
pending (but stays selectable) until that transaction attaches.  This is the
ground-truth model the per-type counter simulation is validated against.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .arrivals import ArrivalProcess
from .reduced import ExtinctLedgerError, Injection
from .trajectory import GridRecorder, TrajectoryFrame, make_grid


@dataclass(frozen=True, slots=True)
class Site:
    """One ledger transaction."""

    id: int
    created_at: float
    attached_at: float
    parents: tuple[int, int] | None  # None only for genesis
    type_label: int  # 1-based


class _IndexedSet:
    """Set with O(1) add/discard and O(1) uniform indexing."""

    __slots__ = ("items", "pos")

    def __init__(self) -> None:
        self.items: list[int] = []
        self.pos: dict[int, int] = {}

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: int) -> bool:
        return item in self.pos

    def __getitem__(self, k: int) -> int:
        return self.items[k]

    def add(self, item: int) -> None:
        if item not in self.pos:
            self.pos[item] = len(self.items)
            self.items.append(item)

    def discard(self, item: int) -> bool:
        k = self.pos.pop(item, None)
        if k is None:
            return False
        last = self.items.pop()
        if last != item:
            self.items[k] = last
            self.pos[last] = k
        return True


class AgentTangle:
    """Mutable DAG state: sites, per-type tip sets, pending-selection marks."""

    def __init__(self, types: int, delay: float):
        if types < 1:
            raise ValueError("need at least one conflict type")
        if not delay > 0:
            raise ValueError("attach delay must be positive")
        self.d = types
        self.delay = delay
        self.sites: list[Site] = []
        self.attached: list[bool] = []
        self.children: list[list[int]] = []
        self.tips: list[_IndexedSet] = [_IndexedSet() for _ in range(types)]
        # outstanding selections per tip id; a tip with a mark is pending
        self.pending_marks: dict[int, int] = {}
        self.seed_ids: set[int] = set()
        self.tip_count = [0] * types
        self.pending_count = [0] * types
        self.created = [0] * types
        genesis = Site(0, 0.0, 0.0, None, 1)
        self._register(genesis)
        self.attached[0] = True
        self.tips[0].add(0)
        self.tip_count[0] = 1
        self.created[0] = 1

    # -- bookkeeping ------------------------------------------------------

    def _register(self, site: Site) -> None:
        assert site.id == len(self.sites)
        self.sites.append(site)
        self.attached.append(False)
        self.children.append([])

    def free_count(self, i: int) -> int:
        return self.tip_count[i] - self.pending_count[i]

    @property
    def free_counts(self) -> list[int]:
        return [self.tip_count[i] - self.pending_count[i] for i in range(self.d)]

    def _mark_pending(self, tip_id: int) -> None:
        c = self.pending_marks.get(tip_id, 0)
        self.pending_marks[tip_id] = c + 1
        if c == 0:
            self.pending_count[self.sites[tip_id].type_label - 1] += 1

    def _unmark_pending(self, tip_id: int) -> None:
        c = self.pending_marks[tip_id] - 1
        if c:
            self.pending_marks[tip_id] = c
        else:
            del self.pending_marks[tip_id]
            i = self.sites[tip_id].type_label - 1
            if tip_id in self.tips[i]:
                self.pending_count[i] -= 1

    def _drop_tip(self, tip_id: int) -> None:
        i = self.sites[tip_id].type_label - 1
        if self.tips[i].discard(tip_id):
            self.tip_count[i] -= 1
            if self.pending_marks.get(tip_id, 0):
                self.pending_count[i] -= 1

    # -- tip selection ----------------------------------------------------

    def _draw_tip(self, rng: np.random.Generator) -> int:
        total = sum(self.tip_count)
        if total == 0:
            raise ExtinctLedgerError("no tips anywhere in the ledger")
        k = int(rng.integers(total))
        for bucket in self.tips:
            n = len(bucket)
            if k < n:
                return bucket[k]
            k -= n
        raise AssertionError("unreachable")

    def select_tips(self, rng: np.random.Generator) -> tuple[int, int]:
        """Two uniform with-replacement tip draws, redrawn until types match."""
        while True:
            a = self._draw_tip(rng)
            b = self._draw_tip(rng)
            if self.sites[a].type_label == self.sites[b].type_label:
                return a, b

    # -- operations -------------------------------------------------------

    def create_transaction(self, t: float, rng: np.random.Generator) -> Site:
        """Create (not yet attach) a transaction at time t; returns the site.

        The caller is responsible for calling attach() at site.attached_at.
        """
        a, b = self.select_tips(rng)
        site = Site(
            len(self.sites), t, t + self.delay, (a, b), self.sites[a].type_label
        )
        self._register(site)
        self._mark_pending(a)
        self._mark_pending(b)
        self.created[site.type_label - 1] += 1
        return site

    def create_forced(
        self, t: float, type_label: int, rng: np.random.Generator
    ) -> Site:
        """Create a transaction that selects tips only within type_label."""
        bucket = self.tips[type_label - 1]
        if len(bucket) == 0:
            raise ExtinctLedgerError(f"type {type_label} has no tips to select")
        a = bucket[int(rng.integers(len(bucket)))]
        b = bucket[int(rng.integers(len(bucket)))]
        site = Site(len(self.sites), t, t + self.delay, (a, b), type_label)
        self._register(site)
        self._mark_pending(a)
        self._mark_pending(b)
        self.created[type_label - 1] += 1
        return site

    def attach(self, site: Site) -> None:
        if self.attached[site.id]:
            raise RuntimeError(f"site {site.id} attached twice")
        assert site.parents is not None
        a, b = site.parents
        for p in (a, b) if a != b else (a,):
            if not self.attached[p]:
                raise RuntimeError("parent not attached before child")
            if not self.sites[p].attached_at < site.attached_at:
                raise RuntimeError("attach-time ordering violated (cycle risk)")
            if (
                site.id not in self.seed_ids
                and self.sites[p].type_label != site.type_label
            ):
                raise RuntimeError("edge joins different conflict types")
            self.children[p].append(site.id)
        self.attached[site.id] = True
        self._drop_tip(a)
        if b != a:
            self._drop_tip(b)
        self._unmark_pending(a)
        self._unmark_pending(b)
        i = site.type_label - 1
        self.tips[i].add(site.id)
        self.tip_count[i] += 1

    def inject_attack(
        self, t: float, m: int, attack_type: int, rng: np.random.Generator
    ) -> list[Site]:
        """Start a conflicting sub-DAG at time t.

        One seed site of attack_type is force-attached immediately to the two
        oldest attached non-tip sites (the seed conflicts by label, so its
        edges are exempt from the same-type rule), then m - 1 transactions are
        created that select tips only within attack_type.  Returns the
        scheduled (not yet attached) sites.
        """
        if attack_type < 2 or attack_type > self.d:
            raise ValueError("attack type must be in {2..d}")
        if m < 1:
            raise ValueError("burst size must be at least 1")
        parents = []
        for sid in range(len(self.sites)):
            if self.attached[sid] and sid not in self.tips[
                self.sites[sid].type_label - 1
            ]:
                parents.append(sid)
                if len(parents) == 2:
                    break
        while len(parents) < 2:  # degenerate early-attack fallback
            parents.append(0)
        seed = Site(len(self.sites), t, t, (parents[0], parents[1]), attack_type)
        self._register(seed)
        self.seed_ids.add(seed.id)
        self.created[attack_type - 1] += 1
        a, b = seed.parents
        for p in (a, b) if a != b else (a,):
            if not self.attached[p]:
                raise RuntimeError("seed parent not attached")
            self.children[p].append(seed.id)
        self.attached[seed.id] = True
        self._drop_tip(a)
        if b != a:
            self._drop_tip(b)
        self.tips[attack_type - 1].add(seed.id)
        self.tip_count[attack_type - 1] += 1
        return [self.create_forced(t, attack_type, rng) for _ in range(m - 1)]

    def site_weight(self, site_id: int) -> int:
        """1 + number of distinct attached descendants of the site."""
        if site_id < 0 or site_id >= len(self.sites):
            raise KeyError(f"unknown site id {site_id}")
        if not self.attached[site_id]:
            raise ValueError(f"site {site_id} is not attached yet")
        seen = {site_id}
        stack = [site_id]
        while stack:
            for c in self.children[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return len(seen)

    # -- invariants -------------------------------------------------------

    def check(self) -> None:
        """Recompute all derived state and compare with the counters."""
        for i in range(self.d):
            bucket = self.tips[i]
            assert len(bucket) == self.tip_count[i]
            w = sum(1 for sid in bucket.items if self.pending_marks.get(sid, 0))
            assert w == self.pending_count[i], "pending count drifted"
            assert self.free_count(i) >= 0
            # conservation: a tip is exactly an attached site with no
            # attached children
            recount = sum(
                1
                for sid, s in enumerate(self.sites)
                if s.type_label == i + 1
                and self.attached[sid]
                and not self.children[sid]
            )
            assert recount == self.tip_count[i], "tip conservation violated"
        for sid, s in enumerate(self.sites):
            if s.parents is None or not self.attached[sid]:
                continue
            for p in s.parents:
                assert self.sites[p].attached_at < s.attached_at
                if sid not in self.seed_ids:
                    assert self.sites[p].type_label == s.type_label


def new_tangle(types: int, delay: float = 1.0) -> AgentTangle:
    """Fresh ledger holding only the genesis site (type 1, sole tip)."""
    return AgentTangle(types, delay)


class AgentTangleSim:
    """Event loop driving an AgentTangle; same interface as the reduced model."""

    def __init__(
        self,
        arrivals: ArrivalProcess,
        delay: float,
        types: int = 1,
        injections: tuple[Injection, ...] = (),
        check_invariants: bool = False,
    ):
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
        tangle = AgentTangle(self.types, self.delay)
        arrival_times = self.arrivals.times(horizon, rng)
        waiting: deque[Site] = deque()
        inj_list = list(self.injections)
        recorder = GridRecorder(make_grid(horizon, grid_dt), self.types)
        ai = 0
        ii = 0
        n_arrivals = len(arrival_times)
        while True:
            t_arr = arrival_times[ai] if ai < n_arrivals else np.inf
            t_att = waiting[0].attached_at if waiting else np.inf
            t_inj = inj_list[ii].time if ii < len(inj_list) else np.inf
            t_next = min(t_arr, t_att, t_inj)
            if t_next > horizon or t_next == np.inf:
                break
            recorder.advance(
                t_next,
                tangle.tip_count,
                tangle.free_counts,
                tangle.pending_count,
                tangle.created,
            )
            if t_att <= t_arr and t_att <= t_inj:
                tangle.attach(waiting.popleft())
            elif t_inj <= t_arr:
                inj = inj_list[ii]
                ii += 1
                waiting.extend(
                    tangle.inject_attack(inj.time, inj.count, inj.type_label, rng)
                )
            else:
                ai += 1
                waiting.append(tangle.create_transaction(t_arr, rng))
            if self.check_invariants:
                tangle.check()
        return recorder.finish(
            tangle.tip_count,
            tangle.free_counts,
            tangle.pending_count,
            tangle.created,
        )
