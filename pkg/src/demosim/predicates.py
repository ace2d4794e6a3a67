"""Featured sub-populations: Boolean and group predicates, set composition,
and the temporal operators just/pre over a two-deep snapshot history.

The post-style assumptions have no forward-looking query here; the
verification module checks them one step later against the stored snapshot.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from typing import Callable

from .model import (ADULT_YEARS, FEMALE, IntegrityError, MALE,
                    MissingSnapshotError, WorldState)


class Snapshot:
    """Frozen per-person attributes for one step: alive, married, partner,
    house, town, age_steps, gave_birth."""

    __slots__ = ("step_index", "known", "alive", "married", "partner",
                 "house", "town", "age_steps", "gave_birth", "location")

    def __init__(self, state: WorldState):
        self.step_index = state.time.step_index
        self.known: frozenset[int] = frozenset(state.persons)
        alive, married, gave_birth = set(), set(), set()
        partner: dict[int, int] = {}
        house: dict[int, int] = {}
        town: dict[int, int] = {}
        location: dict[int, tuple[int, int]] = {}
        age_steps: dict[int, int] = {}
        for pid, p in state.persons.items():
            age_steps[pid] = p.age_steps
            if p.alive:
                alive.add(pid)
            if p.partner is not None:
                married.add(pid)
                partner[pid] = p.partner
            if p.gave_birth:
                gave_birth.add(pid)
            if p.house is not None:
                h = state.houses[p.house]
                house[pid] = h.id
                town[pid] = h.town
                location[pid] = h.local_xy
        self.alive = frozenset(alive)
        self.married = frozenset(married)
        self.gave_birth = frozenset(gave_birth)
        self.partner = partner
        self.house = house
        self.town = town
        self.location = location
        self.age_steps = age_steps


class SnapshotStore:
    """Keeps the two most recent snapshots (previous and current)."""

    def __init__(self) -> None:
        self._snaps: deque[Snapshot] = deque(maxlen=2)

    def freeze(self, state: WorldState) -> Snapshot:
        snap = Snapshot(state)
        self._snaps.append(snap)
        return snap

    def __len__(self) -> int:
        return len(self._snaps)

    def newest(self) -> Snapshot:
        if not self._snaps:
            raise MissingSnapshotError("no snapshot frozen yet")
        return self._snaps[-1]

    def before(self, step_index: int) -> Snapshot:
        """Newest snapshot strictly older than the given step."""
        for snap in reversed(self._snaps):
            if snap.step_index < step_index:
                return snap
        raise MissingSnapshotError(
            f"no snapshot before step {step_index} (history holds "
            f"{[s.step_index for s in self._snaps]})")


@dataclass(frozen=True)
class SubPopulation:
    """Set of person ids in canonical ascending order."""
    ids: tuple[int, ...]

    @classmethod
    def of(cls, iterable) -> SubPopulation:
        return cls(tuple(sorted(set(iterable))))

    def __iter__(self):
        return iter(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, pid: int) -> bool:
        i = bisect.bisect_left(self.ids, pid)
        return i < len(self.ids) and self.ids[i] == pid


@dataclass(frozen=True)
class BooleanPredicate:
    name: str
    eval: Callable[[int, WorldState, SnapshotStore | None], bool]


@dataclass(frozen=True)
class GroupPredicate:
    name: str
    eval: Callable[[int, WorldState], set[int]]


def filter_pop(pred: BooleanPredicate, base: SubPopulation, state: WorldState,
               snaps: SnapshotStore | None = None) -> SubPopulation:
    for pid in base:
        if pid not in state.persons:
            raise IntegrityError(f"unresolvable person id {pid}")
    return SubPopulation(tuple(pid for pid in base.ids
                               if pred.eval(pid, state, snaps)))


def combine(op: str, a: SubPopulation, b: SubPopulation) -> SubPopulation:
    sa, sb = set(a.ids), set(b.ids)
    if op == "union":
        return SubPopulation.of(sa | sb)
    if op == "intersect":
        return SubPopulation.of(sa & sb)
    if op == "difference":
        return SubPopulation.of(sa - sb)
    raise ValueError(f"unknown set operation {op!r}")


def negate(pred: BooleanPredicate, base: SubPopulation, state: WorldState,
           snaps: SnapshotStore | None = None) -> SubPopulation:
    return combine("difference", base, filter_pop(pred, base, state, snaps))


def group_of_filtered(g: GroupPredicate, base_filtered: SubPopulation,
                      state: WorldState) -> SubPopulation:
    out: set[int] = set()
    for pid in base_filtered:
        out |= g.eval(pid, state)
    return SubPopulation.of(out)


def filtered_group(g: GroupPredicate, base: SubPopulation,
                   pred: BooleanPredicate, state: WorldState,
                   snaps: SnapshotStore | None = None) -> SubPopulation:
    return filter_pop(pred, group_of_filtered(g, base, state), state, snaps)


# attribute keys usable with just(); (live test, snapshot test) pairs
_JUST_ATTRS = {
    "alive": (lambda p: p.alive, lambda snap, pid: pid in snap.alive),
    "married": (lambda p: p.partner is not None,
                lambda snap, pid: pid in snap.married),
    "gave_birth": (lambda p: p.gave_birth,
                   lambda snap, pid: pid in snap.gave_birth),
}


def just(attr: str, state: WorldState, snaps: SnapshotStore,
         negated: bool = False) -> SubPopulation:
    """Persons satisfying the attribute now but not at the previous step.
    With negated=True the attribute test is inverted on both sides, e.g.
    just("married", negated=True) is "just got divorced or widowed"."""
    if attr not in _JUST_ATTRS:
        raise ValueError(f"just() does not support attribute {attr!r}")
    live, frozen = _JUST_ATTRS[attr]
    prev = snaps.before(state.time.step_index)
    now = {pid for pid, p in state.persons.items() if live(p) != negated}
    before = {pid for pid in prev.known if frozen(prev, pid) != negated}
    return SubPopulation.of(now - before)


def pre(attr: str, pid: int, snaps: SnapshotStore, state: WorldState):
    """Frozen previous-step value of one attribute. `location` resolves the
    previous house's coordinates (houses never move once built)."""
    prev = snaps.before(state.time.step_index)
    if pid not in prev.known:
        raise MissingSnapshotError(f"person {pid} unknown at step "
                                   f"{prev.step_index}")
    if attr == "alive":
        return pid in prev.alive
    if attr == "married":
        return pid in prev.married
    if attr == "partner":
        return prev.partner.get(pid)
    if attr == "house":
        return prev.house.get(pid)
    if attr == "town":
        return prev.town.get(pid)
    if attr == "location":
        return prev.location.get(pid)
    if attr == "age_steps":
        return prev.age_steps[pid]
    if attr == "gave_birth":
        return pid in prev.gave_birth
    raise ValueError(f"pre() does not support attribute {attr!r}")


def _bp(name: str, fn) -> BooleanPredicate:
    return BooleanPredicate(name, lambda pid, state, snaps: fn(state.persons[pid], state))


is_male = _bp("isMale", lambda p, s: p.gender == MALE)
is_female = _bp("isFemale", lambda p, s: p.gender == FEMALE)
is_alive = _bp("isAlive", lambda p, s: p.alive)
is_married = _bp("isMarried", lambda p, s: p.partner is not None)
is_single = _bp("isSingle", lambda p, s: p.partner is None)
is_adult = _bp("isAdult",
               lambda p, s: p.age_steps >= ADULT_YEARS * s.time.steps_per_year)
has_children = _bp("hasChildren", lambda p, s: bool(p.children))


def _siblings(pid: int, state: WorldState) -> set[int]:
    p = state.persons[pid]
    out: set[int] = set()
    for parent_id in (p.father, p.mother):
        if parent_id is not None:
            out |= state.persons[parent_id].children
    out.discard(pid)
    return out


has_a_sibling = _bp("hasASibling", lambda p, s: bool(_siblings(p.id, s)))

children_of = GroupPredicate(
    "childrenOf", lambda pid, state: set(state.persons[pid].children))
siblings_of = GroupPredicate("siblingsOf", _siblings)
parents_of = GroupPredicate(
    "parentsOf",
    lambda pid, state: {q for q in (state.persons[pid].father,
                                    state.persons[pid].mother) if q is not None})
