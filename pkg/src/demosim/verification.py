"""Runtime assumption engine.

Every model assumption is registered under a stable label and evaluated as a
Boolean condition over (current state, previous snapshot): initial-scope
checks once after construction, every_step checks after each step, and the
retrospective space checks against a digest of the previous step's id sets.
Statistical assumptions (uniformity, gender ratio, weighted selection) keep
registry entries but no per-step check; they are covered by seeded
distribution tests in the test suite. Checks are read-only by contract.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .model import ADULT_YEARS, MALE, Person, WorldState
from .predicates import Snapshot, SnapshotStore
from .events import DEFAULT_EVENT_ORDER, validate_event_order


@dataclass(frozen=True, slots=True)
class Violation:
    label: str
    step_index: int
    ids: tuple[int, ...]
    detail: str


@dataclass(frozen=True, slots=True)
class Assumption:
    label: str
    scope: str  # initial | every_step | retrospective
    check: Callable[[WorldState, SnapshotStore | None], list[Violation]]
    kind: str = "hard"  # hard | statistical | vacuous
    note: str = ""


@dataclass(frozen=True, slots=True)
class SpaceDigest:
    """Id-level fingerprint of the space for the retrospective checks."""
    towns: frozenset
    houses: frozenset

    @classmethod
    def of(cls, state: WorldState) -> SpaceDigest:
        return cls(
            towns=frozenset((t.id, t.grid_xy, t.density)
                            for t in state.towns.values()),
            houses=frozenset(state.houses))


def _noop(state: WorldState, snaps) -> list[Violation]:
    return []


def _adult_steps(state: WorldState) -> int:
    return ADULT_YEARS * state.time.steps_per_year


def _prev(state: WorldState, snaps: SnapshotStore) -> Snapshot:
    return snaps.before(state.time.step_index)


# ---------------------------------------------------------------- initial

def _check_adults_no_parents(state: WorldState, snaps) -> list[Violation]:
    adult = _adult_steps(state)
    bad = [p.id for p in state.persons.values()
           if p.age_steps >= adult and (p.father is not None or p.mother is not None)]
    if not bad:
        return []
    return [Violation("a0_adults_no_parents", state.time.step_index, tuple(bad),
                      "initial adults must carry no parent links")]


def _check_parents_alive(state: WorldState, snaps) -> list[Violation]:
    adult = _adult_steps(state)
    bad = []
    for p in state.persons.values():
        if p.age_steps >= adult:
            continue
        for parent_id in (p.father, p.mother):
            if parent_id is not None and not state.persons[parent_id].alive:
                bad.append(p.id)
                break
    if not bad:
        return []
    return [Violation("a0_parents_alive", state.time.step_index, tuple(bad),
                      "initial children must have alive parents "
                      "(children without parent links pass vacuously)")]


def _check_family_together(state: WorldState, snaps) -> list[Violation]:
    """Initial houses hold exactly one family unit: a couple plus their
    children, or one single adult, or one parentless child."""
    out = []
    adult = _adult_steps(state)
    for house in state.houses.values():
        occ = [state.persons[pid] for pid in sorted(house.occupants)]
        if not occ:
            continue
        couple = [p for p in occ if p.partner is not None]
        if couple:
            ids = {p.id for p in occ}
            if len(couple) != 2 or couple[0].partner != couple[1].id:
                out.append(Violation("a0_family_together", state.time.step_index,
                                     tuple(sorted(ids)),
                                     f"house {house.id}: partners split or mixed"))
                continue
            parents = {couple[0].id, couple[1].id}
            for p in occ:
                if p.id in parents:
                    continue
                if p.father not in parents or p.mother not in parents:
                    out.append(Violation(
                        "a0_family_together", state.time.step_index, (p.id,),
                        f"house {house.id}: occupant p{p.id} is not a child "
                        f"of the resident couple"))
        elif len(occ) > 1:
            out.append(Violation("a0_family_together", state.time.step_index,
                                 tuple(p.id for p in occ),
                                 f"house {house.id}: unpartnered co-residents"))
        elif occ[0].age_steps < adult and (occ[0].father is not None
                                           or occ[0].mother is not None):
            out.append(Violation("a0_family_together", state.time.step_index,
                                 (occ[0].id,),
                                 f"house {house.id}: child p{occ[0].id} housed "
                                 f"away from its parents"))
    # child side: children with parents must live with them
    for p in state.persons.values():
        if p.age_steps >= adult or p.father is None:
            continue
        father = state.persons[p.father]
        if p.house != father.house:
            out.append(Violation("a0_family_together", state.time.step_index,
                                 (p.id,),
                                 f"child p{p.id} not housed with its parents"))
    return out


# ------------------------------------------------------------- every step

def _check_homeless(state: WorldState, snaps) -> list[Violation]:
    bad = []
    for p in state.persons.values():
        if not p.alive:
            continue
        if (p.house is None or p.house not in state.houses
                or p.id not in state.houses[p.house].occupants):
            bad.append(p.id)
    if not bad:
        return []
    return [Violation("a_homeless", state.time.step_index, tuple(bad),
                      "alive persons must occupy a resolving house")]


def _check_dead_no_house(state: WorldState, snaps) -> list[Violation]:
    out = []
    bad = [p.id for p in state.persons.values()
           if not p.alive and p.house is not None]
    if bad:
        out.append(Violation("a_dead_no_house", state.time.step_index,
                             tuple(bad), "dead persons must not keep a house"))
    stale = []
    for house in state.houses.values():
        for pid in house.occupants:
            if not state.persons[pid].alive:
                stale.append(pid)
    if stale:
        out.append(Violation("a_dead_no_house", state.time.step_index,
                             tuple(sorted(stale)),
                             "occupant sets must contain only the living"))
    return out


def _check_marriage_age(state: WorldState, snaps) -> list[Violation]:
    out = []
    adult = _adult_steps(state)
    for p in state.persons.values():
        if p.partner is None:
            continue
        other = state.persons.get(p.partner)
        if other is None or other.partner != p.id:
            out.append(Violation("a_p_marriage_age", state.time.step_index,
                                 (p.id,), "partnership not symmetric"))
            continue
        if other.gender == p.gender:
            out.append(Violation("a_p_marriage_age", state.time.step_index,
                                 (p.id, other.id), "partners share gender"))
        if not p.alive or not other.alive:
            out.append(Violation("a_p_marriage_age", state.time.step_index,
                                 (p.id, other.id), "dead person still partnered"))
        if p.age_steps < adult:
            out.append(Violation("a_p_marriage_age", state.time.step_index,
                                 (p.id,), "married person below 18 years"))
    return out


def _check_house_xy_bounds(state: WorldState, snaps) -> list[Violation]:
    bad = [h.id for h in state.houses.values()
           if not (1 <= h.local_xy[0] <= 25 and 1 <= h.local_xy[1] <= 25)]
    if not bad:
        return []
    return [Violation("a_s_house_xy_bounds", state.time.step_index, tuple(bad),
                      "house coordinates must lie in [1,25] x [1,25]")]


def _check_no_adoption(state: WorldState, snaps) -> list[Violation]:
    """Runtime face of the no-adoption assumption: nobody dead at the previous
    step is alive now. Parent links are immutable by construction (set only at
    creation), which unit tests pin; snapshots carry no parent attributes."""
    prev = _prev(state, snaps)
    bad = [pid for pid in prev.known
           if pid not in prev.alive and state.persons[pid].alive]
    if not bad:
        return []
    return [Violation("a_p_no_adoption", state.time.step_index, tuple(bad),
                      "dead persons must stay dead")]


def _check_married_gives_birth(state: WorldState, snaps) -> list[Violation]:
    out = []
    spy = state.time.steps_per_year
    now = state.time.step_index
    mothers_with_neonate = set()
    for q in state.persons.values():
        if q.born_step != now:
            continue
        if q.father is None or q.mother is None:
            out.append(Violation("a_p_married_gives_birth", now, (q.id,),
                                 "neonate lacks a parent link"))
            continue
        mother = state.persons[q.mother]
        mothers_with_neonate.add(mother.id)
        if not mother.gave_birth:
            out.append(Violation("a_p_married_gives_birth", now,
                                 (q.id, mother.id),
                                 "mother not flagged for this birth"))
        if mother.age_steps >= 45 * spy:
            out.append(Violation("a_p_married_gives_birth", now, (mother.id,),
                                 "mother aged 45 or older at birth"))
        father_ok = (mother.partner == q.father
                     or (mother.partner is None and mother.ever_partners
                         and mother.ever_partners[-1] == q.father))
        if not father_ok:
            out.append(Violation("a_p_married_gives_birth", now,
                                 (q.id, q.father),
                                 "father is not the mother's partner at birth"))
        if mother.alive and q.house != mother.house:
            out.append(Violation("a_p_married_gives_birth", now, (q.id,),
                                 "neonate not housed with its mother"))
    flagged = {p.id for p in state.persons.values() if p.gave_birth}
    for pid in sorted(flagged - mothers_with_neonate):
        out.append(Violation("a_p_married_gives_birth", now, (pid,),
                             "gave_birth flag without a neonate this step"))
    return out


def _kinship_roots(state: WorldState) -> dict[int, int]:
    """Union-find over the kinship graph: parent links and every historic
    partnership. Dead persons participate as connectors."""
    parent = {pid: pid for pid in state.persons}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for p in state.persons.values():
        if p.father is not None:
            union(p.id, p.father)
        if p.mother is not None:
            union(p.id, p.mother)
        for ex in p.ever_partners:
            union(p.id, ex)
    return {pid: find(pid) for pid in parent}


def _check_housing_kinship(state: WorldState, snaps) -> list[Violation]:
    """Co-occupants must be mutually reachable through parent/child and
    (possibly historic) partnership links: the pairwise kin list closed under
    chains, with dead relatives as valid intermediates."""
    roots = _kinship_roots(state)
    out = []
    for house in state.houses.values():
        if len(house.occupants) < 2:
            continue
        occ = sorted(house.occupants)
        first = roots[occ[0]]
        if any(roots[pid] != first for pid in occ[1:]):
            out.append(Violation("a_housing_kinship", state.time.step_index,
                                 tuple(occ),
                                 f"house {house.id} mixes unrelated persons"))
    return out


def _orphan_oldest_at_ageing(state: WorldState, prev: Snapshot,
                             p: Person) -> bool:
    """Replays the ageing-time stay-home test from the previous snapshot:
    parent aliveness and sibling ages as they stood when ageing ran."""
    for parent_id in (p.father, p.mother):
        if parent_id is not None and parent_id in prev.alive:
            return False
    best = (p.age_steps, -p.id)
    for parent_id in (p.father, p.mother):
        if parent_id is None:
            continue
        for sid in state.persons[parent_id].children:
            if sid == p.id or sid not in prev.alive:
                continue
            key = (prev.age_steps[sid] + 1, -sid)
            if key > best:
                return False
    return True


def _just_married_couples(state: WorldState, prev: Snapshot) -> list[tuple[Person, Person]]:
    couples = []
    for p in state.persons.values():
        if (p.gender == MALE and p.partner is not None
                and p.id not in prev.married):
            couples.append((p, state.persons[p.partner]))
    return couples


def _check_adult_moves_out(state: WorldState, snaps) -> list[Violation]:
    prev = _prev(state, snaps)
    adult = _adult_steps(state)
    now = state.time.step_index
    just_married = {pid for m, f in _just_married_couples(state, prev)
                    for pid in (m.id, f.id)}
    out = []
    for p in state.persons.values():
        if p.age_steps != adult or not p.alive or p.id not in prev.known:
            continue
        if p.id in just_married:
            continue  # housing covered by the marriage check
        old_house = prev.house.get(p.id)
        old_town = prev.town.get(p.id)
        if _orphan_oldest_at_ageing(state, prev, p):
            if p.house != old_house:
                out.append(Violation("a_adult_moves_out", now, (p.id,),
                                     "oldest orphan sibling must keep the "
                                     "family house"))
            continue
        house = state.houses.get(p.house) if p.house is not None else None
        if house is None:
            continue  # homeless check reports this
        if house.occupants != {p.id}:
            out.append(Violation("a_adult_moves_out", now, (p.id,),
                                 "new adult must live alone"))
        if p.house == old_house:
            out.append(Violation("a_adult_moves_out", now, (p.id,),
                                 "new adult must leave the family house"))
        if house.town != old_town:
            out.append(Violation("a_adult_moves_out", now, (p.id,),
                                 "new adult must stay in the same town"))
    return out


def _check_divorce_male_moves(state: WorldState, snaps) -> list[Violation]:
    """Detects this step's divorced males (previously married, single now,
    ex-partner alive) and checks the move-out rule. A male whose ex died the
    same step is classified widowed and skipped: under orders where deaths
    follow divorces this misses the occasional real divorce (false negative)
    but never flags a legal state."""
    prev = _prev(state, snaps)
    now = state.time.step_index
    out = []
    for pid in sorted(prev.married):
        p = state.persons[pid]
        if p.gender != MALE or not p.alive or p.partner is not None:
            continue
        ex = prev.partner.get(pid)
        if ex is None or not state.persons[ex].alive:
            continue  # widowed, not divorced
        house = state.houses.get(p.house) if p.house is not None else None
        if house is None:
            continue  # homeless check reports this
        if house.occupants != {pid}:
            out.append(Violation("a_divorce_male_moves", now, (pid,),
                                 "divorced male must live alone"))
        if p.house == prev.house.get(pid):
            out.append(Violation("a_divorce_male_moves", now, (pid,),
                                 "divorced male must leave the family house"))
        if house.town != prev.town.get(pid):
            out.append(Violation("a_divorce_male_moves", now, (pid,),
                                 "divorced male must stay in the same town"))
    return out


def _make_marriage_housing_check(event_order: tuple[str, ...]):
    """The marriage-housing rule depends on which events precede marriages in
    the configured order, so the check is built per run. It replays the
    step's occupancy from the previous snapshot (ageing moves, then the
    pre-marriage events, then each merge in ascending groom id) and compares
    the resulting households with the live state."""
    order = validate_event_order(event_order)
    if "marriages" in order:
        pre_marriage = order[1:order.index("marriages")]
    else:
        pre_marriage = ()

    def check(state: WorldState, snaps) -> list[Violation]:
        prev = _prev(state, snaps)
        now = state.time.step_index
        couples = _just_married_couples(state, prev)
        if not couples:
            return []
        couples.sort(key=lambda mf: mf[0].id)
        adult = _adult_steps(state)

        slot_of: dict[int, object] = {}
        occ: dict[object, set[int]] = {}
        for pid in prev.alive:
            h = prev.house.get(pid)
            if h is not None:
                slot_of[pid] = h
                occ.setdefault(h, set()).add(pid)

        def move(pid: int, slot) -> None:
            old = slot_of.get(pid)
            if old is not None:
                occ[old].discard(pid)
            slot_of[pid] = slot
            occ.setdefault(slot, set()).add(pid)

        def remove(pid: int) -> None:
            old = slot_of.pop(pid, None)
            if old is not None:
                occ[old].discard(pid)

        # ageing always runs first: replicate the 18-year move-outs
        for p in state.persons.values():
            if p.id not in prev.alive or p.age_steps != adult:
                continue
            if not p.alive:
                remove(p.id)  # aged, possibly moved, then died
            elif not _orphan_oldest_at_ageing(state, prev, p):
                move(p.id, ("new-adult", p.id))

        for name in pre_marriage:
            if name == "deaths":
                for pid in prev.alive:
                    if not state.persons[pid].alive:
                        remove(pid)
            elif name == "births":
                for q in state.persons.values():
                    if q.born_step == now and q.mother is not None:
                        mom_slot = slot_of.get(q.mother)
                        if mom_slot is not None:
                            move(q.id, mom_slot)
            elif name == "divorces":
                for pid in sorted(prev.married):
                    q = state.persons[pid]
                    if q.gender != MALE or not q.alive or q.partner is not None:
                        continue
                    ex = prev.partner.get(pid)
                    if ex is not None and state.persons[ex].alive:
                        move(pid, ("divorced", pid))

        out = []
        merged: list[tuple[Person, Person, object]] = []
        for m, f in couples:
            sm, sf = slot_of.get(m.id), slot_of.get(f.id)
            if sm is None or sf is None:
                out.append(Violation("a_marriage_housing", now, (m.id, f.id),
                                     "spouse has no tracked household"))
                continue
            if sm != sf:
                if len(occ[sm]) >= len(occ[sf]):
                    target, source = sm, sf
                else:
                    target, source = sf, sm
                for pid in sorted(occ[source]):
                    move(pid, target)
            else:
                target = sm
            merged.append((m, f, target))

        born_now = {q.id for q in state.persons.values() if q.born_step == now}
        died_now = {pid for pid in prev.alive if not state.persons[pid].alive}
        mask = born_now | died_now
        for m, f, target in merged:
            if not isinstance(target, int):
                out.append(Violation("a_marriage_housing", now, (m.id, f.id),
                                     "household merged into a fresh house, "
                                     "which the move rule never produces"))
                continue
            if m.house != target or f.house != target:
                out.append(Violation(
                    "a_marriage_housing", now, (m.id, f.id),
                    f"couple expected in house {target}, found "
                    f"m->{m.house} f->{f.house}"))
                continue
            expected = occ[target] - mask
            actual = set(state.houses[target].occupants) - mask
            if expected != actual:
                out.append(Violation(
                    "a_marriage_housing", now, tuple(sorted(expected ^ actual)),
                    f"house {target} occupants diverge from the merge rule"))
        return out

    return check


# ----------------------------------------------------------- registry

def build_registry(event_order=DEFAULT_EVENT_ORDER) -> tuple[Assumption, ...]:
    """All labeled assumptions. Statistical and vacuous entries carry no-op
    runtime checks so the registry still enumerates them."""
    return (
        Assumption("a0_adults_no_parents", "initial", _check_adults_no_parents),
        Assumption("a0_parents_alive", "initial", _check_parents_alive),
        Assumption("a0_siblings_age_free", "initial", _noop, kind="vacuous",
                   note="sibling age gaps are unrestricted; nothing to check"),
        Assumption("a0_family_together", "initial", _check_family_together),
        Assumption("a_s_static_towns", "retrospective", _noop,
                   note="enforced by check_retrospective over space digests"),
        Assumption("a_s_house_persistence", "retrospective", _noop,
                   note="enforced by check_retrospective over space digests"),
        Assumption("a_s_dynamic_space", "every_step", _noop, kind="vacuous",
                   note="the house set may grow; growth itself needs no check"),
        Assumption("a_s_dynamic_houses_per_town", "every_step", _noop,
                   kind="vacuous",
                   note="per-town house counts may grow freely"),
        Assumption("a_s_house_xy_bounds", "every_step", _check_house_xy_bounds),
        Assumption("a_s_uniform_house_locations", "every_step", _noop,
                   kind="statistical", note="covered by offline uniformity tests"),
        Assumption("a_s_empty_house_selection", "every_step", _noop,
                   kind="statistical", note="covered by offline frequency tests"),
        Assumption("a_s_weighted_town_selection", "every_step", _noop,
                   kind="statistical", note="covered by offline frequency tests"),
        Assumption("a_p_gender_ratio", "every_step", _noop, kind="statistical",
                   note="covered by offline binomial tests"),
        Assumption("a_p_marriage_age", "every_step", _check_marriage_age),
        Assumption("a_p_married_gives_birth", "every_step",
                   _check_married_gives_birth),
        Assumption("a_p_no_adoption", "every_step", _check_no_adoption,
                   note="runtime face is no-resurrection; parent-link "
                        "immutability is structural and unit-tested"),
        Assumption("a_homeless", "every_step", _check_homeless),
        Assumption("a_arbitrary_occupants", "every_step", _noop, kind="vacuous",
                   note="houses have no occupancy cap; nothing to check"),
        Assumption("a_housing_kinship", "every_step", _check_housing_kinship),
        Assumption("a_adult_moves_out", "every_step", _check_adult_moves_out),
        Assumption("a_dead_no_house", "every_step", _check_dead_no_house),
        Assumption("a_divorce_male_moves", "every_step",
                   _check_divorce_male_moves),
        Assumption("a_marriage_housing", "every_step",
                   _make_marriage_housing_check(event_order)),
    )


def check_initial(state: WorldState,
                  registry: tuple[Assumption, ...] | None = None) -> list[Violation]:
    registry = build_registry() if registry is None else registry
    out: list[Violation] = []
    for a in registry:
        if a.scope == "initial":
            out.extend(a.check(state, None))
    return out


def check_step(state: WorldState, snaps: SnapshotStore,
               registry: tuple[Assumption, ...] | None = None) -> list[Violation]:
    registry = build_registry() if registry is None else registry
    out: list[Violation] = []
    for a in registry:
        if a.scope == "every_step":
            out.extend(a.check(state, snaps))
    return out


def check_retrospective(prev_digest: SpaceDigest,
                        state: WorldState) -> list[Violation]:
    """Post-style space assumptions, checked one step after the fact: town
    set (with densities) never changes; houses are never demolished."""
    out = []
    cur = SpaceDigest.of(state)
    if cur.towns != prev_digest.towns:
        changed = prev_digest.towns ^ cur.towns
        ids = tuple(sorted({entry[0] for entry in changed}))
        out.append(Violation("a_s_static_towns", state.time.step_index, ids,
                             "town set or densities changed between steps"))
    missing = prev_digest.houses - cur.houses
    if missing:
        out.append(Violation("a_s_house_persistence", state.time.step_index,
                             tuple(sorted(missing)),
                             "houses disappeared between steps"))
    return out
