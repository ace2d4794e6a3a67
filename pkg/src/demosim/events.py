"""The five event transitions applied each step, ageing always first.

Draw order is part of the determinism contract. Within every event, persons
are visited in ascending id; each event's draws per person are documented on
the event function. All draws come from the single run RNG stream.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .model import (ADULT_YEARS, ConfigError, IntegrityError, MALE, FEMALE,
                    Person, WorldState, link_partners, unlink_partners)
from .predicates import Snapshot, SnapshotStore
from .rates import RateContext
from .space import find_or_create_empty_house, leave_house, manhattan, move_person

DEFAULT_EVENT_ORDER = ("ageing", "deaths", "births", "divorces", "marriages")
EVENT_NAMES = frozenset(DEFAULT_EVENT_ORDER)

# cap on the childrenFactor exponent; beyond this math.exp overflows a double
_MAX_WEIGHT_EXPONENT = 700.0


@dataclass(slots=True)
class StepOutcome:
    """Per-step event audit: id lists per category; counts derive from them."""
    step_index: int
    born: list[int] = field(default_factory=list)
    died: list[int] = field(default_factory=list)
    married: list[tuple[int, int]] = field(default_factory=list)
    divorced: list[tuple[int, int]] = field(default_factory=list)
    adults_moved: list[int] = field(default_factory=list)
    houses_created: list[int] = field(default_factory=list)

    @property
    def births(self) -> int:
        return len(self.born)

    @property
    def deaths(self) -> int:
        return len(self.died)

    @property
    def marriages(self) -> int:
        return len(self.married)

    @property
    def divorces(self) -> int:
        return len(self.divorced)


def validate_event_order(order) -> tuple[str, ...]:
    order = tuple(order)
    if not order or order[0] != "ageing":
        raise ConfigError(f"event order must begin with ageing, got {order!r}")
    unknown = [e for e in order if e not in EVENT_NAMES]
    if unknown:
        raise ConfigError(f"unknown events in order: {unknown}")
    if len(set(order)) != len(order):
        raise ConfigError(f"duplicate events in order: {order!r}")
    if "divorces" in order and "marriages" in order:
        if order.index("divorces") > order.index("marriages"):
            raise ConfigError("divorces must precede marriages "
                              "(marriage eligibility excludes the just-divorced)")
    return order


def age_factor(age_m: float, age_f: float) -> float:
    diff = age_m - age_f
    if diff >= 5:
        return 1.0 / (diff - 5 + 1)
    if diff <= -2:
        return -1.0 / (diff + 2 - 1)
    return 1.0


def geo_factor(state: WorldState, m: Person, f: Person) -> float:
    town_m = state.towns[state.houses[m.house].town]
    town_f = state.towns[state.houses[f.house].town]
    return math.exp(-4.0 * manhattan(town_m, town_f))


def children_factor(n_children_m: int, n_children_f: int) -> float:
    exponent = n_children_m * n_children_f - n_children_m - n_children_f
    return math.exp(min(exponent, _MAX_WEIGHT_EXPONENT))


def marriage_weight(state: WorldState, m: Person, f: Person) -> float:
    """Full matching weight geoFactor * childrenFactor * ageFactor, floored
    at 0 so weighted sampling stays total."""
    spy = state.time.steps_per_year
    w = (geo_factor(state, m, f)
         * children_factor(len(m.children), len(f.children))
         * age_factor(m.age_steps / spy, f.age_steps / spy))
    return max(0.0, w)


def weighted_pick(items: list, weights: list[float], rng: random.Random):
    """One item with probability proportional to weight; None when the total
    weight is zero."""
    total = 0.0
    cumulative = []
    for w in weights:
        total += w
        cumulative.append(total)
    if total <= 0.0:
        return None
    x = rng.random() * total
    for i, bound in enumerate(cumulative):
        if x < bound:
            return items[i]
    return items[-1]


def _move_to_own_empty_house(state: WorldState, person: Person,
                             rng: random.Random, outcome: StepOutcome) -> None:
    """Relocate one person alone to an empty house in their current town."""
    town = state.towns[state.houses[person.house].town]
    before = state.next_house_id
    house = find_or_create_empty_house(state, town, rng)
    if state.next_house_id != before:
        outcome.houses_created.append(house.id)
    move_person(state, person, house)


def _is_orphan_oldest_sibling(state: WorldState, p: Person) -> bool:
    """The stay-home exception at 18: no alive parent, and oldest (max age,
    ties to the smaller id) among their alive siblings."""
    for parent_id in (p.father, p.mother):
        if parent_id is not None and state.persons[parent_id].alive:
            return False
    group = [p]
    for parent_id in (p.father, p.mother):
        if parent_id is None:
            continue
        for cid in state.persons[parent_id].children:
            if cid != p.id and state.persons[cid].alive:
                group.append(state.persons[cid])
    oldest = max(group, key=lambda q: (q.age_steps, -q.id))
    return oldest is p


def ageing(state: WorldState, ctx: RateContext, rng: random.Random,
           outcome: StepOutcome) -> None:
    """Increment every alive person's age by one step; persons reaching
    exactly 18 years move alone to an empty house in their town, except an
    orphan who is the oldest alive sibling (they keep the family house).
    Also resets the per-step gave_birth flags. Draws: only the house
    selection for each mover, in ascending id order."""
    adult_steps = ADULT_YEARS * state.time.steps_per_year
    movers: list[Person] = []
    for p in state.persons.values():
        p.gave_birth = False
        if not p.alive:
            continue
        p.age_steps += 1
        if p.age_steps == adult_steps:
            movers.append(p)
    for p in movers:
        if _is_orphan_oldest_sibling(state, p):
            continue
        _move_to_own_empty_house(state, p, rng, outcome)
        outcome.adults_moved.append(p.id)


def deaths(state: WorldState, ctx: RateContext, rng: random.Random,
           outcome: StepOutcome) -> None:
    """One Bernoulli(death p_step) draw per alive non-neonate, ascending id.
    Dying persons stay on record (kinship intact, age frozen) but leave their
    house and widow their partner."""
    for p in [q for q in state.persons.values() if q.alive and q.age_steps > 0]:
        if rng.random() < ctx.death_p_step(p):
            unlink_partners(state, p)
            leave_house(state, p)
            p.alive = False
            outcome.died.append(p.id)


def _reproducible_women(state: WorldState) -> list[Person]:
    """Married women under 45 whose latest live birth lies more than a year
    back (time-based, so a child's death cannot freeze the spacing rule)."""
    spy = state.time.steps_per_year
    limit = 45 * spy
    now = state.time.step_index
    out = []
    for p in state.persons.values():
        if not (p.alive and p.gender == FEMALE and p.partner is not None
                and p.age_steps < limit):
            continue
        if p.children:
            last_birth = max(state.persons[c].born_step for c in p.children)
            if now - last_birth <= spy:
                continue
        out.append(p)
    return out


def births(state: WorldState, ctx: RateContext, rng: random.Random,
           outcome: StepOutcome) -> None:
    """One Bernoulli(fertility p_step) draw per reproducible woman, ascending
    id; on success one gender draw. The neonate starts in the mother's house
    with both parent links set."""
    for mother in _reproducible_women(state):
        if rng.random() >= ctx.fertility_p_step(mother, state.time):
            continue
        if mother.partner is None:
            raise IntegrityError(f"reproducible woman p{mother.id} has no partner")
        father = state.persons[mother.partner]
        gender = MALE if rng.random() < 0.5 else FEMALE
        child = state.add_person(gender, age_steps=0,
                                 born_step=state.time.step_index,
                                 father=father.id, mother=mother.id)
        father.children.add(child.id)
        mother.children.add(child.id)
        move_person(state, child, state.houses[mother.house])
        mother.gave_birth = True
        outcome.born.append(child.id)


def divorces(state: WorldState, ctx: RateContext, rng: random.Random,
             outcome: StepOutcome) -> None:
    """One Bernoulli(divorce p_step) draw per married male not married this
    very step, ascending id; on divorce the male moves alone to an empty
    house in the same town, the rest of the household stays."""
    married_this_step = {m for m, _ in outcome.married}
    eligible = [p for p in state.persons.values()
                if p.alive and p.gender == MALE and p.partner is not None
                and p.id not in married_this_step]
    for man in eligible:
        if rng.random() < ctx.divorce_p_step(man):
            wife_id = man.partner
            unlink_partners(state, man)
            _move_to_own_empty_house(state, man, rng, outcome)
            outcome.divorced.append((man.id, wife_id))


def marriage_eligible_males(state: WorldState, prev: Snapshot) -> list[Person]:
    """Single adult males, excluding those married at the previous step
    (covers the just-divorced and delays widowers one step) and those who
    turned exactly 18 this step."""
    adult_steps = ADULT_YEARS * state.time.steps_per_year
    return [p for p in state.persons.values()
            if p.alive and p.gender == MALE and p.partner is None
            and p.age_steps >= adult_steps and p.age_steps != adult_steps
            and p.id not in prev.married]


def marriage_eligible_females(state: WorldState, prev: Snapshot) -> list[Person]:
    """Single adult females, excluding those married at the previous step
    (same snapshot rule as males: widows and fresh divorcees wait one step)."""
    adult_steps = ADULT_YEARS * state.time.steps_per_year
    return [p for p in state.persons.values()
            if p.alive and p.gender == FEMALE and p.partner is None
            and p.age_steps >= adult_steps and p.id not in prev.married]


def candidate_count(pool_size: int, max_num_marr_cand: int,
                    literal: bool = False) -> int:
    """Number of candidate brides sampled per marrying male. The default
    treats max_num_marr_cand as a cap; literal=True reproduces the historic
    floor variant."""
    if literal:
        return max(max_num_marr_cand, pool_size // 10)
    return min(max_num_marr_cand, max(1, pool_size // 10))


def marriages(state: WorldState, ctx: RateContext, prev: Snapshot,
              rng: random.Random, outcome: StepOutcome,
              algorithm1_literal: bool = False) -> None:
    """One Bernoulli(marriage p_step) draw per eligible male, ascending id
    (drawn even when the bride pool is empty, to keep the stream aligned);
    on success: sample candidates without replacement, pick one by full
    weight, marry, merge households (the smaller household moves, ties move
    the wife's side)."""
    males = marriage_eligible_males(state, prev)
    pool = marriage_eligible_females(state, prev)
    n_cand = candidate_count(len(pool), ctx.params.max_num_marr_cand,
                             algorithm1_literal)
    for man in males:
        if rng.random() >= ctx.marriage_p_step(man):
            continue
        k = min(n_cand, len(pool))
        if k == 0:
            continue
        candidates = rng.sample(pool, k)
        weights = [marriage_weight(state, man, f) for f in candidates]
        bride = weighted_pick(candidates, weights, rng)
        if bride is None:
            continue
        link_partners(man, bride)
        pool.remove(bride)
        _merge_households(state, man, bride)
        outcome.married.append((man.id, bride.id))


def _merge_households(state: WorldState, man: Person, bride: Person) -> None:
    his = state.houses[man.house]
    hers = state.houses[bride.house]
    if his.id == hers.id:
        return
    if len(his.occupants) >= len(hers.occupants):
        source, target = hers, his
    else:
        source, target = his, hers
    for pid in sorted(source.occupants):
        move_person(state, state.persons[pid], target)


_EVENTS = {"deaths": deaths, "births": births, "divorces": divorces}


def step(state: WorldState, ctx: RateContext, snaps: SnapshotStore,
         rng: random.Random, event_order=DEFAULT_EVENT_ORDER,
         algorithm1_literal: bool = False) -> StepOutcome:
    """Advance the clock one step, apply the configured events (ageing first),
    freeze the new snapshot, and return the merged outcome."""
    order = validate_event_order(event_order)
    state.time.step_index += 1
    prev = snaps.before(state.time.step_index)
    outcome = StepOutcome(step_index=state.time.step_index)
    ageing(state, ctx, rng, outcome)
    for name in order[1:]:
        if name == "marriages":
            marriages(state, ctx, prev, rng, outcome, algorithm1_literal)
        else:
            _EVENTS[name](state, ctx, rng, outcome)
    snaps.freeze(state)
    return outcome
