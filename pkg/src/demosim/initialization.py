"""Initial world construction: population size and placement, genders, ages,
partnerships, parent assignment, family housing.

Draw order (the determinism contract for initialization): one gender draw per
person in ascending id; one age draw per person in ascending id; partnership
selection and matching per adult male in ascending id (selection draw always,
then candidate sample and weighted pick only when selected); one father draw
per child in ascending id; one town draw plus house draws per family unit in
ascending head id.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .events import age_factor, candidate_count, weighted_pick
from .model import (ADULT_YEARS, FEMALE, MALE, ModelParams, Person, SimTime,
                    SimulationParams, WorldState, link_partners)
from .space import DensityMap, build_towns, find_or_create_empty_house, \
    move_person, weighted_town


@dataclass(slots=True)
class InitReport:
    """Audit record of what initialization built."""
    per_town: dict[int, int]
    persons_total: int
    adults: int
    children: int
    couples: int
    males_left_single: int
    children_assigned_parents: int
    parentless_children: tuple[int, ...]
    houses_created: int

    def to_dict(self) -> dict:
        return {
            "per_town": {str(k): v for k, v in sorted(self.per_town.items())},
            "persons_total": self.persons_total,
            "adults": self.adults,
            "children": self.children,
            "couples": self.couples,
            "males_left_single": self.males_left_single,
            "children_assigned_parents": self.children_assigned_parents,
            "parentless_children": list(self.parentless_children),
            "houses_created": self.houses_created,
        }


def town_population_targets(initial_pop: int,
                            density: DensityMap) -> dict[int, int]:
    """Per-town creation counts: ceil(initial_pop * density / nonzero_count),
    keyed by town id in row-major grid order (matching build_towns)."""
    cells = [v for row in density.rows for v in row if v > 0]
    nonzero = len(cells)
    return {tid: math.ceil(initial_pop * v / nonzero)
            for tid, v in enumerate(cells)}


def draw_gender(rng: random.Random) -> str:
    return MALE if rng.random() < 0.5 else FEMALE


def assign_genders(persons: list[Person], rng: random.Random) -> None:
    for p in persons:
        p.gender = draw_gender(rng)


def sample_age(rng: random.Random, n_per_year: int) -> int:
    """Half-normal age in steps: |floor(Normal(0, 25 years))|."""
    return abs(math.floor(rng.gauss(0.0, 25.0 * n_per_year)))


def init_partnerships(state: WorldState, params: ModelParams,
                      rng: random.Random,
                      algorithm1_literal: bool = False) -> tuple[int, int]:
    """Marry off adult males: each is selected with probability
    start_married_ratio; a selected male samples candidate brides and picks
    one weighted by ageFactor. Returns (couples formed, selected males left
    single because the pool ran dry or every weight was zero)."""
    spy = state.time.steps_per_year
    adult_steps = ADULT_YEARS * spy
    males, pool = [], []
    for p in state.persons.values():
        if p.age_steps < adult_steps:
            continue
        (males if p.gender == MALE else pool).append(p)
    n_cand = candidate_count(len(pool), params.max_num_marr_cand,
                             algorithm1_literal)
    couples = left_single = 0
    for m in males:
        if rng.random() >= params.start_married_ratio:
            continue
        k = min(n_cand, len(pool))
        if k == 0:
            left_single += 1
            continue
        candidates = rng.sample(pool, k)
        weights = [max(0.0, age_factor(m.age_steps / spy, f.age_steps / spy))
                   for f in candidates]
        bride = weighted_pick(candidates, weights, rng)
        if bride is None:
            left_single += 1
            continue
        link_partners(m, bride)
        pool.remove(bride)
        couples += 1
    return couples, left_single


def assign_parents(state: WorldState,
                   rng: random.Random) -> tuple[int, list[int]]:
    """Give every child a uniformly drawn father from the couples that are old
    enough (both spouses at least 18 years 9 months older than the child) and
    whose wife was under 45 at the child's birth. Children with no candidates
    stay parentless and are reported, not failed."""
    spy = state.time.steps_per_year
    adult_steps = ADULT_YEARS * spy
    couples = [(p, state.persons[p.partner]) for p in state.persons.values()
               if p.gender == MALE and p.partner is not None]
    assigned = 0
    parentless: list[int] = []
    for child in [p for p in state.persons.values()
                  if p.age_steps < adult_steps]:
        cands = [m for m, wife in couples
                 if 4 * min(m.age_steps, wife.age_steps)
                 >= 4 * child.age_steps + 75 * spy
                 and wife.age_steps < 45 * spy + child.age_steps]
        if not cands:
            parentless.append(child.id)
            continue
        father = cands[rng.randrange(len(cands))]
        mother = state.persons[father.partner]
        child.father = father.id
        child.mother = mother.id
        father.children.add(child.id)
        mother.children.add(child.id)
        assigned += 1
    return assigned, parentless


def assign_housing(state: WorldState, rng: random.Random) -> int:
    """House each family unit together: a couple with their children, a
    single adult alone, a parentless child alone. Towns are drawn by density
    weight per unit; every unit lands in an empty (here: always fresh) house.
    Returns the number of houses created."""
    adult_steps = ADULT_YEARS * state.time.steps_per_year
    towns = [state.towns[tid] for tid in sorted(state.towns)]
    for p in state.persons.values():
        if p.partner is not None:
            if p.gender != MALE:
                continue  # the male heads the couple's unit
            unit = [p, state.persons[p.partner]]
            unit.extend(state.persons[c] for c in sorted(p.children))
        elif p.age_steps >= adult_steps:
            unit = [p]
        elif p.father is None:
            unit = [p]
        else:
            continue  # children with parents move with the father's unit
        town = weighted_town(towns, rng)
        house = find_or_create_empty_house(state, town, rng)
        for q in unit:
            move_person(state, q, house)
    return len(state.houses)


def init_world(params: ModelParams, sim: SimulationParams, data,
               density: DensityMap, rng: random.Random,
               algorithm1_literal: bool = False) -> tuple[WorldState, InitReport]:
    """Build the starting world on a fresh RNG stream; see the module
    docstring for the draw order."""
    spy = sim.steps_per_year
    state = WorldState(time=SimTime(step_index=0, t0_year=sim.t0,
                                    steps_per_year=spy))
    state.towns = build_towns(density)
    targets = town_population_targets(params.initial_pop, density)
    for tid in sorted(targets):
        for _ in range(targets[tid]):
            state.add_person(gender="", age_steps=0, born_step=0)
    persons = list(state.persons.values())
    assign_genders(persons, rng)
    for p in persons:
        p.age_steps = sample_age(rng, spy)
        p.born_step = -p.age_steps
    couples, left_single = init_partnerships(state, params, rng,
                                             algorithm1_literal)
    assigned, parentless = assign_parents(state, rng)
    houses = assign_housing(state, rng)
    adult_steps = ADULT_YEARS * spy
    adults = sum(1 for p in persons if p.age_steps >= adult_steps)
    report = InitReport(
        per_town=targets,
        persons_total=len(persons),
        adults=adults,
        children=len(persons) - adults,
        couples=couples,
        males_left_single=left_single,
        children_assigned_parents=assigned,
        parentless_children=tuple(parentless),
        houses_created=houses,
    )
    return state, report
