"""Domain types shared by every other module: persons, houses, towns, time,
parameters, and the error hierarchy."""
from __future__ import annotations

from dataclasses import dataclass, field

MALE = "male"
FEMALE = "female"

ADULT_YEARS = 18

# clock-rate labels -> steps per year
STEPS_PER_YEAR = {"monthly": 12, "weekly": 52, "daily": 365, "hourly": 8760}


class SimulationError(Exception):
    """Base for all errors raised by this package."""


class ConfigError(SimulationError):
    """Bad run configuration: unknown key, out-of-range value, bad syntax."""


class DataFormatError(SimulationError):
    """Malformed input data file (fertility table, density map)."""


class IntegrityError(SimulationError):
    """World state violates a structural invariant."""


class MissingSnapshotError(SimulationError):
    """Temporal query needs a snapshot that was never frozen."""


class AssumptionFailure(SimulationError):
    """A registered assumption was violated while running in fail mode."""


def resolve_steps_per_year(delta_t: str | int) -> int:
    """Map a clock-rate label (or explicit positive step count) to N per year."""
    if isinstance(delta_t, bool):
        raise ConfigError(f"bad delta_t: {delta_t!r}")
    if isinstance(delta_t, int):
        if delta_t <= 0:
            raise ConfigError(f"delta_t must be positive, got {delta_t}")
        return delta_t
    label = str(delta_t).strip().lower()
    if label in STEPS_PER_YEAR:
        return STEPS_PER_YEAR[label]
    if label.isdigit() and int(label) > 0:
        return int(label)
    raise ConfigError(f"unknown delta_t {delta_t!r}; expected one of "
                      f"{sorted(STEPS_PER_YEAR)} or a positive integer")


@dataclass(slots=True)
class SimTime:
    """Simulation clock: integer steps since t0, at steps_per_year per year."""
    step_index: int
    t0_year: int
    steps_per_year: int

    @property
    def year(self) -> int:
        return self.t0_year + self.step_index // self.steps_per_year


@dataclass(slots=True)
class SimulationParams:
    t0: int = 2020
    t_final: int = 2030
    delta_t: str | int = "daily"
    seed: int | str = "random"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.t_final <= self.t0:
            raise ConfigError(f"t_final ({self.t_final}) must exceed t0 ({self.t0})")
        resolve_steps_per_year(self.delta_t)

    @property
    def steps_per_year(self) -> int:
        return resolve_steps_per_year(self.delta_t)


@dataclass(slots=True)
class ModelParams:
    """Model-level constants. Rates are per-year probabilities."""
    basic_divorce_rate: float = 0.06
    basic_death_rate: float = 0.0001
    basic_male_marriage_rate: float = 0.7
    female_age_death_rate: float = 0.00019
    female_age_scaling: float = 15.5
    initial_pop: int = 10000
    male_age_death_rate: float = 0.00021
    male_age_scaling: float = 14.0
    max_num_marr_cand: int = 100
    start_married_ratio: float = 0.8

    def __post_init__(self) -> None:
        for name in ("basic_divorce_rate", "basic_death_rate",
                     "basic_male_marriage_rate", "female_age_death_rate",
                     "male_age_death_rate"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.female_age_scaling <= 0 or self.male_age_scaling <= 0:
            raise ConfigError("age scalings must be > 0")
        if not 0 <= self.start_married_ratio <= 1:
            raise ConfigError("start_married_ratio must be in [0, 1]")
        if self.initial_pop < 0:
            raise ConfigError("initial_pop must be >= 0")
        if self.max_num_marr_cand <= 0:
            raise ConfigError("max_num_marr_cand must be positive")


@dataclass(frozen=True, slots=True)
class FertilityTable:
    """Per-year fertility probabilities indexed by (age row, year column)."""
    rows: tuple[tuple[float, ...], ...]
    age_offset: int
    year_offset: int

    def __post_init__(self) -> None:
        if not self.rows or not self.rows[0]:
            raise DataFormatError("fertility table is empty")
        width = len(self.rows[0])
        for r, row in enumerate(self.rows):
            if len(row) != width:
                raise DataFormatError(f"fertility row {r} has {len(row)} "
                                      f"columns, expected {width}")
            for value in row:
                if not 0.0 <= value <= 1.0:
                    raise DataFormatError(
                        f"fertility row {r} has value {value} outside [0, 1]")


@dataclass(slots=True)
class ModelData:
    """Input data: fertility table plus the two 16-entry decade modifiers."""
    fertility: FertilityTable
    divorce_modifier_by_decade: tuple[float, ...]
    male_marriage_modifier_by_decade: tuple[float, ...]

    def __post_init__(self) -> None:
        for name in ("divorce_modifier_by_decade",
                     "male_marriage_modifier_by_decade"):
            vec = tuple(getattr(self, name))
            setattr(self, name, vec)
            if len(vec) != 16:
                raise ConfigError(f"{name} must have 16 entries, got {len(vec)}")
            if any(v < 0 for v in vec):
                raise ConfigError(f"{name} entries must be >= 0")


@dataclass(slots=True)
class Person:
    id: int
    gender: str
    age_steps: int
    born_step: int
    alive: bool = True
    partner: int | None = None
    father: int | None = None
    mother: int | None = None
    children: set[int] = field(default_factory=set)
    # every partner this person ever had, in order; read only by verification
    ever_partners: list[int] = field(default_factory=list)
    house: int | None = None
    gave_birth: bool = False


@dataclass(slots=True)
class House:
    id: int
    town: int
    local_xy: tuple[int, int]
    occupants: set[int] = field(default_factory=set)


@dataclass(slots=True)
class Town:
    id: int
    grid_xy: tuple[int, int]
    density: float
    houses: set[int] = field(default_factory=set)


@dataclass(slots=True)
class WorldState:
    persons: dict[int, Person] = field(default_factory=dict)
    houses: dict[int, House] = field(default_factory=dict)
    towns: dict[int, Town] = field(default_factory=dict)
    time: SimTime = field(default_factory=lambda: SimTime(0, 2020, 365))
    next_person_id: int = 0
    next_house_id: int = 0

    def add_person(self, gender: str, age_steps: int, born_step: int,
                   father: int | None = None, mother: int | None = None) -> Person:
        pid = self.next_person_id
        self.next_person_id = pid + 1
        person = Person(id=pid, gender=gender, age_steps=age_steps,
                        born_step=born_step, father=father, mother=mother)
        self.persons[pid] = person
        return person

    def allocate_house_id(self) -> int:
        hid = self.next_house_id
        self.next_house_id = hid + 1
        return hid

    def alive_persons(self):
        """Alive persons in ascending id order (dict preserves creation order)."""
        return (p for p in self.persons.values() if p.alive)


def age_years(person: Person, time: SimTime) -> float:
    return person.age_steps / time.steps_per_year


def is_adult(person: Person, time: SimTime) -> bool:
    return person.age_steps >= ADULT_YEARS * time.steps_per_year


def link_partners(a: Person, b: Person) -> None:
    a.partner = b.id
    b.partner = a.id
    a.ever_partners.append(b.id)
    b.ever_partners.append(a.id)


def unlink_partners(state: WorldState, person: Person) -> None:
    """Clear the partnership on both sides; no-op for a single person."""
    if person.partner is None:
        return
    other = state.persons[person.partner]
    other.partner = None
    person.partner = None


def validate_world(state: WorldState) -> list[str]:
    """Referential-integrity sweep. Returns one message per broken rule,
    empty when every structural invariant holds."""
    problems: list[str] = []
    adult_steps = ADULT_YEARS * state.time.steps_per_year
    for pid, p in state.persons.items():
        if p.father is not None and p.father == p.mother:
            problems.append(f"father equals mother: p{pid}")
        for label, ref in (("father", p.father), ("mother", p.mother)):
            if ref is not None and ref not in state.persons:
                problems.append(f"dangling {label} ref: p{pid}")
        if pid in p.children:
            problems.append(f"person is own child: p{pid}")
        for cid in p.children:
            child = state.persons.get(cid)
            if child is None:
                problems.append(f"dangling child ref: p{pid}")
            elif pid not in (child.father, child.mother):
                problems.append(f"child link not reciprocated: p{pid} -> p{cid}")
        if p.partner is not None:
            other = state.persons.get(p.partner)
            if other is None:
                problems.append(f"dangling partner ref: p{pid}")
            else:
                if other.partner != pid:
                    problems.append(f"partnership not symmetric: p{pid}")
                if other.gender == p.gender:
                    problems.append(f"partners share gender: p{pid}")
                if p.age_steps < adult_steps:
                    problems.append(f"married minor: p{pid}")
        if p.alive:
            if p.house is None:
                problems.append(f"alive person without house: p{pid}")
            elif p.house not in state.houses:
                problems.append(f"dangling house ref: p{pid}")
            elif pid not in state.houses[p.house].occupants:
                problems.append(f"occupant set misses resident: p{pid}")
        elif p.house is not None:
            problems.append(f"dead person keeps house: p{pid}")
    for hid, h in state.houses.items():
        if h.town not in state.towns:
            problems.append(f"dangling town ref: h{hid}")
        elif hid not in state.towns[h.town].houses:
            problems.append(f"town house set misses house: h{hid}")
        if not (1 <= h.local_xy[0] <= 25 and 1 <= h.local_xy[1] <= 25):
            problems.append(f"house coordinates out of range: h{hid}")
        for pid in h.occupants:
            occ = state.persons.get(pid)
            if occ is None or not occ.alive or occ.house != hid:
                problems.append(f"stale occupant p{pid}: h{hid}")
    for tid, t in state.towns.items():
        if t.density <= 0:
            problems.append(f"town without density: t{tid}")
        for hid in t.houses:
            if hid not in state.houses:
                problems.append(f"dangling house ref: t{tid}")
    return problems
