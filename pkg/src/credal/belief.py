"""Mass functions over a finite frame of classes.

Focal sets are integer bit patterns: bit ``i`` set means class ``i`` is a
member. The full pattern ``(1 << c) - 1`` is the ignorance set Omega.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

MAX_CLASSES = 64
PRUNE_BELOW = 1e-12
SUM_TOL = 1e-9
CONFLICT_LIMIT = 1.0 - 1e-12
TIE_TOL = 1e-12


class TotalConflictError(ValueError):
    """Raised when Dempster's rule meets a (numerically) total conflict."""


class NothingToRedistributeError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(lab) for lab in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("frame needs at least one class")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate class labels in frame: {labels}")
        if len(labels) > MAX_CLASSES:
            raise ValueError(f"at most {MAX_CLASSES} classes supported, got {len(labels)}")

    @property
    def c(self) -> int:
        return len(self.labels)

    @property
    def omega(self) -> int:
        return (1 << self.c) - 1

    def singleton(self, index: int) -> int:
        if not 0 <= index < self.c:
            raise IndexError(f"class index {index} outside frame of size {self.c}")
        return 1 << index

    def union(self, indices: Iterable[int]) -> int:
        bits = 0
        for i in indices:
            bits |= self.singleton(i)
        return bits

    def members(self, focal: int) -> list[int]:
        return [i for i in range(self.c) if focal >> i & 1]

    def focal_from_labels(self, labels: Sequence[str] | str) -> int:
        if labels == "OMEGA":
            return self.omega
        return self.union(self.labels.index(lab) for lab in labels)

    def describe(self, focal: int) -> str:
        if focal == self.omega:
            return "OMEGA"
        return "{" + ",".join(self.labels[i] for i in self.members(focal)) + "}"


def cardinality(focal: int) -> int:
    return focal.bit_count()


@dataclass(frozen=True)
class MassFunction:
    """Normalized mass assignment; zero and sub-``PRUNE_BELOW`` entries are dropped."""

    frame: Frame
    masses: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        omega = self.frame.omega
        clean: dict[int, float] = {}
        for focal, mass in self.masses.items():
            focal = int(focal)
            mass = float(mass)
            if focal == 0:
                if mass > PRUNE_BELOW:
                    raise ValueError("empty set cannot carry mass in a normalized mass function")
                continue
            if focal & ~omega:
                raise ValueError(f"focal set {focal:#b} is not a subset of the frame")
            if mass < -SUM_TOL or mass > 1.0 + SUM_TOL:
                raise ValueError(f"mass {mass} outside [0, 1]")
            if mass > PRUNE_BELOW:
                clean[focal] = clean.get(focal, 0.0) + mass
        total = math.fsum(clean.values())
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"masses sum to {total}, expected 1")
        object.__setattr__(self, "masses", clean)

    def __getitem__(self, focal: int) -> float:
        return self.masses.get(focal, 0.0)

    def __iter__(self):
        return iter(self.masses)

    def __len__(self) -> int:
        return len(self.masses)

    def items(self):
        return self.masses.items()

    @property
    def total(self) -> float:
        return math.fsum(self.masses.values())

    def singleton_masses(self) -> list[float]:
        return [self[1 << i] for i in range(self.frame.c)]

    def to_records(self) -> list[dict]:
        """List of ``{"focal": labels | "OMEGA", "mass": float}`` with 12 significant digits."""
        frame = self.frame
        records = []
        for focal in sorted(self.masses, key=lambda f: (cardinality(f), f)):
            name = "OMEGA" if focal == frame.omega else [frame.labels[i] for i in frame.members(focal)]
            records.append({"focal": name, "mass": float(f"{self.masses[focal]:.12g}")})
        return records

    @classmethod
    def from_records(cls, frame: Frame, records: Iterable[Mapping]) -> MassFunction:
        masses: dict[int, float] = {}
        for rec in records:
            focal = frame.focal_from_labels(rec["focal"])
            masses[focal] = masses.get(focal, 0.0) + float(rec["mass"])
        return normalized(frame, masses)

    def __str__(self) -> str:
        body = ", ".join(f"{self.frame.describe(f)}: {m:.4f}" for f, m in
                         sorted(self.masses.items(), key=lambda kv: (cardinality(kv[0]), kv[0])))
        return f"m({body})"


def normalized(frame: Frame, masses: Mapping[int, float]) -> MassFunction:
    """Build a MassFunction after pruning and rescaling ``masses`` to total one."""
    kept = {f: m for f, m in masses.items() if f and m > PRUNE_BELOW}
    total = math.fsum(kept.values())
    if total <= 0.0:
        raise ValueError("no positive mass to normalize")
    return MassFunction(frame, {f: m / total for f, m in kept.items()})


def vacuous(frame: Frame) -> MassFunction:
    return MassFunction(frame, {frame.omega: 1.0})


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def make_simple_bba(frame: Frame, class_index: int, mass: float) -> MassFunction:
    """Simple support function ``{w_g: mass, Omega: 1 - mass}``."""
    mass = _check_unit("mass", mass)
    singleton = frame.singleton(class_index)
    if singleton == frame.omega:
        return vacuous(frame)
    return MassFunction(frame, {singleton: mass, frame.omega: 1.0 - mass})


def _conjunctive(m1: MassFunction, m2: MassFunction) -> tuple[dict[int, float], float]:
    out: dict[int, float] = {}
    conflict = 0.0
    for b, mb in m1.masses.items():
        for c, mc in m2.masses.items():
            a = b & c
            if a:
                out[a] = out.get(a, 0.0) + mb * mc
            else:
                conflict += mb * mc
    return out, conflict


def ds_combine(bbas: Sequence[MassFunction]) -> MassFunction:
    """Dempster's normalized conjunctive rule, folded left over ``bbas``."""
    if not bbas:
        raise ValueError("ds_combine needs at least one mass function")
    frame = bbas[0].frame
    for i, m in enumerate(bbas):
        if m.frame != frame:
            raise ValueError(f"mass function {i} is defined on a different frame")
    acc = bbas[0]
    for i, m in enumerate(bbas[1:], start=1):
        raw, conflict = _conjunctive(acc, m)
        if conflict >= CONFLICT_LIMIT:
            raise TotalConflictError(
                f"total conflict combining sources 0..{i - 1} with source {i} (conflict={conflict:.12g})")
        norm = 1.0 - conflict
        acc = normalized(frame, {a: v / norm for a, v in raw.items()})
    return acc


def discount(m: MassFunction, alpha: float) -> MassFunction:
    """Classical discounting: scale non-Omega masses by ``alpha``, move the rest to Omega."""
    alpha = _check_unit("alpha", alpha)
    omega = m.frame.omega
    out = {f: alpha * v for f, v in m.masses.items() if f != omega}
    out[omega] = 1.0 - math.fsum(out.values())
    return MassFunction(m.frame, out)


def ccai_fuse(simple_bbas: Sequence[MassFunction], classes: Sequence[int] | None = None) -> MassFunction:
    """Product-expansion fusion of simple support functions.

    Source ``k`` supports only class ``classes[k]`` (default: ``k``). Every
    subset S of sources receives ``prod_{k in S} a_k * prod_{k not in S} (1 - a_k)``
    on the union of their classes; the empty selection goes to Omega, as do
    products at or below the pruning threshold. The result sums to one
    without any normalization step.
    """
    if not simple_bbas:
        raise ValueError("ccai_fuse needs at least one mass function")
    frame = simple_bbas[0].frame
    if classes is None:
        classes = range(len(simple_bbas))
    classes = list(classes)
    if len(classes) != len(simple_bbas) or len(set(classes)) != len(classes):
        raise ValueError("classes must give one distinct class index per source")

    omega = frame.omega
    support: list[tuple[int, float]] = []
    for k, (g, m) in enumerate(zip(classes, simple_bbas)):
        if m.frame != frame:
            raise ValueError(f"mass function {k} is defined on a different frame")
        singleton = frame.singleton(g)
        for focal in m.masses:
            if focal not in (singleton, omega):
                raise ValueError(
                    f"source {k} must have focal elements {{w_{g}, Omega}} only, found {frame.describe(focal)}")
        support.append((singleton, m[singleton]))
    return _expand(frame, support)


def fuse_supports(frame: Frame, supports: Sequence[float]) -> MassFunction:
    """``ccai_fuse`` of the simple support functions ``{w_g: supports[g], Omega: rest}``."""
    if len(supports) != frame.c:
        raise ValueError(f"need one support per class ({frame.c}), got {len(supports)}")
    return _expand(frame, [(1 << g, _check_unit("support", a)) for g, a in enumerate(supports)])


def _expand(frame: Frame, support: Sequence[tuple[int, float]]) -> MassFunction:
    omega = frame.omega
    # grow the distribution one source at a time; key 0 stands for "no source selected"
    dist: dict[int, float] = {0: 1.0}
    for singleton, a in support:
        nxt: dict[int, float] = {}
        for focal, v in dist.items():
            if a > 0.0:
                key = focal | singleton
                nxt[key] = nxt.get(key, 0.0) + v * a
            if a < 1.0:
                nxt[focal] = nxt.get(focal, 0.0) + v * (1.0 - a)
        dist = nxt

    out: dict[int, float] = {omega: 0.0}
    for focal, v in dist.items():
        # sub-threshold products go to Omega so pruning never loses mass
        key = focal if focal and v > PRUNE_BELOW else omega
        out[key] = out.get(key, 0.0) + v
    return MassFunction(frame, out)


def redistribute_ignorance(m: MassFunction) -> MassFunction:
    """Move the Omega mass onto singletons in proportion to their current masses."""
    frame = m.frame
    omega = frame.omega
    singles = {f: v for f, v in m.masses.items() if f != omega and cardinality(f) == 1}
    total = math.fsum(singles.values())
    if total <= 0.0:
        raise NothingToRedistributeError("no positive singleton mass to receive the ignorance mass")
    extra = m[omega]
    out = {f: v for f, v in m.masses.items() if f != omega}
    for f, v in singles.items():
        out[f] = v + extra * v / total
    return normalized(frame, out)


def decide(m: MassFunction, include_omega: bool = False) -> int:
    """Hard credal decision: the focal set of maximal mass.

    Candidates are singletons and meta-classes; Omega is returned only when
    it is the sole focal element, unless ``include_omega`` is set. Ties go to
    the smaller set, then to the lower class indices.
    """
    if not m.masses:
        raise ValueError("cannot decide on an empty mass function")
    omega = m.frame.omega
    candidates = [f for f in m.masses if include_omega or f != omega] or [omega]
    best = max(m.masses[f] for f in candidates)
    tied = [f for f in candidates if m.masses[f] >= best - TIE_TOL]
    return min(tied, key=lambda f: (cardinality(f), m.frame.members(f)))
