"""Hierarchical tracking/functional classification.

Requests are tallied per entity at domain granularity first; entities
whose log10(tracking/functional) ratio lies inside (-tau, tau) are
mixed, and their requests flow to the next finer granularity
(hostname, then initiator script, then initiator method).  Requests of
mixed methods end up in the residual.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .attribution import (
    EntityKey,
    Granularity,
    NotScriptInitiated,
    initiator_method,
    initiator_script,
)
from .filters import Label
from .psl import PublicSuffixList, UrlError, decompose_url
from .trace import RequestRecord

LEVEL_ORDER = (
    Granularity.DOMAIN,
    Granularity.HOSTNAME,
    Granularity.SCRIPT,
    Granularity.METHOD,
)

DEFAULT_THRESHOLD = 2.0


class Verdict(enum.Enum):
    TRACKING = "tracking"
    FUNCTIONAL = "functional"
    MIXED = "mixed"


def ratio(tracking_count: int, functional_count: int) -> float:
    """log10(tracking/functional) with +-inf for one-sided entities."""
    if tracking_count < 0 or functional_count < 0:
        raise ValueError("counts must be non-negative")
    if tracking_count == 0 and functional_count == 0:
        raise ValueError("entity unobserved: both counts are zero")
    if functional_count == 0:
        return math.inf
    if tracking_count == 0:
        return -math.inf
    return math.log10(tracking_count / functional_count)


def verdict_for(r: float, tau: float) -> Verdict:
    """Tracking at ratio >= tau, functional at <= -tau (boundaries are
    pure), mixed strictly inside."""
    if r >= tau:
        return Verdict.TRACKING
    if r <= -tau:
        return Verdict.FUNCTIONAL
    return Verdict.MIXED


@dataclass(frozen=True)
class EntityStats:
    key: EntityKey
    tracking_count: int
    functional_count: int
    ratio: float
    verdict: Verdict


@dataclass(frozen=True)
class RequestDiagnostic:
    request_id: str
    reason: str


@dataclass
class LevelResult:
    granularity: Granularity
    entering: int  # requests entering this level
    entities: list[EntityStats]
    attribution: dict[str, EntityKey]  # request_id -> entity at this level
    tracking_requests: int
    functional_requests: int
    mixed_requests: int
    diagnostics: list[RequestDiagnostic] = field(default_factory=list)

    @property
    def separation_factor(self) -> Optional[Fraction]:
        if self.entering == 0:
            return None
        return Fraction(self.tracking_requests + self.functional_requests, self.entering)


@dataclass
class SiftResult:
    tau: float
    total_requests: int  # script-initiated requests entering the pipeline
    levels: list[LevelResult]
    residual_ids: list[str]  # sorted request_ids left unattributed
    diagnostics: list[RequestDiagnostic] = field(default_factory=list)

    def cumulative_separation(self, level_index: int) -> Optional[Fraction]:
        if self.total_requests == 0:
            return None
        attributed = sum(
            lvl.tracking_requests + lvl.functional_requests
            for lvl in self.levels[: level_index + 1]
        )
        return Fraction(attributed, self.total_requests)


LabeledRecord = tuple[RequestRecord, Label]
Keyer = Callable[[RequestRecord], EntityKey]


def entity_keyer(
    granularity: Granularity, psl: PublicSuffixList, positional_identity: bool = False
) -> Keyer:
    """Key-derivation function for one granularity level."""
    if granularity == Granularity.DOMAIN:
        return lambda rec: EntityKey(
            Granularity.DOMAIN, decompose_url(rec.url, psl).registrable_domain
        )
    if granularity == Granularity.HOSTNAME:
        return lambda rec: EntityKey(Granularity.HOSTNAME, decompose_url(rec.url, psl).hostname)
    if granularity == Granularity.SCRIPT:
        return initiator_script
    return lambda rec: initiator_method(rec, positional_identity)


@dataclass
class LevelOutcome:
    result: LevelResult
    mixed_records: list[LabeledRecord]  # flow to the next level, order preserved
    residual: list[LabeledRecord]  # key-derivation failures


def classify_level(
    labeled: Sequence[LabeledRecord],
    granularity: Granularity,
    tau: float,
    keyer: Keyer,
) -> LevelOutcome:
    """Attribute each request to one entity, tally, and apply verdicts."""
    tallies: dict[EntityKey, list[int]] = {}
    keyed: list[tuple[RequestRecord, Label, EntityKey]] = []
    diagnostics: list[RequestDiagnostic] = []
    residual: list[LabeledRecord] = []
    for rec, label in labeled:
        try:
            key = keyer(rec)
        except (UrlError, NotScriptInitiated) as exc:
            diagnostics.append(RequestDiagnostic(rec.request_id, str(exc)))
            residual.append((rec, label))
            continue
        keyed.append((rec, label, key))
        t = tallies.setdefault(key, [0, 0])
        t[0 if label == Label.TRACKING else 1] += 1

    entities = []
    verdicts: dict[EntityKey, Verdict] = {}
    for key in sorted(tallies, key=lambda k: (k.as_text())):
        t, f = tallies[key]
        r = ratio(t, f)
        v = verdict_for(r, tau)
        verdicts[key] = v
        entities.append(EntityStats(key, t, f, r, v))

    attribution: dict[str, EntityKey] = {}
    counts = {Verdict.TRACKING: 0, Verdict.FUNCTIONAL: 0, Verdict.MIXED: 0}
    mixed_records: list[LabeledRecord] = []
    for rec, label, key in keyed:
        attribution[rec.request_id] = key
        v = verdicts[key]
        counts[v] += 1
        if v == Verdict.MIXED:
            mixed_records.append((rec, label))

    result = LevelResult(
        granularity=granularity,
        entering=len(labeled),
        entities=entities,
        attribution=attribution,
        tracking_requests=counts[Verdict.TRACKING],
        functional_requests=counts[Verdict.FUNCTIONAL],
        mixed_requests=counts[Verdict.MIXED],
        diagnostics=diagnostics,
    )
    return LevelOutcome(result=result, mixed_records=mixed_records, residual=residual)


def sift(
    labeled: Sequence[LabeledRecord],
    tau: float,
    psl: PublicSuffixList,
    positional_identity: bool = False,
) -> SiftResult:
    """Run all four levels; requests of mixed methods become residual."""
    if any(not rec.script_initiated for rec, _ in labeled):
        raise ValueError("sift requires script-initiated records only")
    current: list[LabeledRecord] = list(labeled)
    levels: list[LevelResult] = []
    residual: list[LabeledRecord] = []
    diagnostics: list[RequestDiagnostic] = []
    for granularity in LEVEL_ORDER:
        outcome = classify_level(
            current, granularity, tau, entity_keyer(granularity, psl, positional_identity)
        )
        levels.append(outcome.result)
        diagnostics.extend(outcome.result.diagnostics)
        residual.extend(outcome.residual)
        current = outcome.mixed_records
    residual.extend(current)  # mixed-method requests
    return SiftResult(
        tau=tau,
        total_requests=len(labeled),
        levels=levels,
        residual_ids=sorted(rec.request_id for rec, _ in residual),
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class SweepPoint:
    tau: float
    mixed_entities: int
    total_entities: int
    mixed_keys: tuple[EntityKey, ...]

    @property
    def percent_mixed(self) -> Optional[float]:
        if self.total_entities == 0:
            return None
        return 100.0 * self.mixed_entities / self.total_entities


def threshold_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid; endpoints included up to rounding."""
    if step <= 0 or stop < start:
        raise ValueError("grid requires step > 0 and stop >= start")
    n = int(round((stop - start) / step))
    grid = [round(start + i * step, 10) for i in range(n + 1)]
    if grid[-1] > stop + 1e-9:
        grid.pop()
    return grid


def sweep(
    labeled: Sequence[LabeledRecord],
    tau_grid: Sequence[float],
    granularity: Granularity,
    psl: PublicSuffixList,
    base_tau: float = DEFAULT_THRESHOLD,
    positional_identity: bool = False,
) -> list[SweepPoint]:
    """Threshold sensitivity at one granularity.

    The per-entity tallies are computed once, from the requests that
    enter the chosen level under the base threshold; each grid value
    then only re-applies verdicts.  This keeps the mixed set monotone
    in tau by construction.
    """
    if not tau_grid:
        raise ValueError("empty threshold grid")
    if any(t <= 0 for t in tau_grid):
        raise ValueError("grid thresholds must be > 0")
    if list(tau_grid) != sorted(tau_grid):
        raise ValueError("grid must be sorted ascending")

    current: Sequence[LabeledRecord] = list(labeled)
    for lvl in LEVEL_ORDER:
        if lvl == granularity:
            break
        outcome = classify_level(
            current, lvl, base_tau, entity_keyer(lvl, psl, positional_identity)
        )
        current = outcome.mixed_records
    outcome = classify_level(
        current, granularity, base_tau, entity_keyer(granularity, psl, positional_identity)
    )

    points = []
    for tau in tau_grid:
        mixed = tuple(
            e.key for e in outcome.result.entities if verdict_for(e.ratio, tau) == Verdict.MIXED
        )
        points.append(
            SweepPoint(
                tau=tau,
                mixed_entities=len(mixed),
                total_entities=len(outcome.result.entities),
                mixed_keys=mixed,
            )
        )
    return points
