"""Dual-scorer label fusion and labeling-schedule planning.

Two recorded scorers feed the funnel: scorer_A emits integers in 0..100,
scorer_B reals in 0..5. A user is a bot when both scorers agree above their
bot thresholds or when the account is suspended; normal when both agree below
the normal thresholds and the account is not suspended; anything else
(disagreement, mid-band score, missing scorer) stays unlabeled.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import datetime
from itertools import permutations
from pathlib import Path
from typing import Iterable, Mapping

from .corpus import CorpusView, parse_timestamp

SCORER_A = "scorer_A"
SCORER_B = "scorer_B"
SCORE_RANGES: dict[str, tuple[float, float]] = {
    SCORER_A: (0.0, 100.0),
    SCORER_B: (0.0, 5.0),
}

BOT = "bot"
NORMAL = "normal"
MID = "mid"
UNLABELED = "unlabeled"


class LabelingError(Exception):
    pass


@dataclass(frozen=True)
class ScorerOutput:
    scorer_id: str
    user_id: str
    score: float
    queried_at: datetime | None = None

    def __post_init__(self):
        if self.scorer_id not in SCORE_RANGES:
            raise LabelingError(f"unknown scorer_id {self.scorer_id!r}")
        lo, hi = SCORE_RANGES[self.scorer_id]
        if not (lo <= self.score <= hi):
            raise LabelingError(
                f"score {self.score} out of range [{lo}, {hi}] for {self.scorer_id}")


@dataclass(frozen=True)
class FusionPolicy:
    """Thresholds are strict on both sides: a score equal to one is mid-band."""

    bot_threshold_a: float = 75.0
    normal_threshold_a: float = 25.0
    bot_threshold_b: float = 4.0
    normal_threshold_b: float = 1.0
    suspended_is_bot: bool = True

    def __post_init__(self):
        if not (self.normal_threshold_a < self.bot_threshold_a
                and self.normal_threshold_b < self.bot_threshold_b):
            raise LabelingError("normal threshold must lie below bot threshold")

    def thresholds(self, scorer_id: str) -> tuple[float, float]:
        if scorer_id == SCORER_A:
            return self.bot_threshold_a, self.normal_threshold_a
        if scorer_id == SCORER_B:
            return self.bot_threshold_b, self.normal_threshold_b
        raise LabelingError(f"unknown scorer_id {scorer_id!r}")


@dataclass(frozen=True)
class FusedLabel:
    user_id: str | None
    verdict: str
    provenance: frozenset[str]


def verdict_per_scorer(output: ScorerOutput, policy: FusionPolicy) -> str:
    """bot above the bot threshold, normal below the normal one, mid otherwise."""
    bot_thr, normal_thr = policy.thresholds(output.scorer_id)
    if output.score > bot_thr:
        return BOT
    if output.score < normal_thr:
        return NORMAL
    return MID


def _tag(prefix: str, output: ScorerOutput | None, policy: FusionPolicy) -> str:
    if output is None:
        return f"missing_{prefix}"
    return f"{prefix}_{verdict_per_scorer(output, policy)}"


def fuse(a: ScorerOutput | None, b: ScorerOutput | None, suspended: bool,
         policy: FusionPolicy, user_id: str | None = None) -> FusedLabel:
    """Total fusion of the two scorer verdicts and the suspension flag."""
    if user_id is None:
        for out in (a, b):
            if out is not None:
                user_id = out.user_id
                break
    tags = {_tag("A", a, policy), _tag("B", b, policy)}
    if suspended:
        tags.add("suspended")
    if suspended and policy.suspended_is_bot:
        verdict = BOT
    elif f"A_{BOT}" in tags and f"B_{BOT}" in tags:
        verdict = BOT
    elif f"A_{NORMAL}" in tags and f"B_{NORMAL}" in tags and not suspended:
        verdict = NORMAL
    else:
        verdict = UNLABELED
    return FusedLabel(user_id=user_id, verdict=verdict, provenance=frozenset(tags))


class RecordedScorerClient:
    """Replays a recorded score file behind a daily-quota and retry simulator.

    The live services are rate-limited and non-replayable, so the pipeline
    consumes recorded outputs; the simulator keeps the query-budget
    bookkeeping honest (elapsed days under the quota, transient failures
    retried until they succeed).
    """

    def __init__(self, scorer_id: str, scores: Mapping[str, ScorerOutput],
                 daily_quota: float | None = None, failure_rate: float = 0.0,
                 seed: int = 0):
        if scorer_id not in SCORE_RANGES:
            raise LabelingError(f"unknown scorer_id {scorer_id!r}")
        if not (0.0 <= failure_rate < 1.0):
            raise LabelingError("failure_rate must be in [0, 1)")
        self.scorer_id = scorer_id
        self.daily_quota = daily_quota
        self.failure_rate = failure_rate
        self.queries = 0
        self.retries = 0
        self._scores = dict(scores)
        self._rng = __import__("random").Random(seed)

    def query(self, user_id: str) -> ScorerOutput | None:
        while self.failure_rate and self._rng.random() < self.failure_rate:
            self.retries += 1  # transient failure: retry against the record
        self.queries += 1
        return self._scores.get(user_id)

    def recorded_users(self) -> set[str]:
        return set(self._scores)

    @property
    def days_elapsed(self) -> int:
        if self.queries == 0 or self.daily_quota is None:
            return 0
        if math.isinf(self.daily_quota):
            return 0
        return math.ceil(self.queries / self.daily_quota)


def _as_client(scorer_id: str, source) -> RecordedScorerClient:
    if isinstance(source, RecordedScorerClient):
        return source
    return RecordedScorerClient(scorer_id, source)


@dataclass
class FunnelReport:
    input_users: int = 0
    a_bot: int = 0
    a_normal: int = 0
    a_mid: int = 0
    a_missing: int = 0
    forwarded: int = 0
    b_bot_agree: int = 0
    b_normal_agree: int = 0
    suspended: int = 0
    final_bot: int = 0
    final_normal: int = 0
    unlabeled: int = 0
    unknown_score_users: int = 0
    a_days: int = 0
    b_days: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _user_ids(users: CorpusView | Iterable[str]) -> list[str]:
    if isinstance(users, CorpusView):
        return sorted(users.accounts)
    return sorted(users)


def run_funnel(users: CorpusView | Iterable[str],
               scores_a: Mapping[str, ScorerOutput] | RecordedScorerClient,
               scores_b: Mapping[str, ScorerOutput] | RecordedScorerClient,
               suspended_ids: Iterable[str],
               policy: FusionPolicy | None = None) -> tuple[list[FusedLabel], FunnelReport]:
    """Stage the scorers over the user set and fuse per-user verdicts.

    Scorer A is consulted first; only its bot/normal verdicts are forwarded
    to scorer B (mid and unscored users are never B-queried). Suspension
    applies to every input user. Score entries for users outside the input
    set are counted and skipped. Plain score mappings are wrapped in
    quota-free RecordedScorerClients; pass configured clients to also get
    elapsed-day estimates in the report.
    """
    policy = policy or FusionPolicy()
    client_a = _as_client(SCORER_A, scores_a)
    client_b = _as_client(SCORER_B, scores_b)
    ids = _user_ids(users)
    id_set = set(ids)
    suspended = set(suspended_ids)
    report = FunnelReport(input_users=len(ids))
    report.unknown_score_users = len(
        (client_a.recorded_users() | client_b.recorded_users()) - id_set)
    report.suspended = len(suspended & id_set)

    labels: list[FusedLabel] = []
    for uid in ids:
        a = client_a.query(uid)
        if a is None:
            report.a_missing += 1
            a_verdict = None
        else:
            a_verdict = verdict_per_scorer(a, policy)
            if a_verdict == BOT:
                report.a_bot += 1
            elif a_verdict == NORMAL:
                report.a_normal += 1
            else:
                report.a_mid += 1
        forwarded = a_verdict in (BOT, NORMAL)
        b = client_b.query(uid) if forwarded else None
        if forwarded:
            report.forwarded += 1
        label = fuse(a, b, uid in suspended, policy, user_id=uid)
        if b is not None:
            b_verdict = verdict_per_scorer(b, policy)
            if a_verdict == BOT and b_verdict == BOT:
                report.b_bot_agree += 1
            elif a_verdict == NORMAL and b_verdict == NORMAL:
                report.b_normal_agree += 1
        if label.verdict == BOT:
            report.final_bot += 1
        elif label.verdict == NORMAL:
            report.final_normal += 1
        else:
            report.unlabeled += 1
        labels.append(label)
    report.a_days = client_a.days_elapsed
    report.b_days = client_b.days_elapsed
    return labels, report


@dataclass(frozen=True)
class StagePlan:
    scorer_id: str
    daily_quota: float | None
    input_size: int
    days: int


@dataclass
class QuotaPlan:
    orderings: dict[tuple[str, ...], tuple[StagePlan, ...]]
    totals: dict[tuple[str, ...], int]
    recommended: tuple[str, ...]

    @property
    def recommended_days(self) -> int:
        return self.totals[self.recommended]

    def to_json(self) -> str:
        payload = {
            "orderings": {
                "->".join(order): [stage.__dict__ for stage in stages]
                for order, stages in self.orderings.items()
            },
            "totals": {"->".join(order): d for order, d in self.totals.items()},
            "recommended": "->".join(self.recommended),
            "recommended_days": self.recommended_days,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _stage_days(n: int, quota: float | None) -> int:
    if n == 0:
        return 0
    if quota is None or math.isinf(quota):
        return 0
    if quota <= 0:
        raise LabelingError("daily quota must be positive")
    return math.ceil(n / quota)


def plan_labeling(n_users: int, quotas: Mapping[str, float | None],
                  survivor_ratio: float) -> QuotaPlan:
    """Estimate days per scorer ordering and recommend the fastest one.

    Stage 1 sees all ``n_users``; stage 2 sees ``round(n_users * survivor_ratio)``
    survivors. Per-stage days are ceil(input / quota); an unlimited quota
    (None or inf) contributes zero days.
    """
    if n_users < 0:
        raise LabelingError("n_users must be nonnegative")
    if not (0.0 <= survivor_ratio <= 1.0):
        raise LabelingError("survivor_ratio must be in [0, 1]")
    for quota in quotas.values():
        if quota is not None and not math.isinf(quota) and quota <= 0:
            raise LabelingError("daily quota must be positive")
    survivors = int(round(n_users * survivor_ratio))
    orderings: dict[tuple[str, ...], tuple[StagePlan, ...]] = {}
    totals: dict[tuple[str, ...], int] = {}
    for order in permutations(sorted(quotas)):
        stages = []
        sizes = [n_users, survivors] + [survivors] * max(0, len(order) - 2)
        for scorer_id, size in zip(order, sizes):
            quota = quotas[scorer_id]
            stages.append(StagePlan(scorer_id=scorer_id, daily_quota=quota,
                                    input_size=size, days=_stage_days(size, quota)))
        orderings[order] = tuple(stages)
        totals[order] = sum(s.days for s in stages)
    recommended = min(totals, key=lambda order: (totals[order], order))
    return QuotaPlan(orderings=orderings, totals=totals, recommended=recommended)


def load_score_file(path: str | Path) -> dict[str, dict[str, ScorerOutput]]:
    """Read a CSV of (user_id, scorer_id, score, queried_at) rows, keyed by scorer."""
    out: dict[str, dict[str, ScorerOutput]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            queried = parse_timestamp(row["queried_at"]) if row.get("queried_at") else None
            rec = ScorerOutput(scorer_id=row["scorer_id"], user_id=row["user_id"],
                               score=float(row["score"]), queried_at=queried)
            out.setdefault(rec.scorer_id, {})[rec.user_id] = rec
    return out


def write_score_file(path: str | Path, outputs: Iterable[ScorerOutput]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "scorer_id", "score", "queried_at"])
        for out in sorted(outputs, key=lambda o: (o.user_id, o.scorer_id)):
            queried = out.queried_at.isoformat() if out.queried_at else ""
            writer.writerow([out.user_id, out.scorer_id, repr(float(out.score)), queried])


def load_suspension_file(path: str | Path) -> set[str]:
    ids = set()
    for line in Path(path).read_text("utf-8").splitlines():
        line = line.strip()
        if line:
            ids.add(line)
    return ids


def write_label_table(path: str | Path, labels: Iterable[FusedLabel]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "verdict", "provenance"])
        for label in sorted(labels, key=lambda l: l.user_id or ""):
            writer.writerow([label.user_id, label.verdict, "|".join(sorted(label.provenance))])


def load_label_table(path: str | Path) -> list[FusedLabel]:
    labels = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            tags = frozenset(t for t in row["provenance"].split("|") if t)
            labels.append(FusedLabel(user_id=row["user_id"], verdict=row["verdict"],
                                     provenance=tags))
    return labels
