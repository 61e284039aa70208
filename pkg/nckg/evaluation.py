# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""Scoring of review runs against an annotated clause set.

The risk-evaluation score is the macro-averaged F1 over the six risk
categories, each treated as an independent binary label. The risk-summary
score is the mean of human ratings read from a scores file.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import (
    Any,
    Collection,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

from nckg import utils
from nckg.construct import Clause
from nckg.exceptions import LengthMismatch, MissingVerdict
from nckg.ontology import RiskCategory, RiskType
from nckg.review import ReviewMode, RiskVerdict

__all__ = [
    "AnnotatedClause",
    "ConfusionCell",
    "LabelMetrics",
    "Report",
    "confusion",
    "metrics",
    "macro_f1",
    "evaluate_run",
    "load_gold",
    "load_verdicts",
    "load_rs_scores",
    "write_report",
]

log = logging.getLogger(__name__)

LABELS: Tuple[RiskCategory, ...] = tuple(RiskCategory)


def _categories(labels: Iterable[Any]) -> FrozenSet[RiskCategory]:
    found = set()
    for label in labels:
        category = (
            label if isinstance(label, RiskCategory) else RiskCategory.from_label(str(label))
        )
        if category is None:
            raise ValueError("Unknown risk category %r" % label)
        found.add(category)
    return frozenset(found)


@dataclass(frozen=True)
class AnnotatedClause(object):
    clause: Clause
    gold_categories: FrozenSet[RiskCategory]
    gold_risk_type: RiskType
    gold_summary: str = ""
    # Optional per-category risk types, overriding gold_risk_type
    risk_types: Mapping[RiskCategory, RiskType] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.gold_categories and self.gold_risk_type is not RiskType.NO_RISK:
            raise ValueError(
                "Clause %s has risk type %s but no category"
                % (self.clause.id, self.gold_risk_type.value)
            )

    @property
    def id(self) -> str:
        return self.clause.id

    def gold_pairs(self) -> FrozenSet[Tuple[RiskCategory, RiskType]]:
        return frozenset(
            (c, self.risk_types.get(c, self.gold_risk_type)) for c in self.gold_categories
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AnnotatedClause":
        risk_type = RiskType.from_label(str(data.get("risk_type", "")))
        if risk_type is None:
            raise ValueError("Invalid risk type %r" % data.get("risk_type"))
        categories = data.get("categories", [])
        if isinstance(categories, str):
            categories = [c for c in categories.split(";") if c.strip()]
        per_category: Dict[RiskCategory, RiskType] = {}
        for label, value in (data.get("risk_types") or {}).items():
            (category,) = _categories([label])
            parsed = RiskType.from_label(str(value))
            if parsed is None:
                raise ValueError("Invalid risk type %r for %s" % (value, label))
            per_category[category] = parsed
        return cls(
            clause=Clause.from_dict(data),
            gold_categories=_categories(categories),
            gold_risk_type=risk_type,
            gold_summary=str(data.get("summary", "")),
            risk_types=per_category,
        )


@dataclass(frozen=True)
class ConfusionCell(object):
    label: RiskCategory
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class LabelMetrics(object):
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> Dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def confusion(
    gold: Sequence[Collection[RiskCategory]],
    pred: Sequence[Collection[RiskCategory]],
) -> List[ConfusionCell]:
    """One cell per risk category, in declaration order.

    Raises:
        LengthMismatch: If ``gold`` and ``pred`` differ in length
    """
    if len(gold) != len(pred):
        raise LengthMismatch(
            "%d gold label sets against %d predicted" % (len(gold), len(pred))
        )
    cells = []
    for label in LABELS:
        tp = fp = tn = fn = 0
        for g, p in zip(gold, pred):
            if label in g:
                if label in p:
                    tp += 1
                else:
                    fn += 1
            elif label in p:
                fp += 1
            else:
                tn += 1
        cells.append(ConfusionCell(label, tp, fp, tn, fn))
    return cells


def _ratio(num: int, den: int, what: str, label: RiskCategory) -> float:
    if den == 0:
        log.debug("%s of %s has a zero denominator; using 0", what, label.value)
        return 0.0
    return num / den


def metrics(cell: ConfusionCell) -> LabelMetrics:
    precision = _ratio(cell.tp, cell.tp + cell.fp, "Precision", cell.label)
    recall = _ratio(cell.tp, cell.tp + cell.fn, "Recall", cell.label)
    if precision + recall == 0:
        log.debug("F1 of %s has a zero denominator; using 0", cell.label.value)
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return LabelMetrics(precision, recall, f1)


def macro_f1(cells: Sequence[ConfusionCell]) -> float:
    """Unweighted mean of the per-label F1 over all six categories."""
    by_label = {cell.label: cell for cell in cells}
    missing = [label.value for label in LABELS if label not in by_label]
    if missing:
        raise ValueError("No confusion cell for %s" % ", ".join(missing))
    return math.fsum(metrics(by_label[label]).f1 for label in LABELS) / len(LABELS)


@dataclass
class Report(object):
    mode: Optional[ReviewMode]
    n: int
    cells: List[ConfusionCell]
    per_label: Dict[RiskCategory, LabelMetrics]
    macro_f1: float
    rs_mean: Optional[float] = None
    # Share of clauses whose (category, risk type) pairs match gold exactly
    exact_match: float = 0.0
    unknown_labels: int = 0
    degraded: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value if self.mode else None,
            "n": self.n,
            "macro_f1": self.macro_f1,
            "rs_mean": self.rs_mean,
            "exact_match": self.exact_match,
            "unknown_labels": self.unknown_labels,
            "degraded": self.degraded,
            "per_label": {
                cell.label.value: dict(
                    self.per_label[cell.label].to_dict(),
                    tp=cell.tp,
                    fp=cell.fp,
                    tn=cell.tn,
                    fn=cell.fn,
                )
                for cell in self.cells
            },
        }

    def to_markdown(self) -> str:
        method = self.mode.value if self.mode else "mixed"
        rs = "%.1f" % self.rs_mean if self.rs_mean is not None else "--"
        lines = [
            "| Method | Clauses | RE-score(%) | RS-score(%) |",
            "|---|---:|---:|---:|",
            "| %s | %d | %.1f | %s |" % (method, self.n, self.macro_f1 * 100, rs),
            "",
            "| Label | Precision | Recall | F1 | TP | FP | TN | FN |",
            "|---|---:|---:|---:|---:|---:|---:|---:|",
        ]
        for cell in self.cells:
            m = self.per_label[cell.label]
            lines.append(
                "| %s | %.4f | %.4f | %.4f | %d | %d | %d | %d |"
                % (
                    cell.label.value,
                    m.precision,
                    m.recall,
                    m.f1,
                    cell.tp,
                    cell.fp,
                    cell.tn,
                    cell.fn,
                )
            )
        lines.append("")
        lines.append(
            "Exact category and risk-type agreement: %.1f%%; unknown labels: %d"
            % (self.exact_match * 100, self.unknown_labels)
        )
        return "\n".join(lines) + "\n"


def evaluate_run(
    dataset: Sequence[AnnotatedClause],
    verdicts: Iterable[RiskVerdict],
    rs_scores: Optional[Mapping[str, float]] = None,
) -> Report:
    """Score ``verdicts`` against ``dataset``; verdicts are matched by clause id.

    Raises:
        MissingVerdict: If a dataset clause has no verdict
    """
    by_id: Dict[str, RiskVerdict] = {}
    for verdict in verdicts:
        if verdict.clause_id in by_id:
            log.warning("Duplicate verdict for clause %s ignored", verdict.clause_id)
            continue
        by_id[verdict.clause_id] = verdict
    missing = [item.id for item in dataset if item.id not in by_id]
    if missing:
        raise MissingVerdict(missing)
    extra = sorted(set(by_id) - {item.id for item in dataset})
    if extra:
        log.warning("Ignoring verdicts for clauses outside the dataset: %s", ", ".join(extra))

    matched = [by_id[item.id] for item in dataset]
    cells = confusion(
        [item.gold_categories for item in dataset], [v.categories for v in matched]
    )
    per_label = {cell.label: metrics(cell) for cell in cells}

    exact = sum(
        1
        for item, verdict in zip(dataset, matched)
        if item.gold_pairs()
        == {(a.category, a.risk_type) for a in verdict.assessments if a.is_known}
    )
    modes = {v.mode for v in matched}

    rs_mean = None
    if rs_scores:
        wanted = [rs_scores[item.id] for item in dataset if item.id in rs_scores]
        if wanted:
            rs_mean = math.fsum(wanted) / len(wanted)
        else:
            log.warning("No RS score matches a dataset clause")

    return Report(
        mode=modes.pop() if len(modes) == 1 else None,
        n=len(dataset),
        cells=cells,
        per_label=per_label,
        macro_f1=macro_f1(cells),
        rs_mean=rs_mean,
        exact_match=exact / len(dataset) if dataset else 0.0,
        unknown_labels=sum(len(v.unknown_labels) for v in matched),
        degraded=sum(1 for v in matched if v.degraded_from is not None),
    )


def _load(path: str, build: Any, what: str) -> List[Any]:
    items = []
    for lineno, record in utils.iter_jsonl(path):
        try:
            if isinstance(record, Exception):
                raise record
            items.append(build(record))
        except ValueError as e:
            raise ValueError("%s:%d: invalid %s: %s" % (path, lineno, what, e)) from e
    return items


def load_gold(path: str) -> List[AnnotatedClause]:
    """Read gold JSONL: ``{"id", "text", "categories", "risk_type", "summary"}``."""
    return _load(path, AnnotatedClause.from_dict, "gold record")


def load_verdicts(path: str) -> List[RiskVerdict]:
    return _load(path, RiskVerdict.from_dict, "verdict")


def _score(record: Mapping[str, Any]) -> Tuple[str, float]:
    try:
        score = float(record["score"])
        clause_id = str(record["id"])
    except (KeyError, TypeError) as e:
        raise ValueError("needs 'id' and a numeric 'score'") from e
    if not 0 <= score <= 100:
        raise ValueError("score %s outside 0..100" % score)
    return clause_id, score


def load_rs_scores(path: str) -> Dict[str, float]:
    """Read human summary ratings: ``{"id", "score"}`` per line, in percent."""
    return dict(_load(path, _score, "score"))


def write_report(report: Report, output_dir: str) -> Tuple[str, str]:
    json_path = os.path.join(output_dir, "report.json")
    md_path = os.path.join(output_dir, "report.md")
    utils.write_json(json_path, report.to_dict())
    utils.atomic_write(md_path, report.to_markdown())
    return json_path, md_path
