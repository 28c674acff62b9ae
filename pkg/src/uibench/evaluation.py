"""Scoring predictions for every benchmark task.

Metric routing by task: exact string match for text reading, canonicalized
class accuracy for icon/widget classification, IoU-thresholded box
accuracy for locate tasks, consensus caption scoring for summaries and
captions, positive-class F1 for tappability, and LLM-judge score ratios
for the free-form tasks.  Per-task scores roll up into grouped averages
with a platform split; the widget listing task is scored but kept out of
the grounding average as an auxiliary task.
"""

from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .cider import CIDER_VARIANT, cider_scores
from .geometry import BBoxTokenError, NormBBox, iou_norm, parse_bbox_token, scan_bbox_tokens
from .grouping import canonicalize_type
from .llm import LlmClient
from .prompts import ADVANCED_TASKS
from .taskgen import TaskSample

IOU_THRESHOLD = 0.5

REFERRING_AVG_TASKS = ("ocr", "icon_recognition", "widget_classification")
GROUNDING_AVG_TASKS = ("find_text", "find_icon", "find_widget")  # listing is auxiliary
AGGREGATE_PLATFORMS = ("iphone", "android")

_NUMBER_RE = re.compile(r"(\d+(?:\.\d+)?)")


class JudgeParseError(ValueError):
    """Judge reply contained no numeric score."""


class DegenerateLabelError(ValueError):
    """Label judge score is not positive; ratio undefined."""


@dataclass
class EvalRecord:
    """One prediction joined with its ground truth."""

    sample_id: str
    task: str
    prediction: str
    label: str
    pred_regions: tuple[NormBBox, ...] | None = None
    label_regions: tuple[NormBBox, ...] | None = None
    judge_scores: tuple[float, float] | None = None
    platform: str = "unknown"
    question: str = ""

    def to_dict(self) -> dict:
        d: dict = {
            "sample_id": self.sample_id,
            "task": self.task,
            "prediction": self.prediction,
            "label": self.label,
            "platform": self.platform,
            "question": self.question,
        }
        if self.pred_regions is not None:
            d["pred_regions"] = [list(r.as_tuple()) for r in self.pred_regions]
        if self.label_regions is not None:
            d["label_regions"] = [list(r.as_tuple()) for r in self.label_regions]
        if self.judge_scores is not None:
            d["judge_scores"] = list(self.judge_scores)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        return cls(
            sample_id=str(d["sample_id"]),
            task=str(d["task"]),
            prediction=str(d.get("prediction", "")),
            label=str(d.get("label", "")),
            pred_regions=tuple(NormBBox.from_seq(r) for r in d["pred_regions"])
            if d.get("pred_regions") is not None
            else None,
            label_regions=tuple(NormBBox.from_seq(r) for r in d["label_regions"])
            if d.get("label_regions") is not None
            else None,
            judge_scores=tuple(float(s) for s in d["judge_scores"])
            if d.get("judge_scores") is not None
            else None,
            platform=str(d.get("platform", "unknown")),
            question=str(d.get("question", "")),
        )


def make_eval_records(
    samples: Iterable[TaskSample], predictions: dict[str, str]
) -> list[EvalRecord]:
    """Join gold samples against a {sample_id: prediction} map.

    The label is the sample's assistant text (turns joined by newline when
    there are several); label regions come from assistant turns; the
    question is the first user turn.  Samples without a prediction are
    skipped.
    """
    records: list[EvalRecord] = []
    for s in samples:
        if s.sample_id not in predictions:
            continue
        asst = [t for t in s.turns if t.role == "assistant"]
        users = [t for t in s.turns if t.role == "user"]
        label_regions: tuple[NormBBox, ...] = tuple(r for t in asst for r in t.regions)
        records.append(
            EvalRecord(
                sample_id=s.sample_id,
                task=s.task,
                prediction=predictions[s.sample_id],
                label="\n".join(t.text for t in asst),
                label_regions=label_regions if label_regions else None,
                platform=s.platform,
                question=users[0].text if users else "",
            )
        )
    return records


def exact_match(pred: str, label: str) -> int:
    """1 iff identical after trimming outer whitespace; case-sensitive."""
    return 1 if pred.strip() == label.strip() else 0


def class_accuracy(records: Sequence[EvalRecord]) -> float:
    """Mean class match after canonicalizing both sides."""
    if not records:
        raise ValueError("class_accuracy needs at least one record")
    hits = sum(
        1
        for r in records
        if canonicalize_type(r.prediction.strip()) == canonicalize_type(r.label.strip())
    )
    return hits / len(records)


def _pred_box(record: EvalRecord) -> NormBBox | None:
    if record.pred_regions:
        return record.pred_regions[0]
    try:
        return parse_bbox_token(record.prediction)
    except BBoxTokenError:
        return None


def grounding_accuracy(
    records: Sequence[EvalRecord], iou_threshold: float = IOU_THRESHOLD
) -> float:
    """Fraction of records whose predicted box overlaps the label box with
    IoU strictly greater than the threshold.

    Unparseable predictions are wrong but stay in the denominator.

    Raises:
        ValueError: a record without exactly one label region.
    """
    if not records:
        raise ValueError("grounding_accuracy needs at least one record")
    hits = 0
    for r in records:
        if not r.label_regions or len(r.label_regions) != 1:
            raise ValueError(f"{r.sample_id}: grounding record needs exactly one label region")
        pred = _pred_box(r)
        if pred is not None and iou_norm(pred, r.label_regions[0]) > iou_threshold:
            hits += 1
    return hits / len(records)


def listing_recall(
    records: Sequence[EvalRecord], iou_threshold: float = IOU_THRESHOLD
) -> float:
    """Auxiliary multi-box metric for the listing task.

    Greedy one-to-one matching of predicted boxes (scanned from the
    prediction text, invalid tokens ignored) to label boxes at IoU
    strictly greater than the threshold; returns matched / total labels.
    """
    if not records:
        raise ValueError("listing_recall needs at least one record")
    matched = 0
    total = 0
    for r in records:
        labels = list(r.label_regions or ())
        total += len(labels)
        preds: list[NormBBox] = list(r.pred_regions or ())
        if not preds:
            for _, _, tok in scan_bbox_tokens(r.prediction):
                try:
                    preds.append(parse_bbox_token(tok))
                except BBoxTokenError:
                    continue
        used: set[int] = set()
        for p in preds:
            for i, lb in enumerate(labels):
                if i in used:
                    continue
                if iou_norm(p, lb) > iou_threshold:
                    used.add(i)
                    matched += 1
                    break
    return matched / total if total else 0.0


def _pred_yes(value) -> bool:
    if isinstance(value, (bool, int)):
        return bool(value)
    return str(value).strip().lower().startswith("yes")


def _label_yes(value) -> bool:
    if isinstance(value, (bool, int)):
        return bool(value)
    s = str(value).strip().lower().rstrip(".")
    if s in ("yes", "true", "1"):
        return True
    if s in ("no", "false", "0"):
        return False
    raise ValueError(f"label {value!r} is not a yes/no value")


def f1_binary(preds: Sequence, labels: Sequence) -> float:
    """F1 of the positive (tappable/"Yes") class; 0 when P + R = 0.

    Predictions count as positive when they start with "yes" (models may
    pad the verdict); labels must be clean yes/no values.
    """
    if len(preds) != len(labels):
        raise ValueError(f"{len(preds)} predictions vs {len(labels)} labels")
    if not preds:
        raise ValueError("f1_binary needs at least one pair")
    p = [_pred_yes(v) for v in preds]
    y = [_label_yes(v) for v in labels]
    tp = sum(1 for a, b in zip(p, y) if a and b)
    fp = sum(1 for a, b in zip(p, y) if a and not b)
    fn = sum(1 for a, b in zip(p, y) if not a and b)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def judge_score_ratio(pred_score: float, label_score: float) -> float:
    """Prediction score over label score, as a percentage; may exceed 100.

    Raises:
        DegenerateLabelError: label score is not positive.
    """
    if label_score <= 0:
        raise DegenerateLabelError(f"label score {label_score} is not positive")
    return 100.0 * pred_score / label_score


def load_judge_rubric(path: str | Path | None = None) -> str:
    """Grading prompt template with {question} and {answer} placeholders."""
    if path is None:
        return resources.files("uibench").joinpath("assets/judge_rubric.txt").read_text("utf-8")
    return Path(path).read_text("utf-8")


def parse_judge_score(reply: str) -> float:
    """First numeric in the reply (the part before '/' in 'Score: 7/10').

    Raises:
        JudgeParseError: no number anywhere in the reply.
    """
    m = _NUMBER_RE.search(reply)
    if m is None:
        raise JudgeParseError(f"no numeric score in judge reply {reply!r}")
    return float(m.group(1))


def judge_with_llm(
    record: EvalRecord, client: LlmClient, rubric: str
) -> tuple[float, float]:
    """Score the prediction and the label separately with the judge LLM.

    Returns (pred_score, label_score) and attaches them to the record.

    Raises:
        JudgeParseError: either reply had no parsable score.
    """
    pred_reply = client.send(rubric.format(question=record.question, answer=record.prediction))
    label_reply = client.send(rubric.format(question=record.question, answer=record.label))
    scores = (parse_judge_score(pred_reply), parse_judge_score(label_reply))
    record.judge_scores = scores
    return scores


def judge_records(
    records: Sequence[EvalRecord],
    client: LlmClient,
    rubric: str | None = None,
    max_workers: int = 1,
) -> dict:
    """Judge every record in place; returns {judged, excluded} counts.

    Records whose judge replies cannot be parsed (or fail transport) are
    left unscored and counted as excluded; results do not depend on the
    worker count.
    """
    rubric = rubric or load_judge_rubric()

    def _one(record: EvalRecord) -> bool:
        try:
            judge_with_llm(record, client, rubric)
            return True
        except (JudgeParseError, KeyError, RuntimeError):
            return False

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            oks = list(ex.map(_one, records))
    else:
        oks = [_one(r) for r in records]
    judged = sum(1 for ok in oks if ok)
    return {"judged": judged, "excluded": len(records) - judged}


@dataclass(frozen=True)
class MetricRow:
    task: str
    platform: str
    metric: str
    value: float
    n: int

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "platform": self.platform,
            "metric": self.metric,
            "value": self.value,
            "n": self.n,
        }


@dataclass
class MetricReport:
    """All metric rows plus grouped averages and scoring configuration."""

    rows: list[MetricRow] = field(default_factory=list)
    aggregates: dict[str, float] = field(default_factory=dict)
    header: dict = field(default_factory=dict)

    def row(self, task: str, platform: str = "all") -> MetricRow | None:
        for r in self.rows:
            if r.task == task and r.platform == platform:
                return r
        return None

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "rows": [r.to_dict() for r in self.rows],
            "aggregates": dict(sorted(self.aggregates.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)

    def format_table(self) -> str:
        """Human-readable fixed-width table of rows and grouped averages."""
        lines = [f"{'task':<24} {'platform':<9} {'metric':<15} {'value':>8} {'n':>6}"]
        lines.append("-" * 66)
        for r in self.rows:
            lines.append(
                f"{r.task:<24} {r.platform:<9} {r.metric:<15} {r.value:>8.2f} {r.n:>6}"
            )
        if self.aggregates:
            lines.append("-" * 66)
            for name, value in sorted(self.aggregates.items()):
                lines.append(f"{name:<50} {value:>8.2f}")
        return "\n".join(lines)


def _score_bucket(task: str, records: list[EvalRecord], iou_threshold: float):
    """(metric name, value on the report scale, n) for one task bucket."""
    if task == "ocr":
        value = 100.0 * sum(exact_match(r.prediction, r.label) for r in records) / len(records)
        return "exact_match", value, len(records)
    if task in ("icon_recognition", "widget_classification"):
        return "accuracy", 100.0 * class_accuracy(records), len(records)
    if task in ("find_text", "find_icon", "find_widget"):
        return "grounding_acc", 100.0 * grounding_accuracy(records, iou_threshold), len(records)
    if task == "widget_listing":
        return "listing_recall", 100.0 * listing_recall(records, iou_threshold), len(records)
    if task in ("screen2words", "widget_captions"):
        corpus, _ = cider_scores(
            [r.prediction for r in records], [[r.label] for r in records]
        )
        return "cider", 100.0 * corpus, len(records)
    if task == "taperception":
        value = 100.0 * f1_binary([r.prediction for r in records], [r.label for r in records])
        return "f1", value, len(records)
    if task in ADVANCED_TASKS:
        scored = [r for r in records if r.judge_scores is not None]
        if not scored:
            return None
        ratios = [judge_score_ratio(*r.judge_scores) for r in scored]
        return "judge_ratio", sum(ratios) / len(ratios), len(scored)
    return None


def aggregate(
    records: Sequence[EvalRecord], iou_threshold: float = IOU_THRESHOLD
) -> MetricReport:
    """Score all records into a MetricReport.

    Rows are emitted per task over all records and per platform where
    present; grouped averages cover the three referring tasks, the three
    locate tasks (listing excluded as auxiliary), and the four free-form
    tasks, per platform.  Empty buckets are omitted, never zero-filled.
    """
    report = MetricReport(
        header={
            "tool_version": __version__,
            "iou_threshold": iou_threshold,
            "cider_variant": CIDER_VARIANT,
        }
    )
    by_task: dict[str, list[EvalRecord]] = {}
    for r in records:
        by_task.setdefault(r.task, []).append(r)

    task_order = sorted(by_task)
    platforms = [p for p in AGGREGATE_PLATFORMS if any(r.platform == p for r in records)]

    values: dict[tuple[str, str], float] = {}
    for task in task_order:
        bucket = by_task[task]
        scored = _score_bucket(task, bucket, iou_threshold)
        if scored is None:
            continue
        metric, value, n = scored
        report.rows.append(MetricRow(task, "all", metric, value, n))
        values[(task, "all")] = value
        for platform in platforms:
            sub = [r for r in bucket if r.platform == platform]
            if not sub:
                continue
            scored_p = _score_bucket(task, sub, iou_threshold)
            if scored_p is None:
                continue
            metric_p, value_p, n_p = scored_p
            report.rows.append(MetricRow(task, platform, metric_p, value_p, n_p))
            values[(task, platform)] = value_p

    groups = {
        "referring_avg": REFERRING_AVG_TASKS,
        "grounding_avg": GROUNDING_AVG_TASKS,
        "advanced_avg": ADVANCED_TASKS,
    }
    for scope in ["all"] + platforms:
        for name, tasks in groups.items():
            present = [values[(t, scope)] for t in tasks if (t, scope) in values]
            if present:
                report.aggregates[f"{name}/{scope}"] = sum(present) / len(present)
    return report
