"""Metric suite: per-task scorers, judge plumbing, report aggregation."""

import pytest

from uibench.evaluation import (
    GROUNDING_AVG_TASKS,
    IOU_THRESHOLD,
    DegenerateLabelError,
    EvalRecord,
    JudgeParseError,
    aggregate,
    class_accuracy,
    exact_match,
    f1_binary,
    grounding_accuracy,
    judge_records,
    judge_score_ratio,
    judge_with_llm,
    listing_recall,
    load_judge_rubric,
    make_eval_records,
    parse_judge_score,
)
from uibench.geometry import parse_bbox_token
from uibench.llm import ReplayLlmClient, prompt_key
from uibench.taskgen import TaskSample, Turn


def rec(task="ocr", pred="x", label="x", pred_regions=None, label_regions=None,
        platform="iphone", judge_scores=None, sample_id="s/1", question="q"):
    return EvalRecord(sample_id=sample_id, task=task, prediction=pred,
                      label=label, pred_regions=pred_regions,
                      label_regions=label_regions, judge_scores=judge_scores,
                      platform=platform, question=question)


def region(token):
    return (parse_bbox_token(token),)


class TestRecordPlumbing:
    def test_round_trip(self):
        r = rec(pred_regions=region("[1, 2, 3, 4]"),
                label_regions=region("[5, 6, 7, 8]"), judge_scores=(8.0, 10.0))
        assert EvalRecord.from_dict(r.to_dict()) == r

    def test_make_eval_records(self):
        samples = [
            TaskSample("s/ocr/e0", "ocr", "s", "iphone", "test", (
                Turn("user", "read [1, 2, 3, 4]", region("[1, 2, 3, 4]")),
                Turn("assistant", "Hello"),
            )),
            TaskSample("s/find_text/e1", "find_text", "s", "android", "test", (
                Turn("user", "find Hello"),
                Turn("assistant", "[5, 6, 7, 8]", region("[5, 6, 7, 8]")),
            )),
            TaskSample("s/ocr/e2", "ocr", "s", "iphone", "test", (
                Turn("user", "read [1, 2, 3, 4]", region("[1, 2, 3, 4]")),
                Turn("assistant", "Skipped"),
            )),
        ]
        preds = {"s/ocr/e0": "Hello", "s/find_text/e1": "[5, 6, 7, 8]"}
        records = make_eval_records(samples, preds)
        assert [r.sample_id for r in records] == ["s/ocr/e0", "s/find_text/e1"]
        assert records[0].label == "Hello"
        assert records[0].label_regions is None
        assert records[0].question == "read [1, 2, 3, 4]"
        assert records[1].label_regions == region("[5, 6, 7, 8]")
        assert records[1].platform == "android"


class TestExactMatch:
    def test_trim_only(self):
        assert exact_match(" Hello ", "Hello") == 1
        assert exact_match("hello", "Hello") == 0
        assert exact_match("Hello!", "Hello") == 0


class TestClassAccuracy:
    def test_canonicalizes_both_sides(self):
        records = [
            rec(task="widget_classification", pred="checkbox (checked)", label="Checkbox"),
            rec(task="widget_classification", pred="button", label="Button"),
            rec(task="widget_classification", pred="Toggle", label="Slider"),
        ]
        assert class_accuracy(records) == pytest.approx(2 / 3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            class_accuracy([])


class TestGroundingAccuracy:
    def test_strictly_greater_than_threshold(self):
        # Label [0, 0, 99, 99]; prediction overlapping exactly half fails.
        label = region("[0, 0, 100, 200]")
        half = rec(task="find_text", pred="[0, 0, 100, 100]", label_regions=label)
        assert grounding_accuracy([half]) == 0.0

    def test_prediction_from_text_token(self):
        label = region("[10, 10, 110, 110]")
        good = rec(task="find_text", pred="[10, 10, 110, 110]", label_regions=label)
        assert grounding_accuracy([good]) == 1.0

    def test_pred_regions_take_precedence(self):
        label = region("[10, 10, 110, 110]")
        r = rec(task="find_text", pred="[900, 900, 990, 990]",
                pred_regions=region("[10, 10, 110, 110]"), label_regions=label)
        assert grounding_accuracy([r]) == 1.0

    def test_unparseable_counts_in_denominator(self):
        label = region("[10, 10, 110, 110]")
        good = rec(task="find_text", pred="[10, 10, 110, 110]", label_regions=label)
        bad = rec(task="find_text", pred="somewhere on the left", label_regions=label)
        assert grounding_accuracy([good, bad]) == pytest.approx(0.5)

    def test_anchored_parse_rejects_chatter(self):
        label = region("[10, 10, 110, 110]")
        chatty = rec(task="find_text", pred="Here: [10, 10, 110, 110]",
                     label_regions=label)
        assert grounding_accuracy([chatty]) == 0.0

    def test_requires_exactly_one_label_region(self):
        no_region = rec(task="find_text", pred="[1, 2, 3, 4]")
        with pytest.raises(ValueError):
            grounding_accuracy([no_region])
        two = rec(task="find_text", pred="[1, 2, 3, 4]",
                  label_regions=region("[1, 2, 3, 4]") + region("[5, 6, 7, 8]"))
        with pytest.raises(ValueError):
            grounding_accuracy([two])

    def test_custom_threshold(self):
        label = region("[0, 0, 100, 200]")
        half = rec(task="find_text", pred="[0, 0, 100, 100]", label_regions=label)
        assert grounding_accuracy([half], iou_threshold=0.4) == 1.0


class TestListingRecall:
    def test_greedy_one_to_one(self):
        labels = region("[0, 0, 100, 100]") + region("[200, 200, 300, 300]")
        r = rec(task="widget_listing",
                pred="a [0, 0, 100, 100] b [0, 0, 100, 100]",
                label_regions=labels)
        # Both predictions hit the same label; only one match counts.
        assert listing_recall([r]) == pytest.approx(0.5)

    def test_invalid_tokens_ignored(self):
        labels = region("[0, 0, 100, 100]")
        r = rec(task="widget_listing",
                pred="x [0, 0, 2000, 100] y [0, 0, 100, 100]",
                label_regions=labels)
        assert listing_recall([r]) == 1.0

    def test_no_labels_scores_zero(self):
        assert listing_recall([rec(task="widget_listing", pred="[1, 2, 3, 4]")]) == 0.0


class TestF1:
    def test_known_value(self):
        preds = ["Yes.", "yes definitely", "No.", "Yes."]
        labels = ["Yes.", "No.", "Yes.", "yes"]
        # tp=2, fp=1, fn=1 -> precision=recall=2/3.
        assert f1_binary(preds, labels) == pytest.approx(2 / 3)

    def test_pred_positive_means_starts_with_yes(self):
        assert f1_binary(["yes it is tappable"], ["Yes."]) == 1.0
        assert f1_binary(["it is tappable, yes"], ["Yes."]) == 0.0

    def test_label_variants(self):
        assert f1_binary(["Yes."], ["true"]) == 1.0
        assert f1_binary(["Yes."], ["1"]) == 1.0
        assert f1_binary(["Yes."], [True]) == 1.0

    def test_dirty_label_rejected(self):
        with pytest.raises(ValueError):
            f1_binary(["Yes."], ["probably"])

    def test_zero_when_no_true_positive(self):
        assert f1_binary(["No.", "No."], ["Yes.", "No."]) == 0.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            f1_binary(["Yes."], ["Yes.", "No."])


class TestJudgeRatio:
    def test_basic_ratio(self):
        assert judge_score_ratio(8, 10) == pytest.approx(80.0)

    def test_over_100_allowed(self):
        assert judge_score_ratio(12, 10) == pytest.approx(120.0)

    def test_degenerate_label(self):
        with pytest.raises(DegenerateLabelError):
            judge_score_ratio(8, 0)

    def test_parse_judge_score(self):
        assert parse_judge_score("Score: 7/10") == 7.0
        assert parse_judge_score("I rate this 8.5 overall") == 8.5
        with pytest.raises(JudgeParseError):
            parse_judge_score("excellent work")


def judge_fixtures(rubric, answers_to_scores):
    """Replay fixtures mapping each judged answer to a canned score reply."""
    fixtures = {}
    for (question, answer), score in answers_to_scores.items():
        prompt = rubric.format(question=question, answer=answer)
        fixtures[prompt_key(prompt)] = f"Score: {score}/10"
    return ReplayLlmClient(fixtures)


class TestJudging:
    def test_judge_with_llm(self):
        rubric = load_judge_rubric()
        r = rec(task="detailed_description", pred="a fine summary",
                label="the reference", question="Describe the screen.")
        client = judge_fixtures(rubric, {
            ("Describe the screen.", "a fine summary"): 8,
            ("Describe the screen.", "the reference"): 10,
        })
        scores = judge_with_llm(r, client, rubric)
        assert scores == (8.0, 10.0)
        assert r.judge_scores == (8.0, 10.0)

    def test_judge_records_counts_and_worker_independence(self):
        rubric = "Q: {question} A: {answer}"
        records = [
            rec(task="detailed_description", pred=f"p{i}", label=f"l{i}",
                question="q", sample_id=f"s/{i}")
            for i in range(4)
        ]
        scores = {}
        for i in range(4):
            scores[("q", f"p{i}")] = 6 + i
            scores[("q", f"l{i}")] = 10
        # Last record's replies are missing, so it stays unscored.
        del scores[("q", "p3")]
        client = judge_fixtures(rubric, scores)

        outcome = judge_records(records, client, rubric)
        assert outcome == {"judged": 3, "excluded": 1}
        assert [r.judge_scores for r in records[:3]] == [
            (6.0, 10.0), (7.0, 10.0), (8.0, 10.0)]
        assert records[3].judge_scores is None

        fresh = [
            rec(task="detailed_description", pred=f"p{i}", label=f"l{i}",
                question="q", sample_id=f"s/{i}")
            for i in range(4)
        ]
        outcome_mt = judge_records(fresh, client, rubric, max_workers=4)
        assert outcome_mt == outcome
        assert [r.judge_scores for r in fresh] == [r.judge_scores for r in records]

    def test_unparseable_reply_excluded(self):
        rubric = "Q: {question} A: {answer}"
        client = ReplayLlmClient({
            prompt_key(rubric.format(question="q", answer="p")): "no digits here",
            prompt_key(rubric.format(question="q", answer="l")): "Score: 9/10",
        })
        r = rec(task="detailed_description", pred="p", label="l", question="q")
        outcome = judge_records([r], client, rubric)
        assert outcome == {"judged": 0, "excluded": 1}
        assert r.judge_scores is None

    def test_rubric_has_placeholders(self):
        rubric = load_judge_rubric()
        assert "{question}" in rubric
        assert "{answer}" in rubric


class TestAggregate:
    def build_records(self):
        records = []
        # ocr: 1/2 exact on iphone, 1/1 on android.
        records.append(rec(task="ocr", pred="Hello", label="Hello"))
        records.append(rec(task="ocr", pred="nope", label="Hello"))
        records.append(rec(task="ocr", pred="Hi", label="Hi", platform="android"))
        # find_text: one hit, one miss.
        records.append(rec(task="find_text", pred="[10, 10, 110, 110]",
                           label_regions=region("[10, 10, 110, 110]")))
        records.append(rec(task="find_text", pred="[500, 500, 600, 600]",
                           label_regions=region("[10, 10, 110, 110]"),
                           platform="android"))
        # widget_listing present but excluded from the grounding average.
        records.append(rec(task="widget_listing", pred="[10, 10, 110, 110]",
                           label_regions=region("[10, 10, 110, 110]")))
        # advanced task with mixed judged/unjudged records.
        records.append(rec(task="detailed_description", judge_scores=(8.0, 10.0)))
        records.append(rec(task="detailed_description", judge_scores=(12.0, 10.0)))
        records.append(rec(task="detailed_description"))
        return records

    def test_rows_and_aggregates(self):
        report = aggregate(self.build_records())

        ocr_all = report.row("ocr")
        assert (ocr_all.metric, ocr_all.n) == ("exact_match", 3)
        assert ocr_all.value == pytest.approx(100 * 2 / 3)
        assert report.row("ocr", "android").value == pytest.approx(100.0)

        ft = report.row("find_text")
        assert ft.metric == "grounding_acc"
        assert ft.value == pytest.approx(50.0)

        listing = report.row("widget_listing")
        assert listing.metric == "listing_recall"
        assert listing.value == pytest.approx(100.0)

        adv = report.row("detailed_description")
        assert (adv.metric, adv.n) == ("judge_ratio", 2)
        assert adv.value == pytest.approx(100.0)

        assert report.aggregates["grounding_avg/all"] == pytest.approx(50.0)
        assert report.aggregates["referring_avg/all"] == pytest.approx(100 * 2 / 3)
        assert report.aggregates["advanced_avg/all"] == pytest.approx(100.0)
        assert "widget_listing" not in GROUNDING_AVG_TASKS

    def test_empty_buckets_omitted(self):
        report = aggregate([rec(task="ocr", pred="a", label="a")])
        assert report.row("find_text") is None
        assert "grounding_avg/all" not in report.aggregates
        # Advanced records without judge scores produce no row at all.
        report2 = aggregate([rec(task="conv_perception")])
        assert report2.rows == []
        assert report2.aggregates == {}

    def test_cider_task_routing(self):
        records = [
            rec(task="screen2words", pred="a login page", label="a login page"),
            rec(task="screen2words", pred="totally different", label="settings menu"),
        ]
        row = aggregate(records).row("screen2words")
        assert row.metric == "cider"
        assert 0.0 < row.value <= 1000.0

    def test_f1_task_routing(self):
        records = [
            rec(task="taperception", pred="Yes.", label="Yes."),
            rec(task="taperception", pred="No.", label="No."),
        ]
        row = aggregate(records).row("taperception")
        assert (row.metric, row.value) == ("f1", 100.0)

    def test_report_serialization_stable(self):
        records = self.build_records()
        a = aggregate(records).to_json()
        b = aggregate(records).to_json()
        assert a == b
        table = aggregate(records).format_table()
        assert "ocr" in table and "grounding_avg/all" in table

    def test_header_documents_scoring_config(self):
        report = aggregate(self.build_records(), iou_threshold=0.6)
        assert report.header["iou_threshold"] == 0.6
        assert report.header["cider_variant"]
