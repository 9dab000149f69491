import pytest
from hypothesis import given
from hypothesis import strategies as st

from figlabel.evaluation import (
    KindScore, PageResult, caption_correct, evaluate_labels, match_overlaps, match_page,
    normalize_caption, score_corpus,
)
from figlabel.geometry import BBox, iou
from fixtures import evaluation_fixture, label
from oracles import best_matching


def test_match_identical():
    assert match_page([BBox(0, 0, 10, 10)], [BBox(0, 0, 10, 10)]) == [(0, 0)]


def test_match_below_threshold():
    pred, truth = BBox(0, 0, 79, 10), BBox(0, 0, 100, 10)
    assert iou(pred, truth) == pytest.approx(0.79)
    assert match_page([pred], [truth]) == []


def test_match_exactly_at_threshold_is_rejected():
    assert match_page([BBox(0, 0, 80, 10)], [BBox(0, 0, 100, 10)]) == []


def test_match_cross_configuration_on_overlaps():
    # greedy takes the 0.9 pair and is left with 0.0; the cross pairs both clear 0.8
    overlaps = [[0.9, 0.85], [0.82, 0.0]]
    assert sorted(match_overlaps(overlaps)) == [(0, 1), (1, 0)]


def test_match_cross_configuration_geometric():
    p1, p2 = BBox(3, 0, 25, 10), BBox(2, 0, 22, 10)
    t1, t2 = BBox(1, 0, 25, 10), BBox(6, 0, 25, 10)
    assert iou(p1, t1) > max(iou(p1, t2), iou(p2, t1))
    assert iou(p2, t2) <= 0.8
    assert sorted(match_page([p1, p2], [t1, t2])) == [(0, 1), (1, 0)]


def test_match_empty_sides():
    assert match_page([], [BBox(0, 0, 1, 1)]) == []
    assert match_page([BBox(0, 0, 1, 1)], []) == []


@st.composite
def page_boxes(draw):
    # boxes near a few anchors so that high-IOU pairs actually occur
    anchors = [(0, 0), (40, 0), (0, 40)]
    def one():
        ax, ay = draw(st.sampled_from(anchors))
        x1 = ax + draw(st.integers(0, 4))
        y1 = ay + draw(st.integers(0, 4))
        return BBox(x1, y1, x1 + draw(st.integers(20, 26)), y1 + draw(st.integers(20, 26)))
    n = draw(st.integers(0, 5))
    m = draw(st.integers(0, 5))
    return [one() for _ in range(n)], [one() for _ in range(m)]


@given(page_boxes(), st.sampled_from([0.5, 0.7, 0.8]))
def test_match_agrees_with_brute_force(boxes, thr):
    preds, truths = boxes
    pairs = match_page(preds, truths, thr)
    k, total = best_matching(preds, truths, thr)
    assert len(pairs) == k
    assert sum(iou(preds[i], truths[j]) for i, j in pairs) == pytest.approx(total, abs=1e-9)
    assert all(iou(preds[i], truths[j]) > thr for i, j in pairs)


@pytest.mark.parametrize("pb, pt, tb, tt, ok", [
    ((0, 0, 10, 10), "alpha", (0, 0, 10, 10), "beta", True),
    ((0, 0, 10, 10), "Figure 1:  Loss curve.", (50, 50, 60, 60), "figure 1: loss curve", True),
    ((0, 0, 10, 10), "alpha", (50, 50, 60, 60), "beta", False),
])
def test_caption_correct(pb, pt, tb, tt, ok):
    assert caption_correct(BBox(*pb), pt, BBox(*tb), tt) is ok


def test_caption_without_boxes():
    assert caption_correct(None, "Same text", None, "same  text") is True
    assert caption_correct(None, None, BBox(0, 0, 1, 1), "x") is False


def test_normalize_caption():
    assert normalize_caption("  “Figure 2 —  Results.” ") == "figure 2 — results"


def test_score_examples():
    s = KindScore(2, 1, 2)
    assert (s.precision, s.recall, s.f1) == pytest.approx((2 / 3, 1 / 2, 4 / 7))
    s = KindScore(0, 0, 5)
    assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)
    s = KindScore(4, 0, 0)
    assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)


def test_score_corpus_pools_kinds():
    r = score_corpus([PageResult("figure", 2, 3, 1), PageResult("table", 1, 1, 1),
                      PageResult("figure", 0, 1, 0)])
    assert r.per_kind["figure"].false_negatives == 3
    assert r.pooled.true_positives == 2
    assert r.to_dict()["pooled"]["precision"] == round(2 / 3, 6)


def test_evaluate_fixture():
    preds, truths = evaluation_fixture()
    r = evaluate_labels(preds, truths)
    pooled = r.pooled
    assert (pooled.true_positives, pooled.false_positives, pooled.false_negatives) == (2, 1, 2)
    assert pooled.f1 == pytest.approx(4 / 7)
    # figure caption matches by text, table caption by box
    assert (pooled.captions_correct, pooled.captions_total) == (2, 2)


def test_self_evaluation_is_perfect():
    _, truths = evaluation_fixture()
    assert evaluate_labels(truths, truths).pooled.f1 == 1.0


def test_kinds_do_not_cross_match():
    t = [label(0, "figure", (0, 0, 100, 100))]
    p = [label(0, "table", (0, 0, 100, 100))]
    r = evaluate_labels(p, t)
    assert r.pooled.true_positives == 0


def test_table_is_aligned():
    lines = evaluate_labels(*evaluation_fixture()).table().splitlines()
    assert len(lines) == 4 and len({len(x) for x in lines}) == 1


labels = st.lists(
    st.builds(lambda page, kind, x, y: label(page, kind, (x, y, x + 100, y + 80)),
              st.integers(0, 2), st.sampled_from(["figure", "table"]),
              st.integers(0, 60).map(lambda v: v * 5), st.integers(0, 60).map(lambda v: v * 5)),
    max_size=10,
)


@given(labels, labels, st.randoms(use_true_random=False))
def test_permutation_invariance_and_truth_count(preds, truths, rnd):
    a = evaluate_labels(preds, truths)
    shuffled = list(preds)
    rnd.shuffle(shuffled)
    b = evaluate_labels(shuffled, truths)
    for k in ("figure", "table"):
        sa, sb = a.per_kind[k], b.per_kind[k]
        assert (sa.true_positives, sa.false_positives, sa.false_negatives) == \
            (sb.true_positives, sb.false_positives, sb.false_negatives)
        assert sa.true_positives + sa.false_negatives == sum(t.kind == k for t in truths)
