"""Scoring predicted boxes against ground truth.

A prediction counts as correct when an optimal one-to-one assignment on its
page pairs it with a true box of the same kind at IOU above 0.8.
"""

from __future__ import annotations

import string
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .geometry import BBox, iou, solve_assignment
from .records import KINDS, InducedLabel

DEFAULT_IOU = 0.8
# Any feasible pair costs at most 1, so an infeasible one must never look
# cheaper than giving up a feasible match. Holds for fewer than 50 boxes a page.
INFEASIBLE_COST = 10.0


def match_overlaps(overlaps: Sequence[Sequence[float]],
                   iou_threshold: float = DEFAULT_IOU) -> list[tuple[int, int]]:
    """Optimal matching on a precomputed IOU matrix, rows are predictions."""
    if not len(overlaps) or not len(overlaps[0]):
        return []
    cost = [[1.0 - o if o > iou_threshold else INFEASIBLE_COST for o in row] for row in overlaps]
    return [(i, j) for i, j in solve_assignment(cost).pairs if overlaps[i][j] > iou_threshold]


def match_page(preds: Sequence[BBox], truths: Sequence[BBox],
               iou_threshold: float = DEFAULT_IOU) -> list[tuple[int, int]]:
    """Indices ``(pred, truth)`` of the optimal matching with IOU above threshold."""
    return match_overlaps([[iou(p, t) for t in truths] for p in preds], iou_threshold)


_STRIP = string.punctuation + "–—‘’“”"


def normalize_caption(text: str) -> str:
    return " ".join(text.casefold().split()).strip(_STRIP + " ")


def caption_correct(pred_box: Optional[BBox], pred_text: Optional[str],
                    truth_box: Optional[BBox], truth_text: Optional[str],
                    iou_threshold: float = DEFAULT_IOU) -> bool:
    if pred_box is not None and truth_box is not None and iou(pred_box, truth_box) > iou_threshold:
        return True
    if pred_text is not None and truth_text is not None:
        return normalize_caption(pred_text) == normalize_caption(truth_text)
    return False


@dataclass
class KindScore:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0
    captions_correct: int = 0
    captions_total: int = 0

    def __iadd__(self, other: "KindScore") -> "KindScore":
        self.true_positives += other.true_positives
        self.false_positives += other.false_positives
        self.false_negatives += other.false_negatives
        self.captions_correct += other.captions_correct
        self.captions_total += other.captions_total
        return self

    @property
    def precision(self) -> float:
        d = self.true_positives + self.false_positives
        return self.true_positives / d if d else 0.0

    @property
    def recall(self) -> float:
        d = self.true_positives + self.false_negatives
        return self.true_positives / d if d else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class PageResult:
    kind: str
    n_preds: int
    n_truths: int
    matches: int
    captions_correct: int = 0
    captions_total: int = 0


@dataclass
class EvalReport:
    per_kind: dict = field(default_factory=lambda: {k: KindScore() for k in KINDS})

    @property
    def pooled(self) -> KindScore:
        total = KindScore()
        for s in self.per_kind.values():
            total += s
        return total

    def to_dict(self) -> dict:
        def one(s: KindScore) -> dict:
            return {
                "true_positives": s.true_positives,
                "false_positives": s.false_positives,
                "false_negatives": s.false_negatives,
                "precision": round(s.precision, 6),
                "recall": round(s.recall, 6),
                "f1": round(s.f1, 6),
                "captions_correct": s.captions_correct,
                "captions_total": s.captions_total,
            }
        out = {k: one(self.per_kind[k]) for k in KINDS}
        out["pooled"] = one(self.pooled)
        return out

    def table(self) -> str:
        rows = [("kind", "TP", "FP", "FN", "precision", "recall", "F1")]
        for name, s in [*((k, self.per_kind[k]) for k in KINDS), ("pooled", self.pooled)]:
            rows.append((name, str(s.true_positives), str(s.false_positives),
                         str(s.false_negatives), f"{s.precision:.4f}",
                         f"{s.recall:.4f}", f"{s.f1:.4f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = []
        for r in rows:
            cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(cells))
        return "\n".join(lines)


def score_corpus(pages: Iterable[PageResult]) -> EvalReport:
    report = EvalReport()
    for p in pages:
        report.per_kind[p.kind] += KindScore(
            true_positives=p.matches,
            false_positives=p.n_preds - p.matches,
            false_negatives=p.n_truths - p.matches,
            captions_correct=p.captions_correct,
            captions_total=p.captions_total,
        )
    return report


def evaluate_labels(preds: Sequence[InducedLabel], truths: Sequence[InducedLabel],
                    iou_threshold: float = DEFAULT_IOU) -> EvalReport:
    """Match predictions to ground truth page by page and kind by kind."""
    groups: dict = defaultdict(lambda: ([], []))
    for p in preds:
        groups[(p.paper_id, p.page_index, p.kind)][0].append(p)
    for t in truths:
        groups[(t.paper_id, t.page_index, t.kind)][1].append(t)
    results = []
    for key in sorted(groups):
        ps, ts = groups[key]
        pairs = match_page([p.figure_box for p in ps], [t.figure_box for t in ts], iou_threshold)
        cap_total = cap_ok = 0
        for i, j in pairs:
            t, p = ts[j], ps[i]
            if t.caption_box is None and t.caption_text is None:
                continue
            cap_total += 1
            cap_ok += caption_correct(p.caption_box, p.caption_text,
                                      t.caption_box, t.caption_text, iou_threshold)
        results.append(PageResult(key[2], len(ps), len(ts), len(pairs), cap_ok, cap_total))
    return score_corpus(results)
