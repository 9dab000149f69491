"""Detector post-processing: thresholding, NMS and figure/caption pairing.

The network is not part of this package. A backend writes one JSON file per
page holding its grid-cell predictions; everything downstream of that lives
here.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .geometry import BBox, center, iou, solve_assignment

DEFAULT_CONFIDENCE = 0.5
DEFAULT_NMS_IOU = 0.5

# Paragraph-initial "Figure 3:", "Fig. 2.", "TABLE IV." and the like. A bare
# number must end the line, so "Figure 3 shows ..." is body text.
CAPTION_HEADER = re.compile(
    r"""
    (?P<keyword>figure|fig\.|fig|table)
    \s*
    (?P<number>\d+|(?=[mdclxvi])m{0,4}(?:cm|cd|d?c{0,3})(?:xc|xl|l?x{0,3})(?:ix|iv|v?i{0,3}))
    (?:[.:]|[ \t]*(?:\n|$))
    """,
    re.IGNORECASE | re.VERBOSE,
)


class BackendFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GridPrediction:
    row: int
    col: int
    bbox: BBox
    confidence: float


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    confidence: float


@dataclass(frozen=True)
class CaptionBlock:
    kind: str
    number: str
    text: str
    bbox: BBox


@dataclass(frozen=True)
class Paragraph:
    text: str
    bbox: BBox
    page_index: int = 0


@dataclass(frozen=True)
class FigureCaptionPair:
    figure: Detection
    caption: CaptionBlock
    center_distance: float


def threshold_detections(preds: Sequence[GridPrediction], threshold: float = DEFAULT_CONFIDENCE) -> list[Detection]:
    """Predictions strictly above ``threshold``, most confident first."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    kept = [Detection(p.bbox, p.confidence) for p in preds if p.confidence > threshold]
    kept.sort(key=lambda d: -d.confidence)
    return kept


def _nms_order(d: Detection):
    b = d.bbox
    return (-d.confidence, -b.area, b.y1, b.x1, b.y2, b.x2)


def nms(dets: Sequence[Detection], iou_threshold: float = DEFAULT_NMS_IOU) -> list[Detection]:
    """Greedy non-maximum suppression.

    Candidates are visited by confidence (then larger area, then top-left);
    each kept box removes every remaining box with IOU >= ``iou_threshold``.
    """
    remaining = sorted(dets, key=_nms_order)
    kept: list[Detection] = []
    for d in remaining:
        if all(iou(d.bbox, k.bbox) < iou_threshold for k in kept):
            kept.append(d)
    return kept


def parse_caption_header(text: str) -> Optional[tuple[str, str]]:
    m = CAPTION_HEADER.match(text.lstrip())
    if m is None:
        return None
    kind = "table" if m.group("keyword").lower() == "table" else "figure"
    return kind, m.group("number")


def detect_caption_blocks(paragraphs: Sequence[Paragraph]) -> list[CaptionBlock]:
    out = []
    for p in paragraphs:
        header = parse_caption_header(p.text)
        if header is not None:
            out.append(CaptionBlock(header[0], header[1], p.text.strip(), p.bbox))
    return out


def pair_figures_captions(figures: Sequence[Detection], captions: Sequence[CaptionBlock]) -> list[FigureCaptionPair]:
    """Pair figures with captions, minimizing the summed center distance."""
    if not figures or not captions:
        return []
    fc = [center(f.bbox) for f in figures]
    cc = [center(c.bbox) for c in captions]
    cost = [[a.distance(b) for b in cc] for a in fc]
    return [
        FigureCaptionPair(figures[i], captions[j], cost[i][j])
        for i, j in solve_assignment(cost).pairs
    ]


def _field(obj: dict, key: str, where: str):
    if key not in obj:
        raise BackendFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_predictions(text: str, source: str = "<predictions>") -> list[GridPrediction]:
    """Parse a backend file: a JSON array of ``{row, col, x1, y1, x2, y2, confidence}``.

    Raises:
        BackendFormatError: with the character offset or array index of the
            first problem.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BackendFormatError(f"{source}: invalid JSON at offset {exc.pos}: {exc.msg}") from None
    if not isinstance(data, list):
        raise BackendFormatError(f"{source}: expected a JSON array at offset 0")
    out = []
    for k, obj in enumerate(data):
        where = f"{source}[{k}]"
        if not isinstance(obj, dict):
            raise BackendFormatError(f"{where}: expected an object")
        try:
            row, col = int(_field(obj, "row", where)), int(_field(obj, "col", where))
            conf = float(_field(obj, "confidence", where))
            box = BBox(*(float(_field(obj, c, where)) for c in ("x1", "y1", "x2", "y2")))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, BackendFormatError):
                raise
            raise BackendFormatError(f"{where}: {exc}") from None
        if row < 0 or col < 0:
            raise BackendFormatError(f"{where}: negative grid index")
        if not 0.0 <= conf <= 1.0:
            raise BackendFormatError(f"{where}: confidence {conf} outside [0, 1]")
        out.append(GridPrediction(row, col, box, conf))
    return out


def parse_paragraphs(text: str, source: str = "<paragraphs>") -> list[Paragraph]:
    """Parse ``paragraphs.json``: an array of ``{text, page, x1, y1, x2, y2}``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BackendFormatError(f"{source}: invalid JSON at offset {exc.pos}: {exc.msg}") from None
    if not isinstance(data, list):
        raise BackendFormatError(f"{source}: expected a JSON array at offset 0")
    out = []
    for k, obj in enumerate(data):
        where = f"{source}[{k}]"
        if not isinstance(obj, dict):
            raise BackendFormatError(f"{where}: expected an object")
        try:
            out.append(Paragraph(
                text=str(_field(obj, "text", where)),
                bbox=BBox(*(float(_field(obj, c, where)) for c in ("x1", "y1", "x2", "y2"))),
                page_index=int(_field(obj, "page", where)),
            ))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, BackendFormatError):
                raise
            raise BackendFormatError(f"{where}: {exc}") from None
    return out


def run_page(backend_file, paragraphs: Sequence[Paragraph],
             confidence_threshold: float = DEFAULT_CONFIDENCE,
             nms_iou: float = DEFAULT_NMS_IOU) -> list[FigureCaptionPair]:
    """Threshold, suppress, find captions and pair them for one page."""
    path = Path(backend_file)
    preds = parse_predictions(path.read_text(encoding="utf-8"), str(path))
    figures = nms(threshold_detections(preds, confidence_threshold), nms_iou)
    return pair_figures_captions(figures, detect_caption_blocks(paragraphs))
