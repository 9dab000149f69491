"""Programmatically drawn pages with known figure, table and caption geometry.

Used by the test suite and the scripts in ``scripts/``. All boxes here use
inclusive pixel extents, the same convention as the diff components.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import cv2
import numpy as np
from scipy.ndimage import gaussian_filter

from .geometry import BBox
from .latex_induction import REFERENCE_COLORS, ColorClass, PageRaster

WHITE = (255, 255, 255)
INK = (20, 20, 20)


@dataclass(frozen=True)
class DrawnFloat:
    kind: str
    frame: BBox
    caption: Optional[BBox]
    caption_side: Optional[str]


def _fill(px: np.ndarray, x1: int, y1: int, x2: int, y2: int, color) -> None:
    px[y1:y2 + 1, x1:x2 + 1] = color


def _outline(px: np.ndarray, box: BBox, color) -> None:
    x1, y1, x2, y2 = (int(v) for v in box.as_tuple())
    px[y1, x1:x2 + 1] = color
    px[y2, x1:x2 + 1] = color
    px[y1:y2 + 1, x1] = color
    px[y1:y2 + 1, x2] = color


def _words(rng, x1: int, y1: int, x2: int, y2: int, line_h: int = 7, gap: int = 4):
    """Word rectangles filling a region line by line; last line is ragged."""
    out = []
    y = y1
    while y + line_h - 1 <= y2:
        x = x1
        last = y + 2 * (line_h + gap) - 1 > y2
        right = x2 if not last else x1 + int((x2 - x1) * rng.uniform(0.3, 0.9))
        while x + 6 <= right:
            w = int(rng.integers(6, 31))
            xe = min(x + w - 1, right)
            if xe - x + 1 < 6:
                break
            out.append((x, y, xe, y + line_h - 1))
            x = xe + 1 + gap
        y += line_h + gap
    return out


def _content(rng, px: np.ndarray, x1: int, y1: int, x2: int, y2: int) -> None:
    """Gray shapes standing in for the figure body; identical in both renders."""
    if x2 - x1 < 4 or y2 - y1 < 4:
        return
    for _ in range(int(rng.integers(2, 7))):
        ax, bx = sorted(rng.integers(x1, x2 + 1, size=2))
        ay, by = sorted(rng.integers(y1, y2 + 1, size=2))
        shade = int(rng.integers(60, 200))
        _fill(px, ax, ay, bx, by, (shade, shade, shade))


def latex_page_pair(rng: np.random.Generator, n_floats: int = 1, width: int = 850,
                    height: int = 1100, dpi: int = 100, sides=None, kinds=None):
    """Original and framed/colored renders of one page plus the drawn truth.

    Floats are stacked in horizontal slots. Each caption sits inside its
    frame on one side (``below``, ``above``, ``left`` or ``right``).
    """
    orig = np.full((height, width, 3), 255, dtype=np.uint8)
    margin = int(0.08 * width)
    top, bottom = int(0.07 * height), int(0.93 * height)
    slot_h = (bottom - top) // n_floats
    truth = []
    for k in range(n_floats):
        sy1 = top + k * slot_h + 15
        sy2 = top + (k + 1) * slot_h - 15
        fw = int(rng.integers(int(0.45 * (width - 2 * margin)), width - 2 * margin))
        fh = int(rng.integers(max(90, int(0.5 * (sy2 - sy1))), sy2 - sy1))
        fx1 = int(rng.integers(margin, width - margin - fw + 1))
        fy1 = int(rng.integers(sy1, sy2 - fh + 1))
        frame = BBox(fx1, fy1, fx1 + fw, fy1 + fh)
        kind = "table" if rng.random() < 0.35 else "figure"
        if kinds is not None:
            kind = kinds[k]
        side = sides[k] if sides is not None else str(rng.choice(
            ["above", "below"] if kind == "table" else ["below", "below", "above", "left", "right"]))
        truth.append((kind, frame, side))

    floats = []
    for kind, frame, side in truth:
        fx1, fy1, fx2, fy2 = (int(v) for v in frame.as_tuple())
        ix1, iy1, ix2, iy2 = fx1 + 4, fy1 + 4, fx2 - 4, fy2 - 4
        if side in ("below", "above"):
            cap_h = int(rng.integers(18, 45))
            if side == "below":
                cy1, cy2 = iy2 - cap_h, iy2
                body = (ix1, iy1, ix2, cy1 - 5)
            else:
                cy1, cy2 = iy1, iy1 + cap_h
                body = (ix1, cy2 + 5, ix2, iy2)
            cx1, cx2 = ix1 + int(rng.integers(0, 30)), ix2 - int(rng.integers(0, 30))
        else:
            cap_w = int(rng.integers(60, max(61, int(0.35 * (ix2 - ix1)))))
            cy1 = iy1 + int(rng.integers(0, 10))
            cy2 = iy2 - int(rng.integers(0, 10))
            if side == "right":
                cx1, cx2 = ix2 - cap_w, ix2
                body = (ix1, iy1, cx1 - 5, iy2)
            else:
                cx1, cx2 = ix1, ix1 + cap_w
                body = (cx2 + 5, iy1, ix2, iy2)
        _content(rng, orig, *body)
        words = _words(rng, cx1, cy1, cx2, cy2)
        for w in words:
            _fill(orig, *w, INK)
        floats.append((kind, frame, side, words))

    # The modified render: same page, frames drawn, caption ink recolored.
    mod = orig.copy()
    drawn = []
    for kind, frame, side, words in floats:
        cls = ColorClass.FIGURE_FRAME if kind == "figure" else ColorClass.TABLE_FRAME
        _outline(mod, frame, REFERENCE_COLORS[cls])
        for i, w in enumerate(words):
            color = REFERENCE_COLORS[ColorClass.FIGURE_NAME if i < 2 else ColorClass.CAPTION_TEXT]
            _fill(mod, *w, color)
        cap = None
        if words:
            xs1, ys1, xs2, ys2 = zip(*words)
            cap = BBox(min(xs1), min(ys1), max(xs2), max(ys2))
        drawn.append(DrawnFloat(kind, frame, cap, side))
    return PageRaster(orig, dpi), PageRaster(mod, dpi), drawn


def body_text(rng, px: np.ndarray, keep_out: list, x1: int, y1: int, x2: int, y2: int) -> None:
    """Gray text-line blocks across a region, skipping ``keep_out`` boxes."""
    for w in _words(rng, x1, y1, x2, y2, line_h=6, gap=5):
        wb = BBox(w[0], w[1], w[2] + 1, w[3] + 1)
        if any(not (wb.x2 <= k.x1 or wb.x1 >= k.x2 or wb.y2 <= k.y1 or wb.y1 >= k.y2) for k in keep_out):
            continue
        _fill(px, *w, (90, 90, 90))


def smooth_image(rng, width: int, height: int, sigma: float = 4.0) -> np.ndarray:
    """A textured grayscale 'figure' with structure at several scales."""
    base = gaussian_filter(rng.random((height, width)), sigma)
    detail = gaussian_filter(rng.random((height, width)), sigma / 2)
    img = base / base.std() + 0.5 * detail / detail.std()
    img = (img - img.min()) / (img.max() - img.min())
    return (30 + 200 * img).astype(np.uint8)


def place_template(rng, page_w: int, page_h: int, template: np.ndarray, scale: float):
    """Gray page with text and ``template`` resized so its largest side is
    ``scale`` of the matching page side. Returns the page and the placed box
    (half-open pixel extents)."""
    th, tw = template.shape
    factor = scale * page_w / tw if tw >= th else scale * page_h / th
    nw, nh = int(round(tw * factor)), int(round(th * factor))
    interp = cv2.INTER_AREA if factor < 1 else cv2.INTER_LINEAR
    placed = cv2.resize(template, (nw, nh), interpolation=interp)
    x = int(rng.integers(0, page_w - nw + 1))
    y = int(rng.integers(0, page_h - nh + 1))
    page = np.full((page_h, page_w), 255, dtype=np.uint8)
    box = BBox(x, y, x + nw, y + nh)
    rgb = np.repeat(page[..., None], 3, axis=2)
    body_text(rng, rgb, [box], 10, 10, page_w - 10, page_h - 10)
    page = rgb[..., 0]
    page[y:y + nh, x:x + nw] = placed
    return page, box


# ---------------------------------------------------------------------------
# XML paper directories

_VOCAB = ("model data results method table figure accuracy training test sample "
          "value mean error rate cell gene protein dose group control patient "
          "score loss layer size time signal level ratio").split()


def _sentence(rng, n: int) -> list[str]:
    return [str(rng.choice(_VOCAB)) for _ in range(n)]


class _TokenWriter:
    """Lays out words left to right, wrapping at ``x2``."""

    def __init__(self, page: int, x1: int, y: int, x2: int, line_h: int = 12):
        self.page, self.x1, self.x, self.y, self.x2, self.line_h = page, x1, x1, y, x2, line_h
        self.tokens: list[dict] = []

    def newline(self):
        self.x = self.x1
        self.y += self.line_h

    def write(self, word: str) -> dict:
        w = 6 * len(word) + 2
        if self.x + w > self.x2 and self.x > self.x1:
            self.newline()
        tok = {"text": word, "page": self.page, "x1": float(self.x), "y1": float(self.y),
               "x2": float(self.x + w), "y2": float(self.y + self.line_h - 2)}
        self.x += w + 5
        self.tokens.append(tok)
        return tok


def write_xml_paper(root, rng: np.random.Generator, n_pages: int = 2,
                    figures: int = 1, tables: int = 0, broken_figure: bool = False,
                    page_w: int = 425, page_h: int = 550) -> dict:
    """Write a paper directory (pages, ``tokens.json``, ``aux.json``, images).

    Returns the truth: a list of dicts with kind, page, figure and caption
    boxes. With ``broken_figure`` the first figure's provided image is
    unrelated to what is drawn on the page.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    pages = [np.full((page_h, page_w, 3), 255, dtype=np.uint8) for _ in range(n_pages)]
    tokens: list[dict] = []
    aux: list[dict] = []
    truth: list[dict] = []
    writers = [_TokenWriter(i, 20, 20, page_w - 20) for i in range(n_pages)]
    items = ["figure"] * figures + ["table"] * tables
    for k, kind in enumerate(items):
        page = k % n_pages
        writer = writers[page]
        for w in _sentence(rng, int(rng.integers(10, 25))):
            writer.write(w)
        writer.newline()
        writer.newline()
        body_tokens: list[dict] = []
        if kind == "figure":
            img = smooth_image(rng, int(rng.integers(120, 260)), int(rng.integers(90, 200)))
            th, tw = img.shape
            room = page_h - writer.y - 80
            factor = min(float(rng.uniform(0.35, 0.8)) * page_w / tw, room / th)
            nw, nh = int(round(tw * factor)), int(round(th * factor))
            x = (page_w - nw) // 2
            y = int(writer.y)
            placed = cv2.resize(img, (nw, nh),
                                interpolation=cv2.INTER_AREA if factor < 1 else cv2.INTER_LINEAR)
            pages[page][y:y + nh, x:x + nw] = placed[..., None]
            fig_box = BBox(x, y, x + nw, y + nh)
            writer.y = y + nh + 8
            name = f"figure-{k}.png"
            provided = smooth_image(rng, tw, th) if (broken_figure and k == 0) else img
            cv2.imwrite(str(root / name), provided)
        cap_words = ["Figure" if kind == "figure" else "Table", f"{k + 1}:"]
        cap_words += _sentence(rng, int(rng.integers(8, 20)))
        writer.newline()
        cap_tokens = [writer.write(w) for w in cap_words]
        writer.newline()
        writer.newline()
        entry: dict = {"type": kind, "caption": " ".join(cap_words)}
        if kind == "table":
            n_rows, n_cols = int(rng.integers(2, 5)), int(rng.integers(2, 4))
            cells = [" ".join(_sentence(rng, int(rng.integers(1, 3)))) for _ in range(n_rows * n_cols)]
            entry["cells"] = cells
            # column-major on the page, row-major in the XML
            for c in range(n_cols):
                for r in range(n_rows):
                    for w in cells[r * n_cols + c].split():
                        body_tokens.append(writer.write(w))
            writer.newline()
            fig_box = BBox(min(t["x1"] for t in body_tokens), min(t["y1"] for t in body_tokens),
                           max(t["x2"] for t in body_tokens), max(t["y2"] for t in body_tokens))
        else:
            entry["image_file"] = name
        aux.append(entry)
        writer.newline()
        for w in _sentence(rng, int(rng.integers(10, 30))):
            writer.write(w)
        writer.newline()
        writer.newline()
        truth.append({
            "kind": kind, "page": page, "figure_box": fig_box,
            "caption_box": BBox(min(t["x1"] for t in cap_tokens), min(t["y1"] for t in cap_tokens),
                                max(t["x2"] for t in cap_tokens), max(t["y2"] for t in cap_tokens)),
            "caption": entry["caption"],
        })
    for writer in writers:
        for t in writer.tokens:
            if t["y2"] > page_h:
                raise ValueError("synthetic paper overflows the page; use more pages")
            y1, y2, x1, x2 = int(t["y1"]) + 3, int(t["y2"]) - 2, int(t["x1"]), int(t["x2"])
            pages[writer.page][y1:y2, x1:x2] = 60
        tokens.extend(writer.tokens)
    for i, px in enumerate(pages):
        PageRaster(px).save(root / f"page-{i:04d}.png")
    (root / "tokens.json").write_text(json.dumps(tokens, indent=1))
    (root / "aux.json").write_text(json.dumps(aux, indent=1))
    return {"truth": truth, "page_width": page_w, "page_height": page_h}


# ---------------------------------------------------------------------------
# fixture corpus


def _box_row(box, conf, row, col):
    x1, y1, x2, y2 = box
    return {"row": row, "col": col, "x1": x1, "y1": y1, "x2": x2, "y2": y2, "confidence": conf}


def write_detector_inputs(root) -> None:
    """Backend predictions for three pages plus ``paragraphs.json``.

    Page 0 has one confident figure, page 1 two near-duplicate boxes that
    collapse under NMS, page 2 only low-confidence boxes.
    """
    root = Path(root)
    preds = root / "predictions"
    preds.mkdir(parents=True, exist_ok=True)
    pages = [
        [_box_row((100, 120, 600, 420), 0.97, 3, 4), _box_row((40, 900, 90, 950), 0.12, 9, 1)],
        [_box_row((120, 500, 700, 800), 0.91, 6, 5), _box_row((126, 496, 704, 806), 0.88, 6, 6),
         _box_row((116, 506, 696, 798), 0.74, 7, 5)],
        [_box_row((100, 100, 500, 400), 0.41, 2, 2), _box_row((300, 500, 700, 900), 0.5, 5, 4)],
    ]
    for i, rows in enumerate(pages):
        (preds / f"page-{i:04d}.json").write_text(json.dumps(rows, indent=1))
    paragraphs = [
        {"text": "Figure 1: Training loss per epoch.", "page": 0,
         "x1": 100, "y1": 430, "x2": 600, "y2": 460},
        {"text": "In this section we describe the model.", "page": 0,
         "x1": 100, "y1": 500, "x2": 750, "y2": 600},
        {"text": "Fig. 2. Accuracy against model size.", "page": 1,
         "x1": 120, "y1": 815, "x2": 700, "y2": 840},
        {"text": "Table 1: Results.", "page": 2, "x1": 100, "y1": 60, "x2": 400, "y2": 80},
    ]
    (root / "paragraphs.json").write_text(json.dumps(paragraphs, indent=1))


def write_latex_paper(root, rng: np.random.Generator, kinds_per_page) -> list:
    """``original/`` and ``modified/`` page renders; one page per entry of
    ``kinds_per_page`` (a list of kinds drawn on that page)."""
    root = Path(root)
    (root / "original").mkdir(parents=True, exist_ok=True)
    (root / "modified").mkdir(parents=True, exist_ok=True)
    truth = []
    for i, kinds in enumerate(kinds_per_page):
        orig, mod, drawn = latex_page_pair(rng, len(kinds), kinds=list(kinds))
        orig.save(root / "original" / f"page-{i:04d}.png")
        mod.save(root / "modified" / f"page-{i:04d}.png")
        truth.append(drawn)
    return truth


def write_fixture_corpus(root, seed: int = 0) -> dict:
    """The small corpus used by the CLI tests and the determinism check.

    Layout::

        latex/paper-a/{original,modified}/page-NNNN.png   2 figures, 1 table
        xml/paper-x   one figure
        xml/paper-y   one figure whose image does not match the page
        xml/paper-z   one table
        detector/predictions/page-NNNN.json, detector/paragraphs.json
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    latex = write_latex_paper(root / "latex" / "paper-a", rng, [["figure"], ["table"], ["figure"]])
    xml = {
        "paper-x": write_xml_paper(root / "xml" / "paper-x", rng, 1, figures=1),
        "paper-y": write_xml_paper(root / "xml" / "paper-y", rng, 1, figures=1, broken_figure=True),
        "paper-z": write_xml_paper(root / "xml" / "paper-z", rng, 1, figures=0, tables=1),
    }
    write_detector_inputs(root / "detector")
    return {"latex": latex, "xml": xml}
