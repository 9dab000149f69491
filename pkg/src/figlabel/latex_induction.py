"""Label induction from LaTeX sources by diffing two renderings of a paper.

The source is recompiled with every figure framed in red, every table in
yellow, figure names in green and caption text in blue. Diffing the
rasterized pages against the original rendering leaves only those marks.
"""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .geometry import BBox, center, enclosing_box, intersection_area, solve_assignment
from .records import InducedLabel

log = logging.getLogger(__name__)

PREAMBLE = r"""\usepackage{color}
\usepackage{floatrow}
\usepackage{tcolorbox}

\DeclareColorBox{figurecolorbox}{\fcolorbox{red}{white}}
\DeclareColorBox{tablecolorbox}{\fcolorbox{yellow}{white}}

\floatsetup[figure]{framestyle=colorbox,
    colorframeset=figurecolorbox, framearound=all,
    frameset={\fboxrule1pt\fboxsep0pt}}
\floatsetup[table]{framestyle=colorbox,
    colorframeset=tablecolorbox, framearound=all,
    frameset={\fboxrule1pt\fboxsep0pt}}

\usepackage[labelfont={color=green},
    textfont={color=blue}]{caption}
"""

DIFF_TOLERANCE = 8
MIN_COMPONENT_SIZE_AT_100DPI = 20
COLOR_TOLERANCE = 120.0
CAPTION_GAP_FRACTION = 0.02

_BEGIN_DOCUMENT = re.compile(r"\\begin\s*\{document\}")
_CONFLICTS = [
    re.compile(r"\\usepackage\s*(\[[^\]]*\])?\s*\{[^}]*\b(caption|floatrow|float)\b[^}]*\}"),
    re.compile(r"\\DeclareColorBox\b"),
    re.compile(r"\\floatsetup\b"),
    re.compile(r"\\captionsetup\b.*color"),
]


class PreambleError(ValueError):
    pass


class PageMismatch(ValueError):
    pass


class ColorClass(enum.Enum):
    FIGURE_FRAME = "red"
    TABLE_FRAME = "yellow"
    FIGURE_NAME = "green"
    CAPTION_TEXT = "blue"


REFERENCE_COLORS = {
    ColorClass.FIGURE_FRAME: (255, 0, 0),
    ColorClass.TABLE_FRAME: (255, 255, 0),
    ColorClass.FIGURE_NAME: (0, 255, 0),
    ColorClass.CAPTION_TEXT: (0, 0, 255),
}
FRAME_KINDS = {ColorClass.FIGURE_FRAME: "figure", ColorClass.TABLE_FRAME: "table"}


@dataclass
class PageRaster:
    """An 8-bit RGB page image, ``pixels`` shaped (height, width, 3)."""

    pixels: np.ndarray
    dpi: int = 100

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) pixels, got {self.pixels.shape}")
        if self.pixels.shape[0] == 0 or self.pixels.shape[1] == 0:
            raise ValueError("empty page")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def load(cls, path, dpi: int = 100) -> "PageRaster":
        with Image.open(path) as im:
            return cls(np.asarray(im.convert("RGB")), dpi)

    def save(self, path) -> None:
        Image.fromarray(self.pixels, "RGB").save(path)


@dataclass(frozen=True)
class DiffComponent:
    bbox: BBox
    color_class: ColorClass
    pixel_count: int


def _strip_comment(line: str) -> str:
    m = re.search(r"(?<!\\)%", line)
    return line if m is None else line[: m.start()]


def inject_preamble(source: str) -> str:
    """Insert the framing and caption-coloring block before ``\\begin{document}``.

    Raises:
        PreambleError: "not a main file" when there is no document-begin
            marker, or "package conflict" when the preamble already loads
            packages or commands the block relies on.
    """
    offset = 0
    insert_at = None
    for lineno, line in enumerate(source.splitlines(keepends=True), 1):
        code = _strip_comment(line)
        m = _BEGIN_DOCUMENT.search(code)
        if m:
            insert_at = offset + m.start()
            break
        for pattern in _CONFLICTS:
            if pattern.search(code):
                raise PreambleError(f"package conflict at line {lineno}: {line.strip()}")
        offset += len(line)
    if insert_at is None:
        raise PreambleError("not a main file")
    return source[:insert_at] + PREAMBLE + source[insert_at:]


def diff_pages(original: PageRaster, modified: PageRaster,
               tolerance: int = DIFF_TOLERANCE) -> np.ndarray:
    """Boolean (H, W) mask of pixels whose largest channel difference exceeds ``tolerance``."""
    if original.pixels.shape != modified.pixels.shape or original.dpi != modified.dpi:
        raise PageMismatch(
            f"page mismatch: {original.width}x{original.height}@{original.dpi} vs "
            f"{modified.width}x{modified.height}@{modified.dpi}"
        )
    delta = np.abs(original.pixels.astype(np.int16) - modified.pixels.astype(np.int16))
    return delta.max(axis=2) > tolerance


def min_component_size(dpi: float) -> int:
    return max(1, int(round(MIN_COMPONENT_SIZE_AT_100DPI * (dpi / 100.0) ** 2)))


def classify_color(rgb: Sequence[float], tolerance: float = COLOR_TOLERANCE) -> Optional[ColorClass]:
    rgb = np.asarray(rgb, dtype=np.float64)
    best, best_dist = None, np.inf
    for cls, ref in REFERENCE_COLORS.items():
        d = float(np.linalg.norm(rgb - np.asarray(ref, dtype=np.float64)))
        if d < best_dist:
            best, best_dist = cls, d
    return best if best_dist <= tolerance else None


def extract_components(mask: np.ndarray, modified: PageRaster) -> list[DiffComponent]:
    """Connected regions of the diff mask, classified by their mean color.

    Boxes use inclusive pixel extents: a region whose pixels span columns
    10..110 gets ``x1=10, x2=110``.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (modified.height, modified.width):
        raise PageMismatch(f"mask shape {mask.shape} does not match page")
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return []
    min_size = min_component_size(modified.dpi)
    index = np.arange(1, count + 1)
    sizes = ndimage.sum_labels(mask, labels, index)
    means = np.stack(
        [ndimage.mean(modified.pixels[..., ch], labels, index) for ch in range(3)], axis=1
    )
    slices = ndimage.find_objects(labels)
    out = []
    for k, sl in enumerate(slices):
        if sizes[k] < min_size:
            continue
        cls = classify_color(means[k])
        if cls is None:
            log.debug("dropping component %d: mean color %s", k + 1, means[k])
            continue
        ys, xs = sl
        x1, x2 = xs.start, xs.stop - 1
        y1, y2 = ys.start, ys.stop - 1
        if x1 == x2 or y1 == y2:
            # a straight line has no area and cannot be a frame or caption
            continue
        out.append(DiffComponent(BBox(x1, y1, x2, y2), cls, int(sizes[k])))
    return out


def carve_caption(float_box: BBox, caption_boxes: Sequence[BBox]) -> BBox:
    """Largest caption-free band of ``float_box``.

    The captions' enclosing box splits the float into the bands above, below,
    left and right of it; the largest is returned (ties in that order).

    Raises:
        ValueError: if a caption does not touch the float, or if the
            captions leave no positive-area band ("caption covers float").
    """
    if not caption_boxes:
        return float_box
    for cb in caption_boxes:
        if intersection_area(float_box, cb) <= 0:
            raise ValueError(f"caption {cb.as_tuple()} does not intersect float")
    cap = enclosing_box(caption_boxes)
    f = float_box
    bands = [
        (f.x1, f.y1, f.x2, min(cap.y1, f.y2)),
        (f.x1, max(cap.y2, f.y1), f.x2, f.y2),
        (f.x1, f.y1, min(cap.x1, f.x2), f.y2),
        (max(cap.x2, f.x1), f.y1, f.x2, f.y2),
    ]
    best, best_area = None, 0.0
    for x1, y1, x2, y2 in bands:
        area = max(0.0, x2 - x1) * max(0.0, y2 - y1)
        if area > best_area:
            best, best_area = (x1, y1, x2, y2), area
    if best is None:
        raise ValueError("caption covers float")
    return BBox(*best)


def _near(a: BBox, b: BBox, gap: float) -> bool:
    dy = max(a.y1, b.y1) - min(a.y2, b.y2)
    dx = max(a.x1, b.x1) - min(a.x2, b.x2)
    return dy <= gap and dx <= gap


def group_captions(components: Sequence[DiffComponent], page_height: int) -> list[list[BBox]]:
    """Merge green name and blue text components into caption groups.

    Two pieces join when their vertical and horizontal gaps are both at most
    ``CAPTION_GAP_FRACTION * page_height``; glyph-level components on one
    text line therefore end up in the same group.
    """
    boxes = [c.bbox for c in components
             if c.color_class in (ColorClass.FIGURE_NAME, ColorClass.CAPTION_TEXT)]
    gap = CAPTION_GAP_FRACTION * page_height
    parent = list(range(len(boxes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if _near(boxes[i], boxes[j], gap):
                parent[find(i)] = find(j)
    groups: dict[int, list[BBox]] = {}
    for i, b in enumerate(boxes):
        groups.setdefault(find(i), []).append(b)
    out = list(groups.values())
    out.sort(key=lambda g: (min(b.y1 for b in g), min(b.x1 for b in g)))
    return out


def assemble_labels(paper_id: str, page_index: int, components: Sequence[DiffComponent],
                    page: PageRaster) -> list[InducedLabel]:
    """Turn one page's classified components into figure/table labels.

    Caption groups are paired with frames by minimum total center distance;
    each frame's box is then carved to exclude its caption.
    """
    frames = [c for c in components if c.color_class in FRAME_KINDS]
    frames.sort(key=lambda c: (c.bbox.y1, c.bbox.x1))
    groups = group_captions(components, page.height)
    group_boxes = [enclosing_box(g) for g in groups]

    assigned: dict[int, int] = {}
    if frames and groups:
        cost = [[center(f.bbox).distance(center(g)) for g in group_boxes] for f in frames]
        for fi, gi in solve_assignment(cost).pairs:
            assigned[fi] = gi

    labels = []
    for fi, frame in enumerate(frames):
        caption_box = None
        figure_box = frame.bbox
        gi = assigned.get(fi)
        if gi is not None:
            caption_box = group_boxes[gi]
            inside = [b for b in groups[gi] if intersection_area(frame.bbox, b) > 0]
            if inside:
                try:
                    figure_box = carve_caption(frame.bbox, inside)
                except ValueError:
                    log.warning("%s p%d: caption covers frame %s", paper_id, page_index,
                                frame.bbox.as_tuple())
                    continue
        labels.append(InducedLabel(
            paper_id=paper_id,
            page_index=page_index,
            kind=FRAME_KINDS[frame.color_class],
            figure_box=figure_box,
            caption_box=caption_box,
            dpi=page.dpi,
            page_width=page.width,
            page_height=page.height,
            provenance="latex",
        ))
    return labels


def induce_page(paper_id: str, page_index: int, original: PageRaster,
                modified: PageRaster) -> list[InducedLabel]:
    mask = diff_pages(original, modified)
    return assemble_labels(paper_id, page_index, extract_components(mask, modified), modified)


def page_files(directory) -> dict[int, Path]:
    """Map page index to file for every ``page-NNNN.png`` in ``directory``."""
    out = {}
    for p in Path(directory).glob("page-*.png"):
        m = re.fullmatch(r"page-(\d{4,})\.png", p.name)
        if m:
            out[int(m.group(1))] = p
    return dict(sorted(out.items()))
