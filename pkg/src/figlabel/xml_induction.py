"""Label induction from publisher XML: captions, figure images and table cells.

Captions are found in the PDF text layer by approximate substring search,
figure images by multi-scale template matching on the rendered page, and
tables by the token interval whose bag of words best matches the cells.
"""

from __future__ import annotations

import logging
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import cv2
import numpy as np
from scipy import fft as sp_fft

from .geometry import BBox, enclosing_box
from .records import InducedLabel

log = logging.getLogger(__name__)

NUM_SCALES = 45
MIN_SCALE = 0.10
MAX_SCALE = 0.95
ACCEPT_SCORE = 0.8
MAX_CAPTION_DISTANCE = 0.5


class CaptionNotFound(LookupError):
    pass


@dataclass(frozen=True)
class TextToken:
    text: str
    bbox: BBox
    page_index: int


@dataclass(frozen=True)
class FuzzyMatch:
    start: int
    end: int
    distance: int


@dataclass(frozen=True)
class IntervalMatch:
    start_token: int
    end_token: int  # inclusive
    distance: int


@dataclass(frozen=True)
class TemplateMatch:
    bbox: BBox
    score: float
    scale: float


# ---------------------------------------------------------------------------
# approximate substring search


def _codes(seq) -> np.ndarray:
    if isinstance(seq, str):
        return np.frombuffer(seq.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)
    ids: dict = {}
    return np.array([ids.setdefault(x, len(ids)) for x in seq], dtype=np.int64)


def _last_row(needle: np.ndarray, hay: np.ndarray, free_start: bool) -> np.ndarray:
    """Last DP row of the edit distance of ``needle`` against prefixes of ``hay``.

    With ``free_start`` the first row is all zeros, so entry ``j`` is the best
    distance of any substring ending at ``j``. Otherwise entry ``j`` is the
    plain Levenshtein distance to ``hay[:j]``.

    The in-row insertion chain ``D[j] = min(T[j], D[j-1] + 1)`` is solved in
    closed form as ``j + cummin(T[k] - k)``.
    """
    n = len(hay)
    idx = np.arange(n + 1)
    prev = np.zeros(n + 1, dtype=np.int64) if free_start else idx.copy()
    for i, ch in enumerate(needle, 1):
        t = np.empty(n + 1, dtype=np.int64)
        t[0] = i
        t[1:] = np.minimum(prev[1:] + 1, prev[:-1] + (hay != ch))
        prev = np.minimum.accumulate(t - idx) + idx
    return prev


def fuzzy_substring(needle, haystack) -> FuzzyMatch:
    """Substring of ``haystack`` with the smallest Levenshtein distance to ``needle``.

    Starting and ending anywhere in the haystack is free, so the cost stays
    O(len(needle) * len(haystack)). Ties go to the smallest end offset, then
    the shortest span.
    """
    if isinstance(needle, str) and isinstance(haystack, str):
        a, b = _codes(needle), _codes(haystack)
    else:
        codes = _codes(list(needle) + list(haystack))
        a, b = codes[: len(needle)], codes[len(needle):]
    if len(a) == 0:
        return FuzzyMatch(0, 0, 0)
    row = _last_row(a, b, free_start=True)
    end = int(np.argmin(row))
    dist = int(row[end])
    # Shortest span ending at `end`: anchor the reversed strings at `end`.
    back = _last_row(a[::-1], b[:end][::-1], free_start=False)
    length = int(np.flatnonzero(back == dist)[0])
    return FuzzyMatch(end - length, end, dist)


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def locate_caption_page(caption_text: str, pages: Sequence[str],
                        max_distance: float = MAX_CAPTION_DISTANCE) -> tuple[int, FuzzyMatch]:
    """Page whose text contains the closest match to ``caption_text``.

    Raises:
        CaptionNotFound: if even the best page needs more than
            ``max_distance`` edits per caption character.
    """
    if not pages:
        raise ValueError("no pages to search")
    if not caption_text:
        raise ValueError("empty caption")
    best_page, best = -1, None
    for k, text in enumerate(pages):
        m = fuzzy_substring(caption_text, text)
        if best is None or m.distance < best.distance:
            best_page, best = k, m
    if best.distance / len(caption_text) > max_distance:
        raise CaptionNotFound(
            f"caption not found (best distance {best.distance} on page {best_page})"
        )
    return best_page, best


# ---------------------------------------------------------------------------
# template matching


def luminance(rgb: np.ndarray) -> np.ndarray:
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 2:
        return rgb
    return rgb[..., 0] * 0.299 + rgb[..., 1] * 0.587 + rgb[..., 2] * 0.114


def resize(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Area averaging when shrinking, bilinear when enlarging."""
    h, w = image.shape
    if (w, h) == (width, height):
        return image
    interp = cv2.INTER_AREA if width * height < w * h else cv2.INTER_LINEAR
    return cv2.resize(image, (width, height), interpolation=interp)


def ncc_map(page: np.ndarray, template: np.ndarray, page_fft=None) -> np.ndarray:
    """Mean-subtracted normalized cross-correlation at every valid placement.

    Placements whose window (or the template) has no variance score 0.
    ``page_fft`` lets callers reuse one page transform across templates; it
    is ``(shape, rfft2(page, shape))``.
    """
    page = np.asarray(page, dtype=np.float64)
    tpl = np.asarray(template, dtype=np.float64)
    H, W = page.shape
    h, w = tpl.shape
    if h > H or w > W:
        raise ValueError("template larger than page")
    n = h * w
    t0 = tpl - tpl.mean()
    t_norm = math.sqrt(float((t0 * t0).sum()))
    out_shape = (H - h + 1, W - w + 1)
    # resizing runs in float32, so a flat template keeps ~1e-7 relative noise
    if t_norm <= 1e-6 * max(1.0, float(np.abs(tpl).max())) * math.sqrt(n):
        return np.zeros(out_shape)

    if page_fft is None:
        shape = (sp_fft.next_fast_len(H, real=True), sp_fft.next_fast_len(W, real=True))
        page_fft = (shape, sp_fft.rfft2(page, shape))
    shape, pf = page_fft
    kernel = np.zeros(shape)
    kernel[:h, :w] = t0[::-1, ::-1]
    full = sp_fft.irfft2(pf * sp_fft.rfft2(kernel), shape)
    numer = full[h - 1:H, w - 1:W]

    # window sums from integral images; t0 sums to zero so numer needs no
    # window-mean correction
    ii = np.zeros((H + 1, W + 1))
    ii[1:, 1:] = page.cumsum(0).cumsum(1)
    ii2 = np.zeros((H + 1, W + 1))
    ii2[1:, 1:] = (page * page).cumsum(0).cumsum(1)

    def box(s):
        return s[h:, w:] - s[:-h, w:] - s[h:, :-w] + s[:-h, :-w]

    wsum = box(ii)
    wvar = box(ii2) - wsum * wsum / n
    scale = max(1.0, float(np.abs(page).max())) ** 2 * n
    ok = wvar > 1e-9 * scale
    out = np.zeros(out_shape)
    out[ok] = numer[ok] / (t_norm * np.sqrt(wvar[ok]))
    return np.clip(out, -1.0, 1.0)


def template_scales(num: int = NUM_SCALES, lo: float = MIN_SCALE, hi: float = MAX_SCALE) -> np.ndarray:
    return np.linspace(lo, hi, num)


def match_template_multiscale(page_gray: np.ndarray, template_gray: np.ndarray,
                              scales: Optional[Sequence[float]] = None) -> TemplateMatch:
    """Best placement of a figure image on a page over a range of sizes.

    At each scale the template is resized so its largest side spans that
    fraction of the matching page side. Ties keep the smaller scale, then the
    top-most, left-most placement.

    Raises:
        ValueError: if no scale yields a template that fits on the page.
    """
    page = luminance(page_gray)
    tpl = luminance(template_gray)
    if page.size == 0 or tpl.size == 0:
        raise ValueError("empty raster")
    H, W = page.shape
    th, tw = tpl.shape
    shape = (sp_fft.next_fast_len(H, real=True), sp_fft.next_fast_len(W, real=True))
    page_fft = (shape, sp_fft.rfft2(page, shape))

    best = None
    for s in template_scales() if scales is None else scales:
        s = float(s)
        factor = s * W / tw if tw >= th else s * H / th
        nw, nh = int(round(tw * factor)), int(round(th * factor))
        if nw < 2 or nh < 2 or nw > W or nh > H:
            continue
        scaled = resize(tpl, nw, nh)
        scores = ncc_map(page, scaled, page_fft)
        k = int(np.argmax(scores))
        y, x = divmod(k, scores.shape[1])
        score = float(scores[y, x])
        if best is None or score > best.score:
            best = TemplateMatch(BBox(x, y, x + nw, y + nh), score, s)
    if best is None:
        raise ValueError("template does not fit the page at any scale")
    return best


def accept_figure_match(m: TemplateMatch, threshold: float = ACCEPT_SCORE) -> bool:
    return m.score >= threshold


# ---------------------------------------------------------------------------
# tables


def bag_of_words_interval(table_words: Sequence[Hashable], page_tokens: Sequence[Hashable]) -> IntervalMatch:
    """Token interval with the smallest bag-of-words distance to ``table_words``.

    The distance is the size of the multiset symmetric difference. For each
    start a difference counter is decremented token by token, allowing
    negative counts; the first strictly best interval in scan order wins.
    """
    if not table_words or not page_tokens:
        raise ValueError("table words and page tokens must be nonempty")
    table = Counter(table_words)
    total = sum(table.values())
    best_dist = math.inf
    best = (0, 0)
    n = len(page_tokens)
    for start in range(n):
        diff = dict(table)
        cur = total
        for end in range(start, n):
            tok = page_tokens[end]
            left = diff.get(tok, 0) - 1
            diff[tok] = left
            cur += -1 if left >= 0 else 1
            if cur < best_dist:
                best_dist = cur
                best = (start, end)
    return IntervalMatch(best[0], best[1], int(best_dist))


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[str]:
    """Whitespace split, outer punctuation stripped, case-folded."""
    out = []
    for raw in text.split():
        i, j = 0, len(raw)
        while i < j and _is_punct(raw[i]):
            i += 1
        while j > i and _is_punct(raw[j - 1]):
            j -= 1
        if i < j:
            out.append(raw[i:j].casefold())
    return out


def page_text(tokens: Sequence[TextToken]) -> tuple[str, list[tuple[int, int]]]:
    """Join tokens with single spaces; also return each token's char span."""
    parts, spans, pos = [], [], 0
    for tok in tokens:
        text = normalize_whitespace(tok.text)
        parts.append(text)
        spans.append((pos, pos + len(text)))
        pos += len(text) + 1
    return " ".join(parts), spans


def split_pages(tokens: Sequence[TextToken]) -> list[list[TextToken]]:
    if not tokens:
        return []
    pages: list[list[TextToken]] = [[] for _ in range(max(t.page_index for t in tokens) + 1)]
    for t in tokens:
        pages[t.page_index].append(t)
    return pages


@dataclass(frozen=True)
class LocatedCaption:
    page_index: int
    match: FuzzyMatch
    bbox: BBox
    tokens: tuple[TextToken, ...]


def locate_caption(caption_text: str, pages: Sequence[Sequence[TextToken]]) -> LocatedCaption:
    """Find the caption in the text layer and box the tokens it covers.

    Raises:
        CaptionNotFound: see :func:`locate_caption_page`.
    """
    texts, spans = zip(*(page_text(p) for p in pages)) if pages else ((), ())
    caption = normalize_whitespace(caption_text)
    page_index, match = locate_caption_page(caption, list(texts))
    covered = tuple(
        tok for tok, (s, e) in zip(pages[page_index], spans[page_index])
        if s < match.end and e > match.start
    )
    if not covered:
        raise CaptionNotFound("caption match covers no tokens")
    return LocatedCaption(page_index, match, enclosing_box(t.bbox for t in covered), covered)


@dataclass(frozen=True)
class LocatedTable:
    page_index: int
    figure_box: BBox
    caption_box: BBox
    match: IntervalMatch


def locate_table(table_cells_text: Sequence[str], caption_text: str,
                 page_tokens: Sequence[TextToken]) -> LocatedTable:
    """Box a table from its cell texts and caption.

    The caption picks the page; the table body is the token interval on that
    page closest to the cells' bag of words.
    """
    if not table_cells_text or not page_tokens:
        raise ValueError("table cells and page tokens must be nonempty")
    pages = split_pages(page_tokens)
    cap = locate_caption(caption_text, pages)
    words = [w for cell in table_cells_text for w in tokenize(cell)]
    if not words:
        raise ValueError("table cells contain no words")
    owners: list[TextToken] = []
    seq: list[str] = []
    for tok in pages[cap.page_index]:
        for w in tokenize(tok.text):
            seq.append(w)
            owners.append(tok)
    if not seq:
        raise CaptionNotFound("located page has no words")
    m = bag_of_words_interval(words, seq)
    body = enclosing_box(owners[k].bbox for k in range(m.start_token, m.end_token + 1))
    return LocatedTable(cap.page_index, body, cap.bbox, m)


# ---------------------------------------------------------------------------
# packaging


@dataclass(frozen=True)
class LocatedItem:
    """A figure or table placed on a page, ready to become a label."""

    kind: str
    page_index: int
    figure_box: BBox
    caption_box: Optional[BBox]
    caption_text: Optional[str]
    page_width: int
    page_height: int
    template: Optional[TemplateMatch] = None


def assemble_xml_labels(paper_id: str, items: Sequence[LocatedItem], dpi: int = 100) -> list[InducedLabel]:
    """Labels for one paper, or none if any template match was rejected."""
    if any(it.template is not None and not accept_figure_match(it.template) for it in items):
        return []
    return [
        InducedLabel(
            paper_id=paper_id,
            page_index=it.page_index,
            kind=it.kind,
            figure_box=it.figure_box,
            caption_box=it.caption_box,
            caption_text=it.caption_text,
            dpi=dpi,
            page_width=it.page_width,
            page_height=it.page_height,
            provenance="xml",
        )
        for it in items
    ]

