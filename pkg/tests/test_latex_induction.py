import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from figlabel.geometry import BBox, intersection_area
from figlabel.latex_induction import (
    PREAMBLE, ColorClass, DiffComponent, PageMismatch, PageRaster, PreambleError,
    assemble_labels, carve_caption, diff_pages, extract_components, inject_preamble,
    min_component_size,
)
from figlabel.synthetic import _fill, _outline, latex_page_pair
from oracles import brute_assignment, max_empty_rectangle

RED = (255, 0, 0)
YELLOW = (255, 255, 0)
GREEN = (0, 255, 0)
BLUE = (0, 0, 255)


def blank(w=200, h=150):
    return np.full((h, w, 3), 255, dtype=np.uint8)


# -- preamble ---------------------------------------------------------------

MINIMAL = "\\documentclass{article}\n\\usepackage{graphicx}\n\\begin{document}\nHi\n\\end{document}\n"


def test_inject_preamble_inserts_block_before_begin_document():
    out = inject_preamble(MINIMAL)
    head, tail = MINIMAL.split("\\begin{document}")
    assert out == head + PREAMBLE + "\\begin{document}" + tail


def test_preamble_block_is_verbatim():
    assert "\\DeclareColorBox{figurecolorbox}{\\fcolorbox{red}{white}}" in PREAMBLE
    assert "\\DeclareColorBox{tablecolorbox}{\\fcolorbox{yellow}{white}}" in PREAMBLE
    assert PREAMBLE.count("frameset={\\fboxrule1pt\\fboxsep0pt}}") == 2
    assert "\\usepackage[labelfont={color=green},\n    textfont={color=blue}]{caption}" in PREAMBLE
    for pkg in ("color", "floatrow", "tcolorbox"):
        assert f"\\usepackage{{{pkg}}}" in PREAMBLE


def test_inject_preamble_needs_document_begin():
    with pytest.raises(PreambleError, match="not a main file"):
        inject_preamble("\\section{Intro}\nText\n")


def test_commented_begin_document_is_ignored():
    with pytest.raises(PreambleError, match="not a main file"):
        inject_preamble("\\documentclass{article}\n% \\begin{document}\n")


@pytest.mark.parametrize("line", [
    "\\usepackage[font=small,labelfont={color=red}]{caption}",
    "\\usepackage{floatrow}",
    "\\captionsetup{labelfont={color=gray}}",
    "\\floatsetup{style=plain}",
])
def test_inject_preamble_detects_conflicts(line):
    src = f"\\documentclass{{article}}\n{line}\n\\begin{{document}}\n"
    with pytest.raises(PreambleError, match="package conflict at line 2"):
        inject_preamble(src)


def test_commented_conflict_is_ignored():
    src = "\\documentclass{article}\n% \\usepackage{caption}\n\\begin{document}\n"
    assert PREAMBLE in inject_preamble(src)


# -- diffing ----------------------------------------------------------------

def test_identical_pages_give_empty_mask():
    page = PageRaster(blank())
    assert not diff_pages(page, page).any()


def test_diff_is_exactly_the_drawn_outline():
    orig = blank()
    mod = orig.copy()
    _outline(mod, BBox(10, 10, 110, 90), RED)
    expected = np.zeros(orig.shape[:2], dtype=bool)
    _outline(expected, BBox(10, 10, 110, 90), True)
    assert np.array_equal(diff_pages(PageRaster(orig), PageRaster(mod)), expected)


def test_diff_tolerance_absorbs_small_noise():
    orig = blank()
    mod = orig.copy()
    mod[5:9, 5:9] = 255 - 8
    assert not diff_pages(PageRaster(orig), PageRaster(mod)).any()
    mod[5:9, 5:9] = 255 - 9
    assert diff_pages(PageRaster(orig), PageRaster(mod)).sum() == 16


def test_diff_page_mismatch():
    with pytest.raises(PageMismatch, match="page mismatch"):
        diff_pages(PageRaster(blank(640, 480)), PageRaster(blank(640, 481)))
    with pytest.raises(PageMismatch):
        diff_pages(PageRaster(blank(), dpi=100), PageRaster(blank(), dpi=150))


@given(st.integers(0, 2**32 - 1))
def test_diff_with_self_is_empty(seed):
    px = np.random.default_rng(seed).integers(0, 256, size=(12, 9, 3), dtype=np.uint8)
    p = PageRaster(px)
    assert not diff_pages(p, p).any()


# -- components -------------------------------------------------------------

def components_of(orig, mod, dpi=100):
    o, m = PageRaster(orig, dpi), PageRaster(mod, dpi)
    return extract_components(diff_pages(o, m), m)


def test_empty_mask_has_no_components():
    page = PageRaster(blank())
    assert extract_components(np.zeros((150, 200), bool), page) == []


def test_red_outline_component():
    orig = blank()
    mod = orig.copy()
    _outline(mod, BBox(10, 10, 110, 90), RED)
    (comp,) = components_of(orig, mod)
    assert comp.color_class is ColorClass.FIGURE_FRAME
    assert comp.bbox == BBox(10, 10, 110, 90)
    assert comp.pixel_count == 2 * 101 + 2 * 79


def test_red_and_yellow_outlines():
    orig = blank()
    mod = orig.copy()
    _outline(mod, BBox(5, 5, 90, 70), RED)
    _outline(mod, BBox(100, 20, 190, 140), YELLOW)
    comps = sorted(components_of(orig, mod), key=lambda c: c.bbox.x1)
    assert [c.color_class for c in comps] == [ColorClass.FIGURE_FRAME, ColorClass.TABLE_FRAME]
    assert [c.bbox for c in comps] == [BBox(5, 5, 90, 70), BBox(100, 20, 190, 140)]


def test_diagonal_pixels_are_connected():
    orig = blank()
    mod = orig.copy()
    for k in range(30):
        mod[10 + k, 10 + k] = BLUE
    (comp,) = components_of(orig, mod)
    assert comp.bbox == BBox(10, 10, 39, 39)


def test_small_specks_and_off_colors_dropped():
    orig = blank()
    mod = orig.copy()
    _fill(mod, 5, 5, 8, 8, RED)  # 16 px < 20
    _fill(mod, 50, 50, 70, 70, (128, 128, 128))  # gray, far from every reference
    assert components_of(orig, mod) == []


def test_min_component_size_scales_with_dpi_squared():
    assert min_component_size(100) == 20
    assert min_component_size(200) == 80
    assert min_component_size(50) == 5


@given(st.integers(0, 2**32 - 1))
def test_components_partition_mask(seed):
    rng = np.random.default_rng(seed)
    orig = blank(60, 40)
    mod = orig.copy()
    for _ in range(6):
        x, y = rng.integers(0, 50), rng.integers(0, 30)
        w, h = rng.integers(2, 10), rng.integers(2, 10)
        _fill(mod, x, y, min(59, x + w), min(39, y + h), [RED, YELLOW, GREEN, BLUE][rng.integers(4)])
    mask = diff_pages(PageRaster(orig), PageRaster(mod))
    comps = extract_components(mask, PageRaster(mod))
    # kept components are disjoint pixel sets, so their counts never exceed the mask
    assert sum(c.pixel_count for c in comps) <= mask.sum()
    for c in comps:
        sub = mask[int(c.bbox.y1):int(c.bbox.y2) + 1, int(c.bbox.x1):int(c.bbox.x2) + 1]
        assert sub.sum() >= c.pixel_count


# -- caption carving --------------------------------------------------------

def test_carve_caption_examples():
    f = BBox(0, 0, 100, 100)
    assert carve_caption(f, [BBox(0, 80, 100, 100)]) == BBox(0, 0, 100, 80)
    assert carve_caption(f, []) == f
    assert carve_caption(f, [BBox(80, 0, 100, 100)]) == BBox(0, 0, 80, 100)


def test_carve_caption_covering_float():
    with pytest.raises(ValueError, match="caption covers float"):
        carve_caption(BBox(0, 0, 10, 10), [BBox(-1, -1, 11, 11)])


def test_carve_caption_requires_intersection():
    with pytest.raises(ValueError):
        carve_caption(BBox(0, 0, 10, 10), [BBox(20, 20, 30, 30)])


@st.composite
def float_and_captions(draw):
    fx, fy = draw(st.integers(0, 50)), draw(st.integers(0, 50))
    fw, fh = draw(st.integers(20, 200)), draw(st.integers(20, 200))
    f = BBox(fx, fy, fx + fw, fy + fh)
    caps = []
    for _ in range(draw(st.integers(1, 3))):
        x1 = draw(st.integers(fx, fx + fw - 2))
        y1 = draw(st.integers(fy, fy + fh - 2))
        x2 = draw(st.integers(x1 + 1, fx + fw))
        y2 = draw(st.integers(y1 + 1, fy + fh))
        caps.append(BBox(x1, y1, x2, y2))
    return f, caps


@given(float_and_captions())
def test_carved_box_inside_float_and_clear_of_captions(case):
    f, caps = case
    try:
        out = carve_caption(f, caps)
    except ValueError as exc:
        assert "caption covers float" in str(exc)
        return
    assert f.contains(out)
    assert all(intersection_area(out, c) == 0 for c in caps)


@given(float_and_captions())
def test_carve_single_caption_is_maximal(case):
    f, caps = case
    cap = caps[0]
    expected = max_empty_rectangle(f, cap)
    if expected is None:
        return
    assert carve_caption(f, [cap]).area == expected.area


# -- assembling labels ------------------------------------------------------

def test_single_figure_with_caption_band():
    orig = blank(300, 250)
    # caption glyph blocks in black, then recolored
    words = [(20, 180, 40, 187), (45, 180, 90, 187), (20, 191, 120, 198)]
    for w in words:
        _fill(orig, *w, (0, 0, 0))
    mod = orig.copy()
    _outline(mod, BBox(10, 10, 250, 210), RED)
    _fill(mod, *words[0], GREEN)
    for w in words[1:]:
        _fill(mod, *w, BLUE)
    page = PageRaster(mod)
    (label,) = assemble_labels("p", 0, components_of(orig, mod), page)
    assert label.kind == "figure"
    assert label.caption_box == BBox(20, 180, 120, 198)
    assert label.figure_box == BBox(10, 10, 250, 180)
    assert label.page_width == 300 and label.page_height == 250 and label.provenance == "latex"


def test_frame_without_caption():
    orig = blank()
    mod = orig.copy()
    _outline(mod, BBox(10, 10, 110, 90), YELLOW)
    (label,) = assemble_labels("p", 2, components_of(orig, mod), PageRaster(mod))
    assert label.kind == "table" and label.page_index == 2
    assert label.figure_box == BBox(10, 10, 110, 90)
    assert label.caption_box is None and label.caption_text is None


def test_two_frames_two_captions_pairing_is_min_distance():
    frames = [DiffComponent(BBox(0, 0, 100, 100), ColorClass.FIGURE_FRAME, 400),
              DiffComponent(BBox(0, 200, 100, 300), ColorClass.FIGURE_FRAME, 400)]
    caps = [DiffComponent(BBox(10, 270, 90, 290), ColorClass.CAPTION_TEXT, 50),
            DiffComponent(BBox(10, 70, 90, 90), ColorClass.CAPTION_TEXT, 50)]
    page = PageRaster(blank(120, 320))
    labels = assemble_labels("p", 0, frames + caps, page)
    # brute force over the two pairings of frame centers to caption centers
    fc = [(50, 50), (50, 250)]
    cc = [(50, 280), (50, 80)]
    cost = [[np.hypot(a[0] - b[0], a[1] - b[1]) for b in cc] for a in fc]
    _, pairs = brute_assignment(cost)
    assert pairs == ((0, 1), (1, 0))
    assert [lab.caption_box for lab in labels] == [caps[1].bbox, caps[0].bbox]
    assert [lab.figure_box for lab in labels] == [BBox(0, 0, 100, 70), BBox(0, 200, 100, 270)]


@pytest.mark.parametrize("seed", range(5))
def test_synthetic_round_trip(seed):
    rng = np.random.default_rng(seed)
    orig, mod, drawn = latex_page_pair(rng, n_floats=3)
    labels = assemble_labels("p", 0, extract_components(diff_pages(orig, mod), mod), mod)
    assert [lab.kind for lab in labels] == [d.kind for d in drawn]
    for lab, d in zip(labels, drawn):
        assert lab.caption_box == d.caption
        assert lab.figure_box == max_empty_rectangle(d.frame, d.caption)
