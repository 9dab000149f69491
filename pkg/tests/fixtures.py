"""Small hand-built label sets shared by several test modules."""

from figlabel.geometry import BBox
from figlabel.records import InducedLabel


def label(page, kind, box, caption=None, text=None, paper="p1"):
    return InducedLabel(paper, page, kind, BBox(*box),
                        None if caption is None else BBox(*caption), text,
                        page_width=850, page_height=1100)


def evaluation_fixture():
    """Two matched predictions, one spurious, two missed truths."""
    truths = [
        label(0, "figure", (100, 100, 400, 300), (100, 310, 400, 330), "Figure 1: Loss."),
        label(0, "figure", (450, 100, 800, 300)),
        label(1, "table", (100, 500, 700, 700), (100, 470, 700, 490), "Table 1: Counts."),
        label(1, "table", (100, 800, 700, 1000)),
    ]
    preds = [
        label(0, "figure", (102, 101, 401, 298), (0, 0, 10, 10), "figure 1:  loss"),
        label(0, "figure", (100, 600, 300, 700)),
        label(1, "table", (100, 502, 698, 700), (100, 470, 700, 490), "Other."),
    ]
    return preds, truths
