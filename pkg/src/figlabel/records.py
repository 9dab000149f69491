"""Label records and their JSON-lines serialization.

Every line is one flat JSON object with a fixed key order. Coordinates are
written with 4 decimals so identical inputs always produce identical bytes.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .geometry import BBox

SCHEMA_VERSION = "1"
KINDS = ("figure", "table")
PROVENANCES = ("latex", "xml", "detector")

FIELDS = (
    "schema_version", "paper_id", "page", "kind",
    "fig_x1", "fig_y1", "fig_x2", "fig_y2",
    "cap_x1", "cap_y1", "cap_x2", "cap_y2",
    "caption_text", "name", "dpi", "page_width", "page_height", "provenance",
)


class RecordError(ValueError):
    """A label line that does not follow the schema."""


@dataclass(frozen=True)
class InducedLabel:
    """One figure or table on one page.

    Ground-truth files use the same record type; evaluation only looks at
    ``kind``, the boxes and ``caption_text``.
    """

    paper_id: str
    page_index: int
    kind: str
    figure_box: BBox
    caption_box: Optional[BBox] = None
    caption_text: Optional[str] = None
    name: Optional[str] = None
    dpi: int = 100
    page_width: int = 0
    page_height: int = 0
    provenance: str = "latex"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.page_index < 0:
            raise ValueError("negative page index")
        if self.page_width > 0 and self.page_height > 0:
            for box in (self.figure_box, self.caption_box):
                if box is not None and not box.within(self.page_width, self.page_height):
                    raise ValueError(f"box {box.as_tuple()} outside page")


GroundTruthRecord = InducedLabel


def _num(value: float, places: int = 4) -> str:
    out = f"{value:.{places}f}"
    return "0.0000" if out == "-0.0000" else out


def _json_str(value: Optional[str]) -> str:
    return "null" if value is None else json.dumps(value, ensure_ascii=False)


def format_record(label: InducedLabel) -> str:
    fb = label.figure_box
    cb = label.caption_box
    cap = ["null"] * 4 if cb is None else [_num(v) for v in cb.as_tuple()]
    parts = [
        ("schema_version", json.dumps(SCHEMA_VERSION)),
        ("paper_id", json.dumps(label.paper_id, ensure_ascii=False)),
        ("page", str(label.page_index)),
        ("kind", json.dumps(label.kind)),
        ("fig_x1", _num(fb.x1)), ("fig_y1", _num(fb.y1)),
        ("fig_x2", _num(fb.x2)), ("fig_y2", _num(fb.y2)),
        ("cap_x1", cap[0]), ("cap_y1", cap[1]), ("cap_x2", cap[2]), ("cap_y2", cap[3]),
        ("caption_text", _json_str(label.caption_text)),
        ("name", _json_str(label.name)),
        ("dpi", str(label.dpi)),
        ("page_width", str(label.page_width)),
        ("page_height", str(label.page_height)),
        ("provenance", json.dumps(label.provenance)),
    ]
    return "{" + ", ".join(f'"{k}": {v}' for k, v in parts) + "}"


def parse_record(line: str, where: str = "<line>") -> InducedLabel:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"{where}: invalid JSON at column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise RecordError(f"{where}: expected an object")
    missing = [f for f in FIELDS if f not in obj]
    if missing:
        raise RecordError(f"{where}: missing fields {missing}")
    if obj["schema_version"] != SCHEMA_VERSION:
        raise RecordError(f"{where}: schema_version {obj['schema_version']!r} != {SCHEMA_VERSION!r}")
    cap = [obj[k] for k in ("cap_x1", "cap_y1", "cap_x2", "cap_y2")]
    if any(v is None for v in cap) and not all(v is None for v in cap):
        raise RecordError(f"{where}: caption box partially null")
    try:
        return InducedLabel(
            paper_id=str(obj["paper_id"]),
            page_index=int(obj["page"]),
            kind=obj["kind"],
            figure_box=BBox(float(obj["fig_x1"]), float(obj["fig_y1"]),
                            float(obj["fig_x2"]), float(obj["fig_y2"])),
            caption_box=None if cap[0] is None else BBox(*(float(v) for v in cap)),
            caption_text=obj["caption_text"],
            name=obj["name"],
            dpi=int(obj["dpi"]),
            page_width=int(obj["page_width"]),
            page_height=int(obj["page_height"]),
            provenance=obj["provenance"],
        )
    except (TypeError, ValueError) as exc:
        raise RecordError(f"{where}: {exc}") from None


def sort_key(label: InducedLabel):
    fb = label.figure_box
    return (label.paper_id, label.page_index, label.kind, fb.y1, fb.x1, fb.y2, fb.x2)


def dumps(labels: Iterable[InducedLabel]) -> str:
    return "".join(format_record(label) + "\n" for label in labels)


def loads(text: str, source: str = "<string>") -> list[InducedLabel]:
    out = []
    # split on "\n" only: raw U+0085 or U+2028 may appear inside strings
    for lineno, line in enumerate(text.split("\n"), 1):
        if line.strip():
            out.append(parse_record(line, f"{source}:{lineno}"))
    return out


def read_labels(path) -> list[InducedLabel]:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path))


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_labels(path, labels: Iterable[InducedLabel]) -> None:
    atomic_write_text(path, dumps(labels))
