"""Per-paper and per-page workers behind the CLI, plus corpus statistics.

Workers are module-level functions so they can be shipped to a process
pool; each returns plain records and never writes output itself.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from PIL import Image

from . import detection, latex_induction, xml_induction
from .geometry import BBox
from .records import InducedLabel, sort_key

log = logging.getLogger(__name__)


class InputError(ValueError):
    """A corpus file or directory that cannot be used."""


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """``map`` that keeps input order, optionally across processes."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# LaTeX


def pair_page_files(original_dir, modified_dir) -> list[tuple[int, Path, Path]]:
    orig = latex_induction.page_files(original_dir)
    mod = latex_induction.page_files(modified_dir)
    for idx in sorted(set(orig) | set(mod)):
        if idx not in orig:
            raise InputError(f"page-{idx:04d}.png missing in {original_dir}")
        if idx not in mod:
            raise InputError(f"page-{idx:04d}.png missing in {modified_dir}")
    if not orig:
        raise InputError(f"no page-NNNN.png files in {original_dir}")
    return [(idx, orig[idx], mod[idx]) for idx in orig]


def latex_page_worker(args) -> list[InducedLabel]:
    paper_id, idx, orig_path, mod_path, dpi = args
    original = latex_induction.PageRaster.load(orig_path, dpi)
    modified = latex_induction.PageRaster.load(mod_path, dpi)
    try:
        return latex_induction.induce_page(paper_id, idx, original, modified)
    except latex_induction.PageMismatch as exc:
        raise InputError(f"page-{idx:04d}.png: {exc}") from None


def induce_latex(original_dir, modified_dir, paper_id: str, dpi: int = 100,
                 workers: int = 1) -> list[InducedLabel]:
    jobs = [(paper_id, idx, o, m, dpi) for idx, o, m in pair_page_files(original_dir, modified_dir)]
    labels = [lab for page in parallel_map(latex_page_worker, jobs, workers) for lab in page]
    return sorted(labels, key=sort_key)


# ---------------------------------------------------------------------------
# XML


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_aux(path) -> list[dict]:
    """Read and validate ``aux.json``."""
    path = Path(path)
    data = _load_json(path)
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a JSON array")
    for k, item in enumerate(data):
        where = f"{path}[{k}]"
        if not isinstance(item, dict):
            raise InputError(f"{where}: expected an object")
        if item.get("type") not in ("figure", "table"):
            raise InputError(f"{where}.type: must be 'figure' or 'table'")
        if not isinstance(item.get("caption"), str) or not item["caption"].strip():
            raise InputError(f"{where}.caption: missing or empty")
        image, cells = item.get("image_file"), item.get("cells")
        if image is not None and not isinstance(image, str):
            raise InputError(f"{where}.image_file: must be a string")
        if cells is not None and not (isinstance(cells, list) and all(isinstance(c, str) for c in cells)):
            raise InputError(f"{where}.cells: must be an array of strings")
        if item["type"] == "figure" and image is None:
            raise InputError(f"{where}.image_file: required for figures")
        if item["type"] == "table" and image is None and not cells:
            raise InputError(f"{where}: a table needs cells or image_file")
    return data


def load_tokens(path) -> list[xml_induction.TextToken]:
    """Read ``tokens.json``; tokens with blank text are dropped."""
    path = Path(path)
    data = _load_json(path)
    if not isinstance(data, list):
        raise InputError(f"{path}: expected a JSON array")
    out = []
    for k, t in enumerate(data):
        try:
            text = str(t["text"])
            box = BBox(float(t["x1"]), float(t["y1"]), float(t["x2"]), float(t["y2"]))
            page = int(t["page"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}[{k}]: {exc!r}") from None
        if page < 0:
            raise InputError(f"{path}[{k}].page: negative")
        if text.strip():
            out.append(xml_induction.TextToken(text, box, page))
    return out


def _gray(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return xml_induction.luminance(np.asarray(im.convert("RGB")))


@dataclass(frozen=True)
class PaperResult:
    paper_id: str
    labels: tuple
    skip_reason: Optional[str] = None
    min_template_score: Optional[float] = None


def xml_paper_worker(args) -> PaperResult:
    """Induce labels for one XML paper directory."""
    paper_dir, dpi = args
    paper_dir = Path(paper_dir)
    paper_id = paper_dir.name
    aux = load_aux(paper_dir / "aux.json")
    tokens = load_tokens(paper_dir / "tokens.json")
    page_paths = latex_induction.page_files(paper_dir)
    if tokens and max(t.page_index for t in tokens) not in page_paths:
        raise InputError(f"{paper_dir}: tokens reference a page with no page image")
    pages_tokens = xml_induction.split_pages(tokens)
    if not pages_tokens:
        return PaperResult(paper_id, (), "no-text")

    sizes = {}

    def page_size(idx):
        if idx not in sizes:
            if idx not in page_paths:
                raise InputError(f"{paper_dir}: page-{idx:04d}.png missing")
            with Image.open(page_paths[idx]) as im:
                sizes[idx] = im.size
        return sizes[idx]

    items = []
    scores = []
    for k, entry in enumerate(aux):
        try:
            cap = xml_induction.locate_caption(entry["caption"], pages_tokens)
            width, height = page_size(cap.page_index)
            template = None
            if entry.get("image_file"):
                image_path = paper_dir / entry["image_file"]
                if not image_path.exists():
                    raise InputError(f"{paper_dir}/aux.json[{k}].image_file: {image_path.name} not found")
                template = xml_induction.match_template_multiscale(
                    _gray(page_paths[cap.page_index]), _gray(image_path))
                scores.append(template.score)
                body = template.bbox
            else:
                table = xml_induction.locate_table(entry["cells"], entry["caption"], tokens)
                body = table.figure_box
        except xml_induction.CaptionNotFound as exc:
            log.info("%s: skipped, item %d: %s", paper_id, k, exc)
            return PaperResult(paper_id, (), "caption-not-found")
        items.append(xml_induction.LocatedItem(
            kind=entry["type"], page_index=cap.page_index, figure_box=body,
            caption_box=cap.bbox, caption_text=xml_induction.normalize_whitespace(entry["caption"]),
            page_width=width, page_height=height, template=template,
        ))
    min_score = min(scores) if scores else None
    labels = xml_induction.assemble_xml_labels(paper_id, items, dpi)
    if items and not labels:
        log.info("%s: skipped, template score %.4f below threshold", paper_id, min_score)
        return PaperResult(paper_id, (), "template-score", min_score)
    return PaperResult(paper_id, tuple(sorted(labels, key=sort_key)), None, min_score)


def induce_xml(paper_dirs: Sequence, dpi: int = 100, workers: int = 1) -> list[PaperResult]:
    dirs = sorted((Path(d) for d in paper_dirs), key=lambda p: p.name)
    return parallel_map(xml_paper_worker, [(d, dpi) for d in dirs], workers)


# ---------------------------------------------------------------------------
# detector outputs


def _clip(box: BBox, width: int, height: int) -> Optional[BBox]:
    x1, y1 = max(0.0, box.x1), max(0.0, box.y1)
    x2, y2 = min(float(width), box.x2), min(float(height), box.y2)
    if x1 >= x2 or y1 >= y2:
        return None
    return BBox(x1, y1, x2, y2)


def extract_page_worker(args) -> list[InducedLabel]:
    paper_id, idx, pred_path, paragraphs, conf, nms_iou, dpi, width, height = args
    pairs = detection.run_page(pred_path, paragraphs, conf, nms_iou)
    out = []
    for p in pairs:
        fig = _clip(p.figure.bbox, width, height)
        cap = _clip(p.caption.bbox, width, height)
        if fig is None:
            continue
        out.append(InducedLabel(
            paper_id=paper_id, page_index=idx, kind=p.caption.kind, figure_box=fig,
            caption_box=cap, caption_text=p.caption.text,
            name=f"{p.caption.kind.capitalize()} {p.caption.number}",
            dpi=dpi, page_width=width, page_height=height, provenance="detector",
        ))
    return out


def prediction_files(directory) -> dict[int, Path]:
    out = {}
    for p in Path(directory).glob("page-*.json"):
        stem = p.stem[len("page-"):]
        if stem.isdigit():
            out[int(stem)] = p
    return dict(sorted(out.items()))


def extract(pred_dir, paragraphs_file, paper_id: str, *, confidence_threshold: float = 0.5,
            nms_iou: float = 0.5, dpi: int = 100, page_size: tuple[int, int] = (850, 1100),
            workers: int = 1) -> list[InducedLabel]:
    files = prediction_files(pred_dir)
    if not files:
        raise InputError(f"no page-NNNN.json prediction files in {pred_dir}")
    path = Path(paragraphs_file)
    try:
        paragraphs = detection.parse_paragraphs(path.read_text(encoding="utf-8"), str(path))
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    by_page = defaultdict(list)
    for p in paragraphs:
        by_page[p.page_index].append(p)
    jobs = [(paper_id, idx, f, by_page.get(idx, []), confidence_threshold, nms_iou, dpi, *page_size)
            for idx, f in files.items()]
    labels = [lab for page in parallel_map(extract_page_worker, jobs, workers) for lab in page]
    return sorted(labels, key=sort_key)


# ---------------------------------------------------------------------------
# corpus statistics


@dataclass(frozen=True)
class CorpusStats:
    paper_count: int
    figure_count: int
    table_count: int
    figure_histogram: dict
    table_histogram: dict

    def to_dict(self) -> dict:
        return {
            "paper_count": self.paper_count,
            "figure_count": self.figure_count,
            "table_count": self.table_count,
            "figures_per_paper": {str(k): round(v, 6) for k, v in self.figure_histogram.items()},
            "tables_per_paper": {str(k): round(v, 6) for k, v in self.table_histogram.items()},
        }

    def table(self) -> str:
        lines = [f"papers   {self.paper_count}",
                 f"figures  {self.figure_count}",
                 f"tables   {self.table_count}",
                 "",
                 "per paper  figures  tables"]
        keys = sorted(set(self.figure_histogram) | set(self.table_histogram))
        for k in keys:
            lines.append(f"{k:>9}  {self.figure_histogram.get(k, 0.0):7.4f}  "
                         f"{self.table_histogram.get(k, 0.0):6.4f}")
        return "\n".join(lines)


def corpus_stats(labels: Iterable[InducedLabel]) -> CorpusStats:
    """Counts per kind and the fraction of papers with each count."""
    per_paper: dict = defaultdict(Counter)
    for lab in labels:
        per_paper[lab.paper_id][lab.kind] += 1
    n = len(per_paper)

    def hist(kind):
        c = Counter(counts[kind] for counts in per_paper.values())
        return {k: c[k] / n for k in sorted(c)}

    return CorpusStats(
        paper_count=n,
        figure_count=sum(c["figure"] for c in per_paper.values()),
        table_count=sum(c["table"] for c in per_paper.values()),
        figure_histogram=hist("figure") if n else {},
        table_histogram=hist("table") if n else {},
    )
