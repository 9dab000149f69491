"""``figlabel`` command line.

Each command prints one JSON summary line on stdout. Set ``FIGLABEL_LOG``
(e.g. ``INFO`` or ``DEBUG``) for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import detection, evaluation, pipeline, records
from .latex_induction import PageMismatch
from .records import RecordError, atomic_write_text


def _page_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from None
    if w <= 0 or h <= 0:
        raise argparse.ArgumentTypeError("page size must be positive")
    return w, h


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{v} outside [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figlabel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output_required=True):
        p.add_argument("--output", "-o", required=output_required, help="output file")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")

    p = sub.add_parser("induce-latex", help="labels from original vs. framed page renders")
    p.add_argument("original_dir")
    p.add_argument("modified_dir")
    p.add_argument("--paper-id", required=True)
    p.add_argument("--dpi", type=int, default=100)
    common(p)

    p = sub.add_parser("induce-xml", help="labels from XML paper directories")
    p.add_argument("paper_dirs", nargs="+")
    p.add_argument("--dpi", type=int, default=100)
    common(p)

    p = sub.add_parser("extract", help="figure-caption pairs from detector outputs")
    p.add_argument("predictions_dir", help="directory of page-NNNN.json backend files")
    p.add_argument("paragraphs", help="paragraphs.json")
    p.add_argument("--paper-id", required=True)
    p.add_argument("--confidence-threshold", type=_probability, default=detection.DEFAULT_CONFIDENCE)
    p.add_argument("--nms-iou", type=_probability, default=detection.DEFAULT_NMS_IOU)
    p.add_argument("--dpi", type=int, default=100)
    p.add_argument("--page-size", type=_page_size, default=(850, 1100), metavar="WxH")
    common(p)

    p = sub.add_parser("evaluate", help="precision/recall/F1 against ground truth")
    p.add_argument("predictions")
    p.add_argument("truth")
    p.add_argument("--eval-iou", type=_probability, default=evaluation.DEFAULT_IOU)
    common(p, output_required=False)

    p = sub.add_parser("stats", help="paper, figure and table counts of a label file")
    p.add_argument("labels")
    common(p, output_required=False)
    return parser


def _summary(**fields) -> None:
    print(json.dumps(fields, sort_keys=True))


def run(args) -> int:
    if args.command == "induce-latex":
        labels = pipeline.induce_latex(args.original_dir, args.modified_dir, args.paper_id,
                                       args.dpi, args.workers)
        records.write_labels(args.output, labels)
        _summary(command=args.command, paper_id=args.paper_id, records=len(labels))
    elif args.command == "induce-xml":
        results = pipeline.induce_xml(args.paper_dirs, args.dpi, args.workers)
        labels = [lab for r in results for lab in r.labels]
        records.write_labels(args.output, labels)
        skipped = {r.paper_id: r.skip_reason for r in results if r.skip_reason}
        _summary(command=args.command, papers=len(results), records=len(labels), skipped=skipped)
    elif args.command == "extract":
        labels = pipeline.extract(
            args.predictions_dir, args.paragraphs, args.paper_id,
            confidence_threshold=args.confidence_threshold, nms_iou=args.nms_iou,
            dpi=args.dpi, page_size=args.page_size, workers=args.workers)
        records.write_labels(args.output, labels)
        _summary(command=args.command, paper_id=args.paper_id, records=len(labels))
    elif args.command == "evaluate":
        preds = records.read_labels(args.predictions)
        truths = records.read_labels(args.truth)
        report = evaluation.evaluate_labels(preds, truths, args.eval_iou)
        body = json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"
        if args.output:
            atomic_write_text(args.output, body)
        print(report.table())
        pooled = report.pooled
        _summary(command=args.command, f1=round(pooled.f1, 6),
                 precision=round(pooled.precision, 6), recall=round(pooled.recall, 6))
    elif args.command == "stats":
        stats = pipeline.corpus_stats(records.read_labels(args.labels))
        if args.output:
            atomic_write_text(args.output, json.dumps(stats.to_dict(), indent=2) + "\n")
        print(stats.table())
        _summary(command=args.command, papers=stats.paper_count,
                 figures=stats.figure_count, tables=stats.table_count)
    return 0


def main(argv=None) -> int:
    level = os.environ.get("FIGLABEL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (pipeline.InputError, RecordError, detection.BackendFormatError,
            PageMismatch, FileNotFoundError) as exc:
        print(f"figlabel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
