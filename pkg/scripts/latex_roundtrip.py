"""Draw random framed pages, run the diff induction and report recovery.

    python3 scripts/latex_roundtrip.py --pages 200 --seed 1
"""

import argparse
import time
from collections import Counter

import numpy as np

from figlabel.geometry import iou
from figlabel.latex_induction import assemble_labels, diff_pages, extract_components
from figlabel.synthetic import latex_page_pair


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pages", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-floats", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    stats = Counter()
    t0 = time.perf_counter()
    for k in range(args.pages):
        orig, mod, drawn = latex_page_pair(rng, n_floats=1 + k % args.max_floats)
        labels = assemble_labels("synthetic", k, extract_components(diff_pages(orig, mod), mod), mod)
        stats["floats"] += len(drawn)
        stats["labels"] += len(labels)
        for lab, d in zip(labels, drawn):
            stats["kind_ok"] += lab.kind == d.kind
            stats["caption_exact"] += lab.caption_box == d.caption
            stats["caption_clear"] += iou(lab.figure_box, d.caption) == 0
            stats[f"side_{d.caption_side}"] += 1
    elapsed = time.perf_counter() - t0

    n = stats["floats"]
    print(f"pages           {args.pages}")
    print(f"floats          {n}")
    print(f"labels          {stats['labels']}")
    print(f"kind correct    {stats['kind_ok'] / n:.4f}")
    print(f"caption exact   {stats['caption_exact'] / n:.4f}")
    print(f"caption clear   {stats['caption_clear'] / n:.4f}")
    print("caption sides   " + ", ".join(f"{s}={stats['side_' + s]}"
                                        for s in ("above", "below", "left", "right")))
    print(f"seconds/page    {elapsed / args.pages:.3f}")


if __name__ == "__main__":
    main()
