"""Score multi-scale template matching across the scale range.

Embeds a textured template at evenly spaced scales and reports the
recovered score, the center error and the nearest grid scale. Use
``--sigma`` to vary the texture size of the synthetic figure.

    python3 scripts/template_recovery.py --steps 40 --sigma 4
"""

import argparse
import time

import numpy as np

from figlabel.geometry import center
from figlabel.synthetic import place_template, smooth_image
from figlabel.xml_induction import ACCEPT_SCORE, match_template_multiscale, template_scales


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sigma", type=float, default=4.0)
    ap.add_argument("--page", default="425x550", help="WIDTHxHEIGHT")
    args = ap.parse_args()
    page_w, page_h = (int(v) for v in args.page.split("x"))

    rng = np.random.default_rng(args.seed)
    grid = template_scales()
    rows = []
    t0 = time.perf_counter()
    for scale in np.linspace(grid[0], grid[-1], args.steps):
        tpl = smooth_image(rng, int(rng.integers(120, 300)), int(rng.integers(100, 260)), args.sigma)
        page, box = place_template(rng, page_w, page_h, tpl, float(scale))
        m = match_template_multiscale(page, tpl)
        got, want = center(m.bbox), center(box)
        err = max(abs(got.x - want.x) / page_w, abs(got.y - want.y) / page_h)
        gap = np.min(np.abs(grid - scale)) / scale
        rows.append((scale, gap, m.score, err))
    elapsed = time.perf_counter() - t0

    print("  scale  grid gap   score  center err")
    for scale, gap, score, err in rows:
        print(f"{scale:7.3f}  {gap:8.3%}  {score:6.3f}  {err:10.3%}")
    scores = np.array([r[2] for r in rows])
    print(f"\nscore > 0.9: {np.mean(scores > 0.9):.2%}   "
          f"accepted (>= {ACCEPT_SCORE}): {np.mean(scores >= ACCEPT_SCORE):.2%}   "
          f"{elapsed / len(rows):.2f} s/page")


if __name__ == "__main__":
    main()
