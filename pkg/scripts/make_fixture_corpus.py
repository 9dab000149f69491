"""Write the small synthetic corpus used by the CLI tests.

    python3 scripts/make_fixture_corpus.py out/corpus --seed 0

then, for example:

    figlabel induce-latex out/corpus/latex/paper-a/original \\
        out/corpus/latex/paper-a/modified --paper-id paper-a -o latex.jsonl
"""

import argparse
import json
from pathlib import Path

from figlabel.synthetic import write_fixture_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    truth = write_fixture_corpus(args.root, args.seed)
    counts = {
        "latex_pages": len(truth["latex"]),
        "xml_papers": sorted(truth["xml"]),
    }
    print(json.dumps(counts, sort_keys=True))


if __name__ == "__main__":
    main()
