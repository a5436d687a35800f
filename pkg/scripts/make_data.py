"""Regenerates the bundled data files (corpus, fine-tune task).

The outputs are committed; rerunning with the same seeds reproduces them
byte for byte.
"""

import sys
from pathlib import Path

from molpla.corpus import generate_corpus, generate_task

DATA = Path(__file__).resolve().parent.parent / "src" / "molpla" / "data"


def main() -> int:
    rows = generate_corpus(500, seed=20240)
    (DATA / "corpus.smi").write_text("\n".join(rows) + "\n")
    print(f"corpus.smi: {len(rows)} molecules")

    task = generate_task(200, seed=777)
    lines = ["smiles,label"] + [f"{s},{l}" for s, l in task]
    (DATA / "task_ring_nitrogen.csv").write_text("\n".join(lines) + "\n")
    print(f"task_ring_nitrogen.csv: {len(task)} rows, "
          f"{sum(l for _, l in task)} positive")
    return 0


if __name__ == "__main__":
    sys.exit(main())
