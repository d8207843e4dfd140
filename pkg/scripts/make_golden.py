"""Regenerate the pinned cohort and report bundle under tests/golden/.

Run this only after an intentional change to report contents:

    python3 scripts/make_golden.py
"""

import shutil
import sys
from pathlib import Path

from sigval.cli import main

ROOT = Path(__file__).resolve().parents[1] / "tests" / "golden"


def regenerate(root: Path = ROOT) -> int:
    for sub in ("cohort", "bundle"):
        shutil.rmtree(root / sub, ignore_errors=True)
    code = main(["synth", "--config", str(root / "synth.cfg"), "--output-dir", str(root / "cohort")])
    if code:
        return code
    return main(["run-all", "--config", str(root / "run.cfg"), "--panel", str(root / "cohort" / "panel.csv"),
                 "--embeddings", str(root / "cohort" / "embeddings.msab"), "--output-dir", str(root / "bundle")])


if __name__ == "__main__":
    sys.exit(regenerate())
