"""Run every JSON config under configs/ through the CLI; one output folder per config."""
import argparse
import json
import sys
from pathlib import Path

from markov_hoeffding.cli import run

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "runs"))
    ap.add_argument("--workers", type=int, default=4)
    a = ap.parse_args()
    codes = {}
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        out = Path(a.out) / cfg.stem
        codes[cfg.stem] = run(cfg, dict(out=str(out), workers=a.workers))
        exp = json.loads(cfg.read_text())["experiment"]
        print(f"{cfg.stem:24s} {exp:9s} exit={codes[cfg.stem]} -> {out}")
    return max(codes.values())


if __name__ == "__main__":
    sys.exit(main())
