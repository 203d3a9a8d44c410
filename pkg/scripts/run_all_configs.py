#!/usr/bin/env python3
"""Run every shipped config through the CLI and tabulate exit codes and timings."""
import json
import sys
import time
from pathlib import Path

from otcut.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main():
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out")
    status = 0
    for cfg in sorted((ROOT / "configs").glob("*.toml")):
        t0 = time.perf_counter()
        code = cli_main(["run", "--config", str(cfg), "--out", str(out_root / cfg.stem)])
        secs = time.perf_counter() - t0
        summary = json.loads((out_root / cfg.stem / "summary.json").read_text()) if code in (0, 4) else {}
        print(
            f"{cfg.stem:14} exit {code}  {secs:6.1f} s  steps {summary.get('steps', '-'):>5}"
            f"  cut triangles {summary.get('cut_triangles', '-')}"
        )
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
