#!/usr/bin/env python3
"""Regenerate the regression baselines committed under tests/baselines/.

Run from the repository root after any intentional change to the numerics:

    python3 scripts/generate_baselines.py

Writes:
  tests/baselines/reference_ledger_A.csv  (ledger of configs/reference_variant_a.json)
  tests/baselines/tail_windows.json       (tail window integrals of the long run)
"""

import json
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "src"))

from bbm import cli  # noqa: E402
from bbm.diagnostics import tail_dissipation  # noqa: E402


def write_reference_ledger(baseline_dir: str) -> None:
    config = os.path.join(ROOT, "configs", "reference_variant_a.json")
    with tempfile.TemporaryDirectory() as tmp:
        status = cli.run_simulate(config, output_dir=tmp)
        if status != 0:
            raise SystemExit(f"reference run failed with exit status {status}")
        target = os.path.join(baseline_dir, "reference_ledger_A.csv")
        shutil.copyfile(os.path.join(tmp, "ledger.csv"), target)
    print(f"wrote {target}")


def write_tail_windows(baseline_dir: str) -> None:
    _, ledger, _ = cli._run_tail()
    coarse = tail_dissipation(ledger, cli.TAIL_WINDOW)
    fine = tail_dissipation(ledger, cli.TAIL_FINE_WINDOW)
    payload = {
        "horizon": float(ledger.times[-1]),
        "window": cli.TAIL_WINDOW,
        "integrals": [float(v) for v in coarse.integrals],
        "fine_window": cli.TAIL_FINE_WINDOW,
        "fine_integrals": [float(v) for v in fine.integrals],
    }
    target = os.path.join(baseline_dir, "tail_windows.json")
    with open(target, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
    print(f"wrote {target}")


def main() -> None:
    baseline_dir = os.path.join(ROOT, "tests", "baselines")
    os.makedirs(baseline_dir, exist_ok=True)
    write_reference_ledger(baseline_dir)
    write_tail_windows(baseline_dir)


if __name__ == "__main__":
    main()
