#!/usr/bin/env python3
"""Run the committed batch experiments and print the metrics table.

The trials replay the recorded model transcripts, so the run is fully
deterministic: the table comes out identical on every machine.

Usage:
    python3 scripts/run_reference_experiments.py [--report out.json] [--store DIR]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from clarify_plan import SessionStore, run_experiment  # noqa: E402

SPEC = Path(__file__).resolve().parent.parent / "fixtures" / "experiments" / "cooking_tasks.json"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--spec", default=str(SPEC), help="experiment description file")
    parser.add_argument("--report", metavar="FILE", help="also write the JSON report here")
    parser.add_argument("--store", metavar="DIR", help="persist the trial sessions here")
    args = parser.parse_args()

    store = SessionStore(args.store) if args.store else None
    report = run_experiment(args.spec, store=store)
    print(report.render_table())
    print()
    for task in report.tasks:
        if task.coverage is None:
            continue
        print(f"{task.label} coverage: "
              f"keys only in elaborated plan: {', '.join(task.coverage.keys_only_in_b) or '(none)'}")
        if task.coverage.narrative_items:
            print(f"  narrative items: {'; '.join(task.coverage.narrative_items)}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_payload(), fh, indent=2, ensure_ascii=False, sort_keys=True)
            fh.write("\n")
        print(f"\nreport written to {args.report}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
