"""Runs the ingest command on a fixture and recounts blank fields in every
input file with the csv module, comparing against ingest_report.json.

Usage: python3 check_ingest_counts.py CLI FIXTURE_DIR
"""

import csv
import json
import os
import subprocess
import sys
import tempfile

INPUTS = {"prices": "prices.csv", "fundamentals": "fundamentals.csv", "link": "link.csv", "factors": "factors.csv",
          "benchmarks": "benchmarks.csv"}


def recount(path):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = {name: 0 for name in reader.fieldnames}
        rows = 0
        for row in reader:
            rows += 1
            for name, value in row.items():
                if value is None or value.strip() == "":
                    missing[name] += 1
    return {"rows": rows, "missing": missing}


def main():
    cli, fixture = sys.argv[1], sys.argv[2]
    with tempfile.TemporaryDirectory() as out:
        subprocess.run([cli, "--config", os.path.join(fixture, "config.txt"), "--out", out, "ingest"], check=True)
        with open(os.path.join(out, "ingest_report.json")) as f:
            report = json.load(f)
    problems = []
    for key, name in INPUTS.items():
        expected = recount(os.path.join(fixture, name))
        got = report["inputs"].get(key)
        if got != expected:
            problems.append(f"{name}: report {got} != recount {expected}")
    blank_rdq = recount(os.path.join(fixture, "fundamentals.csv"))["missing"]["rdq"]
    if report["filters"].get("missing_report_date", 0) != blank_rdq:
        problems.append(f"missing_report_date {report['filters'].get('missing_report_date')} != {blank_rdq}")
    if report["schema_errors"] != 0:
        problems.append(f"schema_errors = {report['schema_errors']}")
    for p in problems:
        print(p)
    print("ingest report matches the recount" if not problems else f"{len(problems)} mismatches")
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main())
