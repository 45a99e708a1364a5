"""Run-log persistence: JSON-lines report logs, path archives, and the
aggregation step that turns a run directory into a summary and plot-ready
CSV tables.

The JSONL log stores each report's canonical serialization (stable bytes
under a fixed seed); wall-clock timings go to a separate ``timings.jsonl``
so determinism checks can compare run logs verbatim.
"""

from __future__ import annotations

import csv
import json
import os
from typing import Iterable

import numpy as np

from .stats import VerificationReport

REPORTS_NAME = "reports.jsonl"
TIMINGS_NAME = "timings.jsonl"


def write_reports(run_dir: str, reports: Iterable[VerificationReport]) -> str:
    os.makedirs(run_dir, exist_ok=True)
    path = os.path.join(run_dir, REPORTS_NAME)
    timing_path = os.path.join(run_dir, TIMINGS_NAME)
    with open(path, "a", encoding="utf-8") as fh, open(
        timing_path, "a", encoding="utf-8"
    ) as th:
        for report in reports:
            fh.write(report.canonical_json() + "\n")
            th.write(
                json.dumps(
                    {"verifier_id": report.verifier_id, "wall_time": report.wall_time},
                    sort_keys=True,
                )
                + "\n"
            )
    return path


def read_reports(run_dir: str) -> list[dict]:
    path = os.path.join(run_dir, REPORTS_NAME)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no {REPORTS_NAME} in {run_dir}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def write_path_archive(path: str, times: np.ndarray, blocks) -> None:
    """CSV archive: header path,t,x11,...,xdd,det; one row per grid point.

    ``blocks`` yields (first_path_index, states) with states of shape
    (m, n_steps + 1, d, d); floats are written with 17 significant digits.
    """
    from .linalg import batch_det

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = None
        for lo, states in blocks:
            m, n_grid, d, _ = states.shape
            if header is None:
                cols = [f"x{i + 1}{j + 1}" for i in range(d) for j in range(d)]
                header = ["path", "t"] + cols + ["det"]
                writer.writerow(header)
            dets = batch_det(states.reshape(-1, d, d)).reshape(m, n_grid)
            for j in range(m):
                for g in range(n_grid):
                    row = [str(lo + j), format(times[g], ".17g")]
                    row += [format(v, ".17g") for v in states[j, g].ravel()]
                    row.append(format(dets[j, g], ".17g"))
                    writer.writerow(row)


def aggregate_run(run_dir: str) -> dict:
    """Fold a run directory's reports into one summary dict + CSV tables.

    Emits ``summary.json``, a ``capacity_loglog.csv`` table when any
    capacity-scaling reports are present, and ``ks_overlay.csv`` when any KS
    verifier embedded a quantile overlay table.
    """
    reports = read_reports(run_dir)
    if not reports:
        raise FileNotFoundError(f"empty report log in {run_dir}")
    summary = {
        "n_reports": len(reports),
        "n_passed": sum(1 for r in reports if r["passed"]),
        "all_passed": all(r["passed"] for r in reports),
        "verifiers": sorted({r["verifier_id"] for r in reports}),
        "by_verifier": {},
    }
    for r in reports:
        entry = summary["by_verifier"].setdefault(
            r["verifier_id"], {"runs": 0, "passed": 0}
        )
        entry["runs"] += 1
        entry["passed"] += int(r["passed"])

    cap_rows = []
    for r in reports:
        if r["verifier_id"] != "capacity-scaling":
            continue
        for label, est in sorted(r["estimates"].items()):
            if label.startswith("mass_eps_"):
                cap_rows.append(
                    {
                        "inputs_digest": r["inputs_digest"],
                        "eps": float(label.removeprefix("mass_eps_")),
                        "mass": est["value"],
                        "stderr": est["stderr"],
                        "fitted_slope": r["estimates"]["fitted_slope"]["value"],
                        "predicted_slope": r["estimates"]["predicted_slope"]["value"],
                    }
                )
    if cap_rows:
        _write_csv(
            os.path.join(run_dir, "capacity_loglog.csv"),
            ["inputs_digest", "eps", "mass", "stderr", "fitted_slope", "predicted_slope"],
            cap_rows,
        )

    overlay_rows = []
    for r in reports:
        qs = sorted(k for k in r["estimates"] if k.startswith("overlay_q"))
        for qk in qs:
            idx = qk.removeprefix("overlay_q")
            ref_key = f"overlay_ref_cdf{idx}"
            if ref_key in r["estimates"]:
                overlay_rows.append(
                    {
                        "verifier_id": r["verifier_id"],
                        "inputs_digest": r["inputs_digest"],
                        "quantile": r["estimates"][qk]["value"],
                        "ref_cdf": r["estimates"][ref_key]["value"],
                    }
                )
    if overlay_rows:
        _write_csv(
            os.path.join(run_dir, "ks_overlay.csv"),
            ["verifier_id", "inputs_digest", "quantile", "ref_cdf"],
            overlay_rows,
        )

    with open(os.path.join(run_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _write_csv(path: str, fields: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in fields})


def _fmt(v):
    return format(v, ".17g") if isinstance(v, float) else v
