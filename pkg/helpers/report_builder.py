# report_builder.py
"""Experiment reports: aggregate trial records into summaries, text tables and CSV rows."""
import csv
from typing import Any, Dict, List

TASK_ORDER = ("pole", "wall", "stairs", "portal", "pyramid")
KIND_ORDER = ("flat", "regular")
PICKAXE_TIERS = ("wooden", "stone", "iron")

UNIT_TEST_FIELDS = ["task", "world_kind", "seed", "reported", "true"]
RESOURCE_FIELDS = ["trial", "world_kind", "seed", "wooden", "stone", "iron", "unique_items"]
BUILDING_FIELDS = ["trial", "world_kind", "seed", "building_attempts", "building_reported",
                   "building_successes", "unique_structures"]

# GPT-4o reference numbers, printed beside measured values and never compared against them.
REFERENCE_UNIT_TESTS = {
    "flat": ["4/5", "2/5", "4/5", "0/5", "3(2)/5", "13(12)/25"],
    "regular": ["3/5", "0/5", "2/5", "1/5", "1(0)/5", "7(6)/25"],
    "overall": ["7/10", "2/10", "6/10", "1/10", "4(2)/10", "20(18)/50"],
}
REFERENCE_RESOURCES = {
    "Original Voyager": {"wooden": "6 (3/3)", "stone": "11 (3/3)", "iron": "21 (3/3)"},
    "Voyager w/ GPT-4o": {"wooden": "11 (3/3)", "stone": "19 (3/3)", "iron": "25 (2/3)"},
    "+ Screenshots": {"wooden": "9 (3/3)", "stone": "19 (3/3)", "iron": "27 (2/3)"},
}
REFERENCE_BUILDING = {
    "regular": {"success_rate": "45%", "unique": "2.67"},
    "flat": {"success_rate": "33%", "unique": "2.83"},
    "overall": {"success_rate": "39%", "unique": "2.75"},
}

Trial = Dict[str, Any]


def ratio_cell(reported: int, true: int, attempts: int) -> str:
    """'r/n' when critic and oracle agree in count, otherwise 'r(t)/n'."""
    if reported == true:
        return f"{reported}/{attempts}"
    return f"{reported}({true})/{attempts}"


def _number(value: float | None, digits: int = 2) -> str:
    if value is None:
        return "n/a"
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.{digits}f}"


def _mean(values: list) -> float | None:
    return sum(values) / len(values) if values else None


def _kinds(trials: List[Trial]) -> list[str]:
    present = {t["world_kind"] for t in trials}
    return [k for k in KIND_ORDER if k in present]


# ---------------- UNIT TESTS ----------------

def _unit_outcome(trial: Trial) -> tuple[bool, bool]:
    checks = trial["checks"]
    return any(c["reported"] for c in checks), any(c["true"] for c in checks)


def unit_test_report(trials: List[Trial]) -> dict:
    cells: dict[str, dict[str, dict[str, int]]] = {}
    rows = []
    for trial in trials:
        reported, true = _unit_outcome(trial)
        cell = cells.setdefault(trial["template"], {}).setdefault(
            trial["world_kind"], {"attempts": 0, "reported": 0, "true": 0})
        cell["attempts"] += 1
        cell["reported"] += int(reported)
        cell["true"] += int(true)
        rows.append({"task": trial["template"], "world_kind": trial["world_kind"], "seed": trial["seed"],
                     "reported": int(reported), "true": int(true)})
    return {
        "cells": cells,
        "experiment": "unit_tests",
        "incomplete": any(t["incomplete"] for t in trials),
        "rows": rows,
    }


def _sum_cells(cells: list[dict]) -> dict:
    return {key: sum(c.get(key, 0) for c in cells) for key in ("attempts", "reported", "true")}


def format_unit_test_table(report: dict) -> str:
    cells = report["cells"]
    tasks = [t for t in TASK_ORDER if t in cells]
    kinds = [k for k in KIND_ORDER if any(k in cells[t] for t in tasks)]
    lines = [
        "### Building unit tests: critic-reported(true)/attempts ###",
        f"{'':<16}" + "".join(f"{t.capitalize():<12}" for t in tasks) + f"{'Overall':<12}",
        "-" * (16 + 12 * (len(tasks) + 1)),
    ]
    for label, selected in [(k, [k]) for k in kinds] + [("overall", kinds)]:
        row = [_sum_cells([cells[t][k] for k in selected if k in cells[t]]) for t in tasks]
        total = _sum_cells(row)
        lines.append(f"{label.capitalize() + ' world':<16}"
                     + "".join(f"{ratio_cell(c['reported'], c['true'], c['attempts']):<12}" for c in row)
                     + ratio_cell(total["reported"], total["true"], total["attempts"]))
    lines += ["", "Reference (GPT-4o, 5 flat + 5 regular worlds per task):"]
    lines.append(f"{'':<16}" + "".join(f"{t.capitalize():<12}" for t in TASK_ORDER) + "Overall")
    for label, values in REFERENCE_UNIT_TESTS.items():
        lines.append(f"{label.capitalize() + ' world':<16}" + "".join(f"{v:<12}" for v in values[:-1]) + values[-1])
    if report["incomplete"]:
        lines += ["", "⚠️ Incomplete: the backend became unreachable before every trial finished."]
    return "\n".join(lines)


# ---------------- RESOURCES ----------------

def resource_report(trials: List[Trial]) -> dict:
    rows = []
    for trial in trials:
        rows.append({"trial": trial["trial_id"], "world_kind": trial["world_kind"], "seed": trial["seed"],
                     **{tier: trial["milestones"].get(tier) for tier in PICKAXE_TIERS},
                     "unique_items": len(trial["items_seen"])})
    summary = {}
    for tier in PICKAXE_TIERS:
        reached = [r[tier] for r in rows if r[tier] is not None]
        summary[tier] = {"mean_iteration": _mean(reached), "reached": len(reached), "runs": len(rows)}
    summary["unique_items"] = _mean([r["unique_items"] for r in rows])
    return {
        "experiment": "resources",
        "incomplete": any(t["incomplete"] for t in trials),
        "rows": rows,
        "summary": summary,
    }


def format_resource_table(report: dict) -> str:
    summary = report["summary"]
    columns = ["Measured"] + list(REFERENCE_RESOURCES)
    lines = [
        "### Iterations to craft each pickaxe tier (runs that reached it / runs) ###",
        f"{'':<16}" + "".join(f"{c:<20}" for c in columns),
        "-" * (16 + 20 * len(columns)),
    ]
    for tier in PICKAXE_TIERS:
        s = summary[tier]
        measured = f"{_number(s['mean_iteration'], 1)} ({s['reached']}/{s['runs']})"
        refs = [REFERENCE_RESOURCES[name][tier] for name in REFERENCE_RESOURCES]
        lines.append(f"{tier.capitalize() + ' Pickaxe':<16}" + "".join(f"{v:<20}" for v in [measured] + refs))
    lines.append(f"{'Unique items':<16}{_number(summary['unique_items'], 1)}")
    if report["incomplete"]:
        lines += ["", "⚠️ Incomplete: the backend became unreachable before every trial finished."]
    return "\n".join(lines)


# ---------------- BUILDING ----------------

def building_report(trials: List[Trial]) -> dict:
    rows = []
    for trial in trials:
        building = [c for c in trial["checks"] if c["building"]]
        signatures = {c["signature"] for c in building if c["signature"] is not None}
        rows.append({
            "trial": trial["trial_id"], "world_kind": trial["world_kind"], "seed": trial["seed"],
            "building_attempts": len(building),
            "building_reported": sum(1 for c in building if c["reported"]),
            "building_successes": sum(1 for c in building if c["confirmed"]),
            "unique_structures": len(signatures),
        })
    summary = {}
    for label, selected in [(k, [k]) for k in _kinds(trials)] + [("overall", list(KIND_ORDER))]:
        chosen = [r for r in rows if r["world_kind"] in selected]
        rates = [r["building_successes"] / r["building_attempts"] for r in chosen if r["building_attempts"]]
        summary[label] = {
            "runs": len(chosen),
            "success_rate": _mean(rates),
            "unique_structures": _mean([r["unique_structures"] for r in chosen]),
        }
    return {
        "experiment": "building",
        "incomplete": any(t["incomplete"] for t in trials),
        "rows": rows,
        "summary": summary,
    }


def _percent(rate: float | None) -> str:
    return "n/a" if rate is None else f"{rate * 100:.0f}%"


def format_building_table(report: dict) -> str:
    summary = report["summary"]
    labels = list(summary)
    lines = [
        "### Open-ended building: building tasks only ###",
        f"{'':<28}" + "".join(f"{label.capitalize():<12}" for label in labels),
        "-" * (28 + 12 * len(labels)),
        f"{'Average success rate':<28}" + "".join(f"{_percent(summary[l]['success_rate']):<12}" for l in labels),
        f"{'Average unique structures':<28}"
        + "".join(f"{_number(summary[l]['unique_structures']):<12}" for l in labels),
        "",
        "Reference (GPT-4o, 12 runs of 50 iterations):",
    ]
    for label, ref in REFERENCE_BUILDING.items():
        lines.append(f"{label.capitalize():<28}{ref['success_rate']:<12}{ref['unique']}")
    if report["incomplete"]:
        lines += ["", "⚠️ Incomplete: the backend became unreachable before every trial finished."]
    return "\n".join(lines)


# ---------------- DISPATCH ----------------

BUILDERS = {
    "unit_tests": (unit_test_report, format_unit_test_table, UNIT_TEST_FIELDS),
    "resources": (resource_report, format_resource_table, RESOURCE_FIELDS),
    "building": (building_report, format_building_table, BUILDING_FIELDS),
}


def compose_report(experiment: str, trials: List[Trial]) -> dict:
    build, _, _ = BUILDERS[experiment]
    return build(trials)


def format_report(report: dict) -> str:
    _, fmt, _ = BUILDERS[report["experiment"]]
    return fmt(report)


def write_csv(report: dict, path: str) -> None:
    fieldnames = BUILDERS[report["experiment"]][2]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in report["rows"]:
            writer.writerow({k: "" if row[k] is None else row[k] for k in fieldnames})
