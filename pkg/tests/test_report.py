import csv

import pytest

from helpers.report_builder import compose_report, format_report, ratio_cell, write_csv


def unit_trial(template, kind, seed, reported, true, incomplete=False):
    return {"trial_id": f"{template}-{kind}-{seed}", "template": template, "world_kind": kind, "seed": seed,
            "checks": [{"reported": reported, "true": true}], "incomplete": incomplete}


def check(reported, confirmed, signature, building=True):
    return {"building": building, "reported": reported, "confirmed": confirmed, "signature": signature}


@pytest.mark.parametrize("reported, true, attempts, cell", [(4, 4, 5, "4/5"), (3, 2, 5, "3(2)/5"), (0, 0, 1, "0/1")])
def test_ratio_cell(reported, true, attempts, cell):
    assert ratio_cell(reported, true, attempts) == cell


def test_unit_test_table():
    trials = [
        unit_trial("pole", "flat", 1, True, True),
        unit_trial("pole", "flat", 2, True, False),
        unit_trial("pole", "regular", 7, False, False),
        unit_trial("wall", "flat", 1, True, True),
    ]
    report = compose_report("unit_tests", trials)
    assert report["cells"]["pole"]["flat"] == {"attempts": 2, "reported": 2, "true": 1}
    text = format_report(report)
    lines = text.splitlines()
    assert lines[1].split() == ["Pole", "Wall", "Overall"]
    assert lines[3].split() == ["Flat", "world", "2(1)/2", "1/1", "3(2)/3"]
    assert lines[4].split() == ["Regular", "world", "0/1", "0/0", "0/1"]
    assert lines[5].split() == ["Overall", "world", "2(1)/3", "1/1", "3(2)/4"]
    assert "Incomplete" not in text


def test_incomplete_runs_are_flagged():
    report = compose_report("unit_tests", [unit_trial("pole", "flat", 1, False, False, incomplete=True)])
    assert report["incomplete"]
    assert "Incomplete" in format_report(report)


def test_resource_report():
    trials = [
        {"trial_id": "a", "world_kind": "regular", "seed": 1, "milestones": {"wooden": 3, "stone": 5},
         "items_seen": ["oak_log", "stick", "cobblestone"], "incomplete": False},
        {"trial_id": "b", "world_kind": "regular", "seed": 2, "milestones": {"wooden": 4, "stone": 8, "iron": 12},
         "items_seen": ["oak_log"], "incomplete": False},
    ]
    report = compose_report("resources", trials)
    assert report["summary"]["wooden"] == {"mean_iteration": 3.5, "reached": 2, "runs": 2}
    assert report["summary"]["iron"] == {"mean_iteration": 12.0, "reached": 1, "runs": 2}
    assert report["summary"]["unique_items"] == 2.0
    text = format_report(report)
    assert "3.5 (2/2)" in text
    assert "12 (1/2)" in text


def test_building_report_counts_only_building_checks():
    trials = [
        {"trial_id": "a", "world_kind": "flat", "seed": 1, "incomplete": False, "checks": [
            check(True, True, 11), check(True, False, 22), check(True, True, 11),
            check(True, False, None, building=False),
        ]},
        {"trial_id": "b", "world_kind": "regular", "seed": 1, "incomplete": False, "checks": [check(False, False, 5)]},
    ]
    report = compose_report("building", trials)
    assert report["rows"][0] == {"trial": "a", "world_kind": "flat", "seed": 1, "building_attempts": 3,
                                 "building_reported": 3, "building_successes": 2, "unique_structures": 2}
    assert report["summary"]["flat"]["success_rate"] == pytest.approx(2 / 3)
    assert report["summary"]["regular"]["success_rate"] == 0.0
    assert report["summary"]["overall"]["unique_structures"] == 1.5
    text = format_report(report)
    assert "67%" in text


def test_csv_rows(tmp_path):
    trials = [{"trial_id": "a", "world_kind": "regular", "seed": 3, "milestones": {"wooden": 2},
               "items_seen": [], "incomplete": False}]
    path = tmp_path / "report.csv"
    write_csv(compose_report("resources", trials), str(path))
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert rows == [{"trial": "a", "world_kind": "regular", "seed": "3", "wooden": "2", "stone": "", "iron": "",
                     "unique_items": "0"}]
