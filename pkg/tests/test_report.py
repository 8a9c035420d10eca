import csv
import json

import pytest

from fracnls import ManifestError
from fracnls.cli import main
from fracnls.report import dumps, manifest_hash, run, sweep, validate_manifest, validate_sweep

from conftest import GN_P, GN_Q, SOBOLEV_S


def base_doc(**changes):
    doc = {
        "params": {"N": 2, "s1": 0.75, "s2": 0.25, "p": 4.0, "q": 2.2, "mu": 20.0, "a": 1.0},
        "constants": {"gn_q": GN_Q, "gn_p": GN_P, "sobolev_S": SOBOLEV_S, "provenance": "Estimated"},
        "grid": {"dim": 2, "points_per_axis": 64, "box_half_length": 8.0},
        "solver": {"step": 0.5, "max_iters": 3000},
        "tasks": ["conditions", "h_geometry", "local_min", "fiber_scan"],
        "output_dir": "unused",
    }
    doc.update(changes)
    return doc


def critical_doc():
    doc = base_doc(tasks=["conditions", "critical_thresholds"])
    doc["params"].update(p=8.0, mu=50.0, a=0.15)
    doc["constants"]["gn_p"] = SOBOLEV_S ** (-2 / 8.0)
    return doc


def pointers(doc):
    with pytest.raises(ManifestError) as exc:
        validate_manifest(doc)
    return [p for p, _ in exc.value.errors]


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestValidation:
    def test_accepts_examples(self):
        assert validate_manifest(base_doc()).regime.value == "SubcriticalPair"
        assert validate_manifest(critical_doc()).regime.value == "SobolevCritical"

    @pytest.mark.parametrize(
        "section, key, value, ptr",
        [
            ("params", "s2", 0.8, "/params/s2"),
            ("params", "q", 2.5, "/params/q"),
            ("params", "p", 3.0, "/params/p"),
            ("params", "mu", -1.0, "/params/mu"),
            ("grid", "points_per_axis", 7, "/grid/points_per_axis"),
            ("solver", "step", -1.0, "/solver/step"),
            ("solver", "bogus", 1, "/solver/bogus"),
        ],
    )
    def test_field_pointers(self, section, key, value, ptr):
        doc = base_doc()
        doc[section][key] = value
        assert ptr in pointers(doc)

    def test_boundary_names_strict_inequality(self):
        doc = base_doc()
        doc["params"]["q"] = 2.5
        with pytest.raises(ManifestError, match="strict inequality q < 2"):
            validate_manifest(doc)

    def test_task_regime_mismatch(self):
        assert pointers(base_doc(tasks=["conditions", "critical_thresholds"])) == ["/tasks/1"]
        doc = critical_doc()
        doc["tasks"] = ["mountain_pass"]
        assert pointers(doc) == ["/tasks/0"]

    def test_critical_constant_link(self):
        doc = critical_doc()
        doc["constants"]["gn_p"] = 0.5
        assert pointers(doc) == ["/constants/gn_p"]

    def test_errors_are_aggregated(self):
        doc = base_doc(extra=1, tasks=["conditions", "conditions"])
        doc["params"]["s2"] = 0.9
        assert set(pointers(doc)) >= {"/extra", "/params/s2", "/tasks"}

    def test_sweep_values_ascending(self):
        with pytest.raises(ManifestError) as exc:
            validate_sweep({"base": base_doc(), "axis": "mu", "values": [1.0, 1.0]})
        assert exc.value.errors == [("/values", "values must be strictly ascending")]
        with pytest.raises(ManifestError):
            validate_sweep({"base": base_doc(), "axis": "zeta", "values": [1.0]})

    def test_hash_ignores_key_order(self):
        doc = base_doc()
        shuffled = json.loads(json.dumps(doc, sort_keys=True))
        assert manifest_hash(doc) == manifest_hash(dict(reversed(list(shuffled.items()))))

    def test_dumps_maps_nan_to_null(self):
        assert dumps({"x": float("nan")}).strip() in ('{"x": null}', '{\n  "x": null\n}')


class TestRun:
    def test_bundle_is_byte_identical(self, tmp_path):
        m = validate_manifest(base_doc())
        run(m, tmp_path / "a")
        run(m, tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert "local_min.field" in names and "local_min_trace.csv" in names
        for name in names:
            if name == "summary.json":
                continue
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_result_header_and_sources(self, tmp_path):
        m = validate_manifest(base_doc())
        run(m, tmp_path)
        doc = json.loads((tmp_path / "conditions.json").read_text())
        assert doc["manifest_hash"] == m.hash and doc["task"] == "conditions"
        res = doc["result"]
        assert res["constants"]["source"] == "estimated"
        assert res["A1"]["source"] == "formula"
        lm = json.loads((tmp_path / "local_min.json").read_text())["result"]
        assert lm["source"] == "measured" and lm["bounds"]["source"] == "formula"

    def test_task_errors_do_not_stop_the_run(self, tmp_path):
        m = validate_manifest(base_doc(grid={"dim": 2, "points_per_axis": 32, "box_half_length": 8.0},
                                       tasks=["mountain_pass", "conditions"]))
        summary = run(m, tmp_path)
        assert [e["status"] for e in summary["tasks"]] == ["error", "ok"]
        assert "ResolutionError" in summary["tasks"][0]["error"]
        assert not summary["ok"]

    def test_fiber_scan_csv(self, tmp_path):
        run(validate_manifest(base_doc(tasks=["fiber_scan"])), tmp_path)
        rows = list(csv.reader((tmp_path / "fiber_scan_seed.csv").open()))
        assert rows[0] == ["t", "phi", "dphi", "d2phi"] and len(rows) > 100


class TestSweep:
    def test_mu_sweep_flags(self, tmp_path):
        values = [-5.0, 0.0, 1.0, 5.0, 10.0, 20.0, 30.0, 56.0, 58.0, 100.0]
        spec = validate_sweep({"base": base_doc(tasks=["conditions"]), "axis": "mu", "values": values})
        rows = sweep(spec, tmp_path / "s.csv", workers=1)
        status = [r["status"] for r in rows]
        assert status[:2] == ["invalid", "invalid"]
        assert all(s == "ok" for s in status[2:])
        assert [r["A1_pass"] for r in rows[2:]] == [True] * 6 + [False] * 2
        assert rows[-1]["h_geometry"] == "degenerate"
        table = list(csv.DictReader((tmp_path / "s.csv").open()))
        assert [float(r["value"]) for r in table] == values
        assert "/params/mu" in table[0]["message"]

    def test_pool_matches_inline(self, tmp_path):
        spec = validate_sweep({"base": base_doc(tasks=["conditions"]), "axis": "a", "values": [0.5, 1.0, 2.0]})
        inline = sweep(spec, tmp_path / "x.csv", workers=1)
        pooled = sweep(spec, tmp_path / "y.csv", workers=2)
        assert inline == pooled
        assert (tmp_path / "x.csv").read_bytes() == (tmp_path / "y.csv").read_bytes()


class TestCli:
    def test_validate(self, tmp_path, capsys):
        assert main(["validate", write(tmp_path, "m.json", base_doc())]) == 0
        assert json.loads(capsys.readouterr().out)["valid"] is True

    def test_invalid_manifest_exit_code(self, tmp_path, capsys):
        doc = base_doc()
        doc["params"]["s2"] = 0.9
        assert main(["validate", write(tmp_path, "m.json", doc)]) == 2
        assert "/params/s2" in capsys.readouterr().err

    def test_bad_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json")
        assert main(["validate", str(path)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == 4

    def test_run_exit_codes(self, tmp_path):
        ok = write(tmp_path, "ok.json", base_doc(tasks=["conditions"]))
        assert main(["run", ok, "--output-dir", str(tmp_path / "o1")]) == 0
        bad = base_doc(grid={"dim": 2, "points_per_axis": 32, "box_half_length": 8.0}, tasks=["mountain_pass"])
        assert main(["run", write(tmp_path, "bad.json", bad), "--output-dir", str(tmp_path / "o2")]) == 3

    def test_conditions(self, tmp_path, capsys):
        assert main(["conditions", write(tmp_path, "m.json", base_doc())]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["A1"]["pass"] and rep["h_geometry"]["R0"] > 0

    def test_constants(self, capsys):
        assert main(["constants", "--estimate", "2", "0.75", "4", "--grid", "32", "6", "--no-refine"]) == 0
        est = json.loads(capsys.readouterr().out)
        assert est["kind"] == "gn" and est["source"] == "estimated" and est["refined"] is None

    def test_sweep(self, tmp_path):
        spec = {"base": base_doc(tasks=["conditions"]), "axis": "mu", "values": [-1.0, 10.0]}
        assert main(["sweep", write(tmp_path, "s.json", spec), "--output", str(tmp_path / "s.csv"), "--workers", "1"]) == 0
        assert (tmp_path / "s.csv").exists()
