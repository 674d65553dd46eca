import csv
import json
import re

import numpy as np
import pytest

from sdot.cli import main
from sdot.problems import (
    generate,
    load_problem,
    parse_problem,
    serialize_problem,
)


class TestProblemFiles:
    def test_round_trip_is_byte_stable(self, tmp_path):
        for kind, params in (
            ("paper_fig", {"n": 5}),
            ("uniform_square", {"n": 6}),
            ("annulus", {"n_targets": 8, "resolution": 16}),
        ):
            raw = generate(kind, **params)
            text1 = serialize_problem(raw)
            prob = parse_problem(text1)
            text2 = serialize_problem(prob.raw)
            assert text1 == text2, kind

    def test_grid_shorthand(self):
        raw = generate("paper_fig", n=4)
        prob = parse_problem(serialize_problem(raw))
        assert len(prob.targets) == 16
        np.testing.assert_allclose(prob.targets.points[0], [0.0, 0.0])
        np.testing.assert_allclose(prob.targets.points[-1], [1.0, 1.0])
        np.testing.assert_allclose(prob.targets.masses, 1.0 / 16.0)

    def test_grid_rect_override(self):
        raw = generate("paper_fig", n=4, grid_rect=(0.0, 0.0, 3.0, 3.0))
        prob = parse_problem(serialize_problem(raw))
        np.testing.assert_allclose(prob.targets.points[-1], [3.0, 3.0])

    def test_uniform_square_two_sites(self):
        prob = parse_problem(serialize_problem(generate("uniform_square", n=2)))
        np.testing.assert_allclose(prob.targets.points, [[0.25, 0.5], [0.75, 0.5]])

    def test_schema_version_enforced(self):
        raw = generate("uniform_square", n=2)
        raw["schema"] = "99"
        with pytest.raises(ValueError):
            parse_problem(serialize_problem(raw))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            generate("bogus")


class TestGenCommand:
    def test_gen_writes_parseable_file(self, tmp_path):
        out = tmp_path / "p.json"
        assert main(["gen", "uniform_square", "--n", "2", "--out", str(out)]) == 0
        prob = load_problem(out)
        assert len(prob.targets) == 2

    def test_gen_unknown_kind_exit_1(self, tmp_path, capsys):
        rc = main(["gen", "warp_field", "--out", str(tmp_path / "x.json")])
        assert rc == 1
        assert "unknown kind" in capsys.readouterr().err

    def test_gen_annulus(self, tmp_path):
        out = tmp_path / "a.json"
        assert main([
            "gen", "annulus", "--r", "1.0", "--R", "2.0",
            "--n-targets", "12", "--resolution", "24", "--out", str(out),
        ]) == 0
        prob = load_problem(out)
        assert len(prob.targets) == 12


class TestRunCommand:
    def test_two_sites_zero_iterations(self, tmp_path, capsys):
        prob_path = tmp_path / "p.json"
        main(["gen", "uniform_square", "--n", "2", "--out", str(prob_path)])
        out_dir = tmp_path / "out"
        rc = main(["run", str(prob_path), "--out", str(out_dir), "--eta", "1e-10"])
        assert rc == 0
        trace = list(csv.DictReader(open(out_dir / "trace.csv")))
        assert len(trace) == 1  # initial record only: already optimal
        assert float(trace[0]["residual_l2"]) < 1e-10

    def test_outputs_and_trace_contract(self, tmp_path):
        prob_path = tmp_path / "p.json"
        main(["gen", "paper_fig", "--n", "5", "--out", str(prob_path)])
        out_dir = tmp_path / "out"
        rc = main(["run", str(prob_path), "--out", str(out_dir), "--svg-frames"])
        assert rc == 0

        with open(out_dir / "trace.csv") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        assert header == [
            "iter", "residual_l2", "residual_inf", "step_exponent", "min_mass", "phi",
        ]
        prev = None
        for row in rows:
            res = float(row[1])
            ell = int(row[3])
            if prev is not None:
                assert res <= (1.0 - 2.0 ** -(ell + 1)) * prev
            prev = res
        assert float(rows[-1][1]) < 1e-9

        psi = json.load(open(out_dir / "psi.json"))["psi"]
        assert abs(sum(psi)) < 1e-9

        cells = json.load(open(out_dir / "cells.geojson"))
        assert cells["type"] == "FeatureCollection"
        assert len(cells["features"]) == 25
        props = cells["features"][0]["properties"]
        assert {"site", "site_point", "mass", "target_mass"} <= set(props)
        masses = [f["properties"]["mass"] for f in cells["features"]]
        assert np.allclose(masses, 1.0 / 25.0, atol=1e-9)

        frames = sorted(out_dir.glob("frame_*.svg"))
        assert len(frames) == len(rows)
        svg = frames[-1].read_text()
        assert svg.count("<polygon") == 25
        assert svg.count("<path") == 1

    def test_malformed_json_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schema": "1", "domain": [[0,0], oops]}')
        rc = main(["run", str(bad), "--out", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err
        assert re.search(r"line \d+, column \d+", err)

    def test_bad_initial_exit_2(self, tmp_path, capsys):
        # Full-domain grid: sites inside the zero-density block have empty
        # initial cells.
        prob_path = tmp_path / "p.json"
        main([
            "gen", "paper_fig", "--n", "10",
            "--grid-rect", "0,0,3,3", "--out", str(prob_path),
        ])
        rc = main(["run", str(prob_path), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "zero-mass cells" in capsys.readouterr().err

    def test_nonconvergence_exit_3(self, tmp_path):
        prob_path = tmp_path / "p.json"
        main(["gen", "paper_fig", "--n", "5", "--out", str(prob_path)])
        rc = main(["run", str(prob_path), "--out", str(tmp_path / "o"), "--max-iter", "1"])
        assert rc == 3

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 1


class TestVerifyCommand:
    def test_two_sites_all_pass(self, tmp_path, capsys):
        prob_path = tmp_path / "p.json"
        main(["gen", "uniform_square", "--n", "2", "--out", str(prob_path)])
        rc = main(["verify", str(prob_path), "--seed", "42", "--mc-samples", "200000"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "FAIL" not in out

    def test_random_instance_all_pass(self, tmp_path, capsys):
        prob_path = tmp_path / "p.json"
        main(["gen", "uniform_square", "--n", "12", "--out", str(prob_path)])
        rc = main(["verify", str(prob_path), "--seed", "42", "--mc-samples", "200000"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("PASS") >= 6

    def test_bad_initial_surfaced_before_checks(self, tmp_path, capsys):
        prob_path = tmp_path / "p.json"
        main([
            "gen", "paper_fig", "--n", "10",
            "--grid-rect", "0,0,3,3", "--out", str(prob_path),
        ])
        rc = main(["verify", str(prob_path)])
        assert rc == 2
