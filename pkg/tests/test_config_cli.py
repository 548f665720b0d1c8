"""Config loading and command-line behavior.

Claims checked here:

* fraction strings in configs are converted to the nearest double and
  every inexact conversion is recorded in ``rounding_notes``;
* schema violations and rejected systems raise ``ConfigError`` with a
  message that names the offending element;
* the bundled example configs load and expose the documented fields;
* each subcommand writes its documented CSVs plus ``run_manifest.json``
  (config hash, library versions, sorted output list, no timestamps);
* exit codes: 0 success, 2 configuration rejected, 3 numeric failure
  (including the separation pre-check), 4 resource cap exceeded;
* reruns with an identical config produce byte-identical CSVs, and the
  ``--threads`` knob never changes file bytes;
* the case-II threshold notice goes to stderr for every subcommand
  except ``dims``;
* the ``verify`` subcommand passes end-to-end on the bundled case-I
  config.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os

import pytest

from ismquant import antichain, cli, verify
from ismquant.config import (
    ConfigError,
    example_config_path,
    load_config,
)
from ismquant.model import CASE_I, CASE_II

CASE_I_SYSTEM = {
    "case": "I",
    "dimension": 1,
    "outer_maps": [
        {"scale": "1/8", "translation": ["0"]},
        {"scale": "1/8", "translation": ["7/8"]},
    ],
    "p": ["1/20", "19/40", "19/40"],
    "t": ["1/3", "2/3"],
}

CASE_II_SYSTEM = {
    "case": "II",
    "dimension": 1,
    "outer_maps": [
        {"scale": "1/8", "translation": ["0"]},
        {"scale": "1/8", "translation": ["7/8"]},
    ],
    "inner_maps": [
        {"scale": "1/8", "translation": ["1/3"]},
        {"scale": "1/8", "translation": ["13/24"]},
    ],
    "p": ["1/20", "19/40", "19/40"],
    "t": ["1/3", "2/3"],
}


def write_probe(tmp_path, name="probe.json", *, system=None, **overrides):
    """Write a small config file and return its path."""
    data = {
        "system": system if system is not None else dict(CASE_I_SYSTEM),
        "r_list": [2.0],
        "k_list": [1, 10],
        "n_list": [2, 4, 8, 16, 32, 64],
        "samples": 2000,
        "restarts": 1,
        "seed": 7,
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestConfigLoading:
    def test_bundled_case_i_fields(self, ex31_cfg):
        cfg = ex31_cfg
        assert cfg.system.case_tag == CASE_I
        assert cfg.r_list == (0.01, 2.0, 20.0)
        assert cfg.k_list == (1, 10, 100, 1000)
        assert cfg.n_list == (2, 4, 8, 16, 32, 64)
        assert cfg.samples == 20000
        assert cfg.restarts == 4
        assert cfg.seed == 20240817
        assert cfg.psi_h0 and cfg.warm_start and not cfg.aggregates_only
        assert cfg.crossing_bracket == (0.01, 20.0)

    def test_bundled_case_ii_fields(self, ex32_cfg):
        cfg = ex32_cfg
        assert cfg.system.case_tag == CASE_II
        assert cfg.system.n_inner == 2
        assert cfg.k_list == (1, 2, 3, 5, 10, 20)
        assert cfg.system.inner_scales == (0.125, 0.125)

    def test_fraction_values_round_to_nearest_double(self, ex31_cfg):
        sys_ = ex31_cfg.system
        assert sys_.p == (0.05, 0.475, 0.475)
        assert sys_.t == (1.0 / 3.0, 2.0 / 3.0)
        assert sys_.outer_scales == (0.125, 0.125)

    def test_rounding_notes_name_each_inexact_entry(self, ex31_cfg):
        notes = ex31_cfg.rounding_notes
        named = {note.split(" ")[0] for note in notes}
        # 1/8 and 7/8 are exact doubles; the five p/t fractions are not.
        assert named == {
            "system.p[0]", "system.p[1]", "system.p[2]",
            "system.t[0]", "system.t[1]",
        }
        assert all("rounded to" in note for note in notes)

    def test_exact_strings_leave_no_note(self, tmp_path):
        system = dict(CASE_I_SYSTEM)
        system["p"] = [0.05, 0.475, 0.475]
        system["t"] = [0.25, 0.75]
        cfg = load_config(write_probe(tmp_path, system=system))
        assert cfg.rounding_notes == ()

    def test_rejects_p_with_wrong_sum(self, tmp_path):
        system = dict(CASE_I_SYSTEM)
        system["p"] = ["1/20", "19/40", "3/8"]  # sums to 0.9
        path = write_probe(tmp_path, system=system)
        with pytest.raises(ConfigError, match=r"p must sum to 1"):
            load_config(path)

    def test_rejects_unknown_top_level_key(self, tmp_path):
        path = write_probe(tmp_path, mystery_knob=3)
        with pytest.raises(ConfigError, match="config invalid"):
            load_config(path)

    def test_rejects_short_p_vector_naming_the_path(self, tmp_path):
        system = dict(CASE_I_SYSTEM)
        system["p"] = ["1/2", "1/2"]
        path = write_probe(tmp_path, system=system)
        with pytest.raises(ConfigError, match=r"system\.p"):
            load_config(path)

    def test_case_i_rejects_inner_maps(self, tmp_path):
        system = dict(CASE_I_SYSTEM)
        system["inner_maps"] = CASE_II_SYSTEM["inner_maps"]
        path = write_probe(tmp_path, system=system)
        with pytest.raises(ConfigError, match="inner_maps"):
            load_config(path)

    def test_case_ii_requires_inner_maps(self, tmp_path):
        system = dict(CASE_II_SYSTEM)
        del system["inner_maps"]
        path = write_probe(tmp_path, system=system)
        with pytest.raises(ConfigError, match="inner_maps"):
            load_config(path)

    def test_rejects_disordered_crossing_bracket(self, tmp_path):
        path = write_probe(tmp_path, crossing_bracket=[20.0, 0.5])
        with pytest.raises(ConfigError, match="crossing_bracket"):
            load_config(path)

    def test_rejects_nonpositive_r(self, tmp_path):
        path = write_probe(tmp_path, r_list=[2.0, -1.0])
        with pytest.raises(ConfigError, match="positive"):
            load_config(path)

    def test_rejects_bad_fraction_string(self, tmp_path):
        system = dict(CASE_I_SYSTEM)
        system["t"] = ["1/3", "two thirds"]
        path = write_probe(tmp_path, system=system)
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(str(tmp_path / "no_such.json"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(str(path))

    def test_non_object_document(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[1, 2, 3]", encoding="utf-8")
        with pytest.raises(ConfigError, match="JSON object"):
            load_config(str(path))

    def test_example_config_path_accepts_stem(self):
        assert example_config_path("example_3_1") == example_config_path(
            "example_3_1.json"
        )


class TestExitCodes:
    def test_dims_ok(self, tmp_path):
        out = tmp_path / "out"
        rc = cli.main([
            "dims", "--config", example_config_path("example_3_1"),
            "--out", str(out),
        ])
        assert rc == 0
        rows = read_rows(out / "dims.csv")
        regimes = {row["r"]: row["regime"] for row in rows}
        assert regimes["0.01"] == "XI1_GREATER"
        assert regimes["20"] == "XI2_GREATER"
        cross = read_rows(out / "crossing.csv")
        assert len(cross) == 1
        assert abs(float(cross[0]["r_star"]) - 2.2758338129520417) < 1e-6
        assert cross[0]["regime"] == "EQUAL"

    def test_positional_and_flag_agree(self, tmp_path):
        rc = cli.main([
            "dims", "--subcommand", "dims",
            "--config", example_config_path("example_3_1"),
            "--out", str(tmp_path / "out"),
        ])
        assert rc == 0

    def test_conflicting_subcommands(self, tmp_path, capsys):
        rc = cli.main([
            "dims", "--subcommand", "bounds",
            "--config", example_config_path("example_3_1"),
            "--out", str(tmp_path / "out"),
        ])
        assert rc == 2
        assert "conflicts" in capsys.readouterr().err

    def test_no_subcommand(self, tmp_path, capsys):
        rc = cli.main([
            "--config", example_config_path("example_3_1"),
            "--out", str(tmp_path / "out"),
        ])
        assert rc == 2
        assert "no subcommand" in capsys.readouterr().err

    def test_threads_must_be_positive(self, tmp_path, capsys):
        rc = cli.main([
            "dims", "--config", example_config_path("example_3_1"),
            "--out", str(tmp_path / "out"), "--threads", "0",
        ])
        assert rc == 2
        assert "--threads" in capsys.readouterr().err

    def test_missing_config_flag_is_argparse_error(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["dims"])
        assert excinfo.value.code == 2

    def test_unknown_subcommand_is_argparse_error(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            cli.main([
                "frobnicate",
                "--config", example_config_path("example_3_1"),
            ])
        assert excinfo.value.code == 2

    def test_unreadable_config(self, tmp_path, capsys):
        rc = cli.main([
            "dims", "--config", str(tmp_path / "missing.json"),
            "--out", str(tmp_path / "out"),
        ])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_rejected_system_names_the_vector(self, tmp_path, capsys):
        system = dict(CASE_I_SYSTEM)
        system["p"] = ["1/20", "19/40", "3/8"]
        path = write_probe(tmp_path, system=system)
        rc = cli.main(["dims", "--config", path,
                       "--out", str(tmp_path / "out")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "config error" in err and "p must sum to 1" in err

    def test_overlapping_maps_fail_separation(self, tmp_path, capsys):
        system = dict(CASE_I_SYSTEM)
        system["outer_maps"] = [
            {"scale": "1/2", "translation": ["0"]},
            {"scale": "1/2", "translation": ["1/4"]},
        ]
        path = write_probe(tmp_path, system=system)
        rc = cli.main(["dims", "--config", path,
                       "--out", str(tmp_path / "out")])
        assert rc == 3
        assert "separation" in capsys.readouterr().err

    def test_depth_cap_exit(self, tmp_path, capsys):
        path = write_probe(
            tmp_path, system=dict(CASE_II_SYSTEM),
            r_list=[0.01], k_list=[40],
        )
        rc = cli.main(["antichain", "--config", path,
                       "--out", str(tmp_path / "out")])
        assert rc == 4
        assert "resource cap" in capsys.readouterr().err

    def test_cardinality_cap_is_exit_4_in_process(self, ex31):
        # The same condition surfaces through the CLI's exception map;
        # build_lambda raising is covered in the antichain module tests.
        with pytest.raises(antichain.CardinalityCapExceeded):
            antichain.build_lambda(ex31, 1000, 2.0, cap=3)


class TestManifest:
    def test_contents(self, tmp_path):
        out = tmp_path / "out"
        config = example_config_path("example_3_1")
        rc = cli.main(["dims", "--config", config, "--out", str(out),
                       "--threads", "2"])
        assert rc == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert set(manifest) == {
            "command", "config", "config_sha256", "seed", "threads",
            "versions", "rounding_notes", "outputs",
        }
        assert manifest["command"] == "dims"
        assert manifest["seed"] == 20240817
        assert manifest["threads"] == 2
        with open(config, "rb") as fh:
            assert manifest["config_sha256"] == hashlib.sha256(
                fh.read()
            ).hexdigest()
        assert set(manifest["versions"]) == {
            "ismquant", "python", "numpy", "matplotlib", "jsonschema",
        }
        assert manifest["outputs"] == sorted(manifest["outputs"])
        assert {"dims.csv", "crossing.csv", "run_manifest.json"} <= set(
            manifest["outputs"]
        )
        assert len(manifest["rounding_notes"]) == 5
        # No wall-clock state may leak into the manifest.
        assert not any("time" in key or "date" in key for key in manifest)

    def test_seed_override(self, tmp_path):
        out = tmp_path / "out"
        rc = cli.main([
            "dims", "--config", example_config_path("example_3_1"),
            "--out", str(out), "--seed", "99",
        ])
        assert rc == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["seed"] == 99


class TestDeterminism:
    def test_empirical_reruns_are_byte_identical(self, tmp_path):
        path = write_probe(tmp_path)
        outputs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            rc = cli.main(["empirical", "--config", path,
                           "--out", str(out)])
            assert rc == 0
            outputs.append(out)
        for name in ("empirical.csv", "order_fit.csv",
                      "run_manifest.json"):
            first = (outputs[0] / name).read_bytes()
            second = (outputs[1] / name).read_bytes()
            assert first == second, f"{name} differs between reruns"

    def test_threads_do_not_change_bytes(self, tmp_path):
        path = write_probe(tmp_path)
        out1 = tmp_path / "t1"
        out3 = tmp_path / "t3"
        assert cli.main(["empirical", "--config", path,
                         "--out", str(out1)]) == 0
        assert cli.main(["empirical", "--config", path, "--out", str(out3),
                         "--threads", "3"]) == 0
        for name in ("empirical.csv", "order_fit.csv"):
            assert (out1 / name).read_bytes() == (out3 / name).read_bytes()


class TestSubcommandOutputs:
    def test_antichain_case_i(self, tmp_path):
        path = write_probe(tmp_path, k_list=[1, 10, 100])
        out = tmp_path / "out"
        assert cli.main(["antichain", "--config", path,
                         "--out", str(out)]) == 0
        rows = read_rows(out / "lambda_series.csv")
        assert [row["k"] for row in rows] == ["1", "10", "100"]
        for row in rows:
            assert float(row["lambda_kr"]) >= 1.0
            assert int(row["l1"]) <= int(row["l2"])

    def test_antichain_case_ii(self, tmp_path, capsys):
        path = write_probe(tmp_path, system=dict(CASE_II_SYSTEM),
                           k_list=[1, 2, 3])
        out = tmp_path / "out"
        assert cli.main(["antichain", "--config", path,
                         "--out", str(out)]) == 0
        err = capsys.readouterr().err
        assert "threshold" in err and "both families" in err
        rows = read_rows(out / "lambda_tilde.csv")
        assert [row["k"] for row in rows] == ["1", "2", "3"]
        first = rows[0]
        assert first["gamma_count"] == "4"
        assert first["psi_count"] == "3"
        assert first["phi_kr"] == "7"

    def test_dims_stays_quiet_for_case_ii(self, tmp_path, capsys):
        path = write_probe(tmp_path, system=dict(CASE_II_SYSTEM))
        assert cli.main(["dims", "--config", path,
                         "--out", str(tmp_path / "out")]) == 0
        assert "threshold" not in capsys.readouterr().err

    def test_bounds_writes_codebooks(self, tmp_path):
        path = write_probe(tmp_path, k_list=[1, 10])
        out = tmp_path / "out"
        assert cli.main(["bounds", "--config", path,
                         "--out", str(out)]) == 0
        rows = read_rows(out / "bounds.csv")
        assert {row["kind"] for row in rows} == {"cylinder"}
        for row in rows:
            book = read_rows(out / row["codebook_file"])
            assert len(book) == int(row["n"])
            assert float(row["upper_bound"]) > 0.0

    def test_bounds_aggregates_only_skips_codebooks(self, tmp_path):
        path = write_probe(tmp_path, k_list=[1, 10],
                           toggles={"aggregates_only": True})
        out = tmp_path / "out"
        assert cli.main(["bounds", "--config", path,
                         "--out", str(out)]) == 0
        rows = read_rows(out / "bounds.csv")
        assert all(row["codebook_file"] == "" for row in rows)
        assert not [f for f in os.listdir(out)
                    if f.startswith("codebook_")]

    def test_bounds_case_ii_patch_kind(self, tmp_path):
        path = write_probe(tmp_path, system=dict(CASE_II_SYSTEM),
                           k_list=[1, 2])
        out = tmp_path / "out"
        assert cli.main(["bounds", "--config", path,
                         "--out", str(out)]) == 0
        rows = read_rows(out / "bounds.csv")
        assert {row["kind"] for row in rows} == {"patch"}
        # patch codebook size = anchor pairs + branch-word anchors
        assert [int(row["n"]) for row in rows] == [12, 32]

    def test_empirical_rows_and_fit(self, tmp_path):
        path = write_probe(tmp_path)
        out = tmp_path / "out"
        assert cli.main(["empirical", "--config", path,
                         "--out", str(out)]) == 0
        rows = read_rows(out / "empirical.csv")
        sources = {row["source"] for row in rows}
        assert sources == {"lloyd", "antichain_upper"}
        lloyd = [row for row in rows if row["source"] == "lloyd"]
        assert [int(row["n"]) for row in lloyd] == [2, 4, 8, 16, 32, 64]
        assert all(float(row["e_r_pow_r"]) > 0.0 for row in lloyd)
        fits = read_rows(out / "order_fit.csv")
        assert len(fits) == 1
        assert fits[0]["model"] == "pure_power"
        slope = float(fits[0]["slope"])
        assert -7.0 < slope < -5.0  # predicted -r/xi_r is about -6.07

    def test_report_writes_figures_and_summary(self, tmp_path):
        path = write_probe(tmp_path, crossing_bracket=[0.5, 20.0])
        out = tmp_path / "out"
        assert cli.main(["report", "--config", path,
                         "--out", str(out)]) == 0
        for name in ("xi_vs_r.png", "lambda_series.png",
                     "error_decay_r2.png"):
            blob = (out / name).read_bytes()
            assert blob.startswith(b"\x89PNG\r\n"), name
        summary = (out / "summary.txt").read_text(encoding="utf-8")
        assert "separation: min gap 0.75" in summary
        assert "exponent crossing" in summary
        assert "rounding notes" in summary
        keyvals = {row["key"]: row["value"]
                   for row in read_rows(out / "summary.csv")}
        assert keyvals["regime_r2"] == "XI1_GREATER"
        assert abs(float(keyvals["crossing_r"]) - 2.2758338) < 1e-5
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert "summary.txt" in manifest["outputs"]
        assert "xi_vs_r.png" in manifest["outputs"]


class TestVerifySubcommand:
    def test_bundled_case_i_passes(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = cli.main([
            "verify", "--config", example_config_path("example_3_1"),
            "--out", str(out),
        ])
        assert rc == 0
        captured = capsys.readouterr()
        rows = read_rows(out / "verify.csv")
        assert len(rows) == len(verify.CHECKS)
        statuses = {row["status"] for row in rows}
        assert statuses <= {"pass", "skip"}
        assert sum(row["status"] == "pass" for row in rows) >= 25
        assert "pass" in captured.out
        assert (out / "run_manifest.json").exists()

    def test_fast_mode_case_ii(self, ex32_cfg):
        rows = verify.run_checks(ex32_cfg, fast=True)
        failed = [name for name, status, _ in rows if status == "fail"]
        assert failed == []
        skipped = {name for name, status, _ in rows if status == "skip"}
        assert "quantizer.plugin_consistency" in skipped
