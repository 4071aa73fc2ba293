import csv
import io
import json
import math
from collections import Counter
from pathlib import Path

import pytest
from click.testing import CliRunner

from sqhex import __version__
from sqhex.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY, main
from sqhex.config import ConfigError, bundled_path, load_config, parse_config
from sqhex.partitions import staircase
from sqhex.sampler import exact_chain_distribution

TINY = str(bundled_path("models/tiny_n3.toml"))
UNIFORM = str(bundled_path("models/uniform_m2_n1.toml"))
PIECEWISE = str(bundled_path("models/piecewise_n2.toml"))


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    return header, list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def read_jsonl(path):
    lines = Path(path).read_text().splitlines()
    return json.loads(lines[0])["provenance"], [json.loads(l) for l in lines[1:]]


class TestConfig:
    def test_bundled_models_load(self):
        for name in ("tiny_n3", "uniform_m2_n1", "uniform_m2_n2", "uniform_m3_n1", "piecewise_n2"):
            cfg = load_config(bundled_path(f"models/{name}.toml"))
            assert cfg.spec.N >= 3
            assert len(cfg.digest) == 64

    def test_staircase_sets_m(self):
        cfg = load_config(UNIFORM)
        assert cfg.is_uniform and cfg.model.m == 2
        assert cfg.spec.omega == staircase(2, 24)

    def test_piecewise_model(self):
        cfg = load_config(PIECEWISE)
        assert not cfg.is_uniform
        assert cfg.piecewise().n == 2

    def test_digest_tracks_text(self):
        a = parse_config('[lattice]\nOmega=[1,3]\n[weights]\nx=[1.0,2.0]\n')
        b = parse_config('[lattice]\nOmega=[1,3]\n[weights]\nx=[1.0,2.5]\n')
        assert a.digest != b.digest

    @pytest.mark.parametrize(
        "text",
        [
            "not = [toml",
            "[lattice]\nOmega=[1,3]\n",
            "[lattice]\nOmega=[1,3]\nstaircase=2\n[weights]\nx=[1.0]\n",
            "[lattice]\nOmega=[3,1]\n[weights]\nx=[1.0]\n",
            "[lattice]\nstaircase=2\n[weights]\nx=[1.0]\n",
            "[lattice]\nOmega=[1,3]\n[weights]\nx=['a']\n",
        ],
    )
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.toml")

    def test_piecewise_requires_segments(self):
        with pytest.raises(ConfigError):
            load_config(UNIFORM).piecewise()


class TestSample:
    def test_record_count_and_provenance(self, tmp_path):
        res = run("sample", "--config", TINY, "--samples", 1000, "--seed", 7, "--out", tmp_path)
        assert res.exit_code == 0, res.output
        prov, recs = read_jsonl(tmp_path / "samples.jsonl")
        assert len(recs) == 1000
        assert prov["seed"] == 7 and prov["version"] == __version__
        assert prov["config_sha256"] == load_config(TINY).digest
        assert [r["index"] for r in recs] == list(range(1000))
        header, rows = read_csv(tmp_path / "height.csv")
        assert header["seed"] == 7 and header["csv_version"] == 1
        assert set(rows[0]) == {"x", "y", "mean_height"}
        assert (tmp_path / "height.svg").read_text().startswith("<svg")

    def test_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert run("sample", "--config", TINY, "--samples", 200, "--seed", 3, "--out", tmp_path / d).exit_code == 0
        for name in ("samples.jsonl", "height.csv", "height.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        run("sample", "--config", TINY, "--samples", 50, "--seed", 1, "--out", tmp_path / "a")
        run("sample", "--config", TINY, "--samples", 50, "--seed", 2, "--out", tmp_path / "b")
        assert (tmp_path / "a" / "samples.jsonl").read_bytes() != (tmp_path / "b" / "samples.jsonl").read_bytes()

    @pytest.mark.slow
    def test_methods_agree(self, tmp_path):
        n = 100_000
        law = exact_chain_distribution(load_config(TINY).spec)
        counts = {}
        for method in ("kernel", "kasteleyn"):
            out = tmp_path / method
            assert run("sample", "--config", TINY, "--samples", n, "--seed", 5, "--method", method, "--out", out).exit_code == 0
            _, recs = read_jsonl(out / "samples.jsonl")
            N = 3
            counts[method] = Counter(tuple(tuple(r["signatures"][str(k)]) for k in range(1, 2 * N + 2)) for r in recs)
        tv = 0.5 * sum(abs(counts["kernel"][k] - counts["kasteleyn"][k]) / n for k in set(law))
        assert set(counts["kernel"]) | set(counts["kasteleyn"]) <= set(law)
        assert tv < 0.01

    def test_row_selection(self, tmp_path):
        run("sample", "--config", TINY, "--samples", 5, "--seed", 1, "--rows", "1,7", "--out", tmp_path)
        _, recs = read_jsonl(tmp_path / "samples.jsonl")
        assert set(recs[0]["signatures"]) == {"1", "7"}
        assert recs[0]["signatures"]["1"] == list(load_config(TINY).spec.omega)

    def test_seed_from_config(self, tmp_path):
        res = run("sample", "--config", UNIFORM, "--samples", 3, "--out", tmp_path)
        assert res.exit_code == 0
        assert read_jsonl(tmp_path / "samples.jsonl")[0]["seed"] == 7

    def test_missing_seed(self, tmp_path):
        cfg = tmp_path / "m.toml"
        cfg.write_text("[lattice]\nOmega=[1,3]\n[weights]\nx=[1.0,2.0]\n")
        res = CliRunner().invoke(main, ["sample", "--config", str(cfg), "--out", str(tmp_path)])
        assert res.exit_code == EXIT_CONFIG

    def test_bad_toml(self, tmp_path):
        cfg = tmp_path / "m.toml"
        cfg.write_text("[lattice\n")
        res = CliRunner().invoke(main, ["sample", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_CONFIG

    def test_bad_rows(self, tmp_path):
        res = CliRunner().invoke(main, ["sample", "--config", TINY, "--seed", "1", "--rows", "99", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_CONFIG


class TestVerify:
    def test_default_suites_pass(self, tmp_path):
        res = run("verify", "--samples", 20000, "--out", tmp_path)
        assert res.exit_code == 0, res.output
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["pass"]
        assert {s["name"] for s in report["suites"]} >= {"partition_function", "samplers", "heights", "piecewise"}

    def test_sign_injection_is_caught(self, tmp_path):
        res = CliRunner().invoke(main, ["verify", "--suite", "partition_function", "--inject-sign-error", "3", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_VERIFY
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert not report["pass"]

    def test_schema_is_stable(self, tmp_path):
        keys = []
        for d in ("a", "b"):
            run("verify", "--suite", "schur", "--suite", "kernels", "--config", TINY, "--out", tmp_path / d)
            report = json.loads((tmp_path / d / "verify_report.json").read_text())
            keys.append((sorted(report), sorted(report["provenance"]), [sorted(c) for s in report["suites"] for c in s["checks"]]))
            assert report["schema"] == "sqhex.verify/1"
        assert keys[0] == keys[1]
        assert (tmp_path / "a" / "verify_report.json").read_bytes() == (tmp_path / "b" / "verify_report.json").read_bytes()

    def test_config_model_is_checked(self, tmp_path):
        run("verify", "--suite", "schur", "--config", TINY, "--out", tmp_path)
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert "config_model" in [s["name"] for s in report["suites"]]

    def test_unknown_suite(self, tmp_path):
        res = CliRunner().invoke(main, ["verify", "--suite", "nonsense", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_CONFIG


class TestLimits:
    def test_uniform(self, tmp_path):
        res = run("limits", "--config", UNIFORM, "--kappa", "0.25,0.5", "--samples", 0, "--out", tmp_path)
        assert res.exit_code == 0, res.output
        _, mom = read_csv(tmp_path / "moments.csv")
        assert [float(r["p0"]) for r in mom] == [1.0, 1.0]
        _, dens = read_csv(tmp_path / "density_grid.csv")
        vals = [float(r["density"]) for r in dens]
        assert all(0 <= v <= 1 for v in vals)
        assert any(0 < v < 1 for v in vals)
        _, fb = read_csv(tmp_path / "frozen_boundary.csv")
        assert len(fb) > 100
        cov = json.loads((tmp_path / "covariance_report.json").read_text())
        assert cov["schema"] == "sqhex.covariance/1"
        assert cov["entries"][1]["formula"] == pytest.approx(1 / 16, rel=1e-8)
        assert cov["entries"][1]["mc_estimate"] is None

    def test_monte_carlo_z_score(self, tmp_path):
        res = run("limits", "--config", UNIFORM, "--kappa", "0.5", "--samples", 2000, "--seed", 7, "--out", tmp_path)
        assert res.exit_code == 0
        (entry,) = json.loads((tmp_path / "covariance_report.json").read_text())["entries"]
        assert entry["stderr"] > 0
        # finite-N bias is a few percent, far below 3σ at this sample size
        assert abs(entry["z_score"]) < 3

    def test_piecewise(self, tmp_path):
        res = run("limits", "--config", PIECEWISE, "--kappa", "0.5", "--samples", 0, "--out", tmp_path)
        assert res.exit_code == 0, res.output
        _, mom = read_csv(tmp_path / "moments.csv")
        assert float(mom[0]["p0"]) == pytest.approx(1.0, abs=1e-9)
        _, dens = read_csv(tmp_path / "density_grid.csv")
        vals = [float(r["density"]) for r in dens]
        finite = [v for v in vals if not math.isnan(v)]
        assert len(finite) > len(vals) // 2
        assert all(0 <= v <= 1 for v in finite)
        assert {r["class"] for r in dens} == {"1", "2"}

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            run("limits", "--config", UNIFORM, "--kappa", "0.5", "--samples", 200, "--seed", 1, "--out", tmp_path / d)
        for name in ("moments.csv", "density_grid.csv", "frozen_boundary.csv", "covariance_report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_kappa(self, tmp_path):
        res = CliRunner().invoke(main, ["limits", "--config", UNIFORM, "--kappa", "1.5", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_CONFIG

    def test_needs_limit_data(self, tmp_path):
        res = CliRunner().invoke(main, ["limits", "--config", TINY, "--samples", "0", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_CONFIG

    def test_numeric_failure_exit_code(self, tmp_path, monkeypatch):
        import sqhex.asymptotics

        def broken(*_, **__):
            raise ArithmeticError("quadrature not converged")

        monkeypatch.setattr(sqhex.asymptotics, "limit_moments", broken)
        res = CliRunner().invoke(main, ["limits", "--config", UNIFORM, "--samples", "0", "--out", str(tmp_path)])
        assert res.exit_code == EXIT_NUMERIC
        assert "numerical failure" in res.output
        assert not (tmp_path / "moments.csv").exists()
