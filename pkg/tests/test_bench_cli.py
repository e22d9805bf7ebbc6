import json
import math

import numpy as np
import pytest
import scipy.io

from laminate_iga.bench import (
    CSV_COLUMNS,
    BenchConfig,
    BenchRecord,
    ConfigError,
    emit_report,
    family_angles,
    load_records,
    pagano_setup,
    run_bench,
)
from laminate_iga.cli import main
from laminate_iga.materials import PAGANO


def record(backend="fast", p=1, elements=(1, 1), m=1, time_s=0.5):
    return BenchRecord(backend, p, elements, m, 1, time_s, 10, 1e-16, 4)


@pytest.fixture
def config_path(tmp_path):
    def write(d):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(d))
        return str(path)

    return write


SMALL = {
    "material": {"E1": 25, "E2": 1, "E3": 1, "G12": 0.2, "G13": 0.2, "G23": 0.5, "nu12": 0.25, "nu13": 0.25, "nu23": 0.25},
    "layup": {"family": "quad_ply", "layers": [1, 6]},
    "discretization": {"degree": [1, 2], "elements": [2, 2], "thickness_elements": 1},
    "geometry": {"Lx": 1, "Ly": 1, "a": [0, 0, 0.1]},
    "backends": ["standard", "fast", "voigt_free"],
}


class TestPaganoSetup:
    def test_cross_ply(self):
        s = pagano_setup(4, "cross_ply")
        assert [math.degrees(c.angle) for c in s.layup.configs] == [0, 90, 0, 90]
        np.testing.assert_allclose(s.layup.interfaces, [0, 0.25, 0.5, 0.75, 1])

    def test_quad_ply_cycle(self):
        assert family_angles("quad_ply", 6) == [0, 45, -45, 90, 0, 45]

    def test_single_layer(self):
        assert pagano_setup(1, "quad_ply").layup.m_bar == 1

    def test_defaults(self):
        s = pagano_setup(2, "cross_ply", p=3, elements=(4, 2))
        assert s.layup.configs[0].constants == PAGANO
        assert (s.space.u.n_elements, s.space.v.n_elements, s.space.t.n_elements) == (4, 2, 1)
        assert s.space.u.n == 4 + 3
        np.testing.assert_allclose(s.geom.jacobian(0.5, 0.5), np.diag([1, 1, 0.1]))

    def test_alias_and_random(self):
        assert family_angles("cross_ply_0_90", 3) == [0, 90, 0]
        a, b = family_angles("random", 5, seed=1), family_angles("random", 5, seed=1)
        assert a == b and len(set(a)) == 5

    def test_unknown_family(self):
        with pytest.raises(ConfigError):
            family_angles("zigzag", 2)


class TestConfig:
    def test_parse(self):
        cfg = BenchConfig.from_dict(SMALL)
        assert cfg.cells()[0] == (1, (2, 2), 1)
        assert len(cfg.cells()) == 4
        assert cfg.backends == ("standard", "fast", "voigt_free")

    def test_custom_angles(self):
        cfg = BenchConfig.from_dict({"layup": {"angles": [0, 30]}, "discretization": {"degree": 1}})
        assert cfg.layer_counts == [2] and cfg.layup_family == "custom"

    @pytest.mark.parametrize(
        "patch",
        [
            {"discretization": {"degree": []}},
            {"repetitions": 0},
            {"backends": ["gpu"]},
            {"layup": {"family": "cross_ply"}},
            {"layup": {"family": "cross_ply", "layers": 0}},
        ],
    )
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            BenchConfig.from_dict(SMALL | patch)

    def test_missing_key(self):
        with pytest.raises(ConfigError):
            BenchConfig.from_dict({"layup": {"family": "cross_ply", "layers": 2}})


class TestRunBench:
    def test_trivial_cell(self):
        cfg = BenchConfig([1], [1], [1], backends=("standard", "fast"))
        recs = run_bench(cfg)
        assert len(recs) == 2
        assert all(r.rel_diff <= 1e-12 for r in recs)

    def test_cross_ply_m_bar(self):
        cfg = BenchConfig([1], [1], [4, 8, 16, 32, 64], backends=("fast",))
        recs = run_bench(cfg)
        assert [r.m_bar for r in recs] == [2] * 5
        assert all(math.isnan(r.rel_diff) for r in recs)

    def test_qpoint_counts(self):
        cfg = BenchConfig([2], [2], [5], layup_family="quad_ply", backends=("standard", "fast", "voigt_free"))
        by = {r.backend: r for r in run_bench(cfg)}
        assert by["standard"].qpoints == 5 * 27
        assert by["fast"].qpoints == 4 * 9
        assert by["voigt_free"].qpoints == 4 * 9

    def test_failed_cell_recorded(self, monkeypatch):
        import laminate_iga.bench as bench

        cfg = BenchConfig([1], [1], [1, 2], backends=("fast",))
        real = bench.pagano_setup

        def flaky(m, *args, **kw):
            if m == 2:
                raise RuntimeError("boom")
            return real(m, *args, **kw)

        monkeypatch.setattr(bench, "pagano_setup", flaky)
        recs = run_bench(cfg)
        assert recs[0].error is None
        assert "boom" in recs[1].error


class TestReport:
    def test_single_record_csv(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_report([record()], path, "csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == "backend,p,elements,m,m_bar,time_s,nnz,rel_diff,qpoints"
        assert lines[0].split(",") == list(CSV_COLUMNS)

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_round_trip(self, tmp_path, fmt):
        recs = [record(m=m, time_s=0.1 * m + 1e-17) for m in (1, 3, 2)]
        path = tmp_path / f"r.{fmt}"
        emit_report(recs, path, fmt, metadata={"threads": 2})
        back = load_records(path, fmt)
        assert back == sorted(recs, key=BenchRecord.sort_key)

    def test_sorted_regardless_of_order(self, tmp_path):
        recs = [record("standard", 2, (2, 2), 3), record("fast", 3, (1, 1), 1), record("fast", 2, (4, 4), 1), record("fast", 2, (2, 2), 8)]
        path = tmp_path / "r.csv"
        emit_report(recs, path)
        emit_report(list(reversed(recs)), tmp_path / "s.csv")
        assert path.read_text() == (tmp_path / "s.csv").read_text()
        keys = [(r.backend, r.p, r.elements, r.m) for r in load_records(path)]
        assert keys == sorted(keys)

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report([], tmp_path / "x.csv")

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            emit_report([record()], tmp_path / "missing" / "r.csv")


class TestCli:
    def test_bench_csv(self, config_path, tmp_path, capsys):
        out = tmp_path / "out.csv"
        assert main(["bench", "--config", config_path(SMALL), "--out", str(out), "--format", "csv"]) == 0
        recs = load_records(out)
        assert len(recs) == 12
        assert max(r.rel_diff for r in recs) <= 1e-12

    def test_bench_json_records_threads(self, config_path, tmp_path):
        out = tmp_path / "out.json"
        cfg = SMALL | {"discretization": {"degree": 1, "elements": [1, 1]}, "layup": {"family": "cross_ply", "layers": 2}}
        main(["bench", "--config", config_path(cfg), "--out", str(out), "--format", "json", "--threads", "2"])
        assert json.loads(out.read_text())["metadata"]["threads"] == 2

    @pytest.mark.parametrize("backend", ["standard", "fast", "voigt-free"])
    def test_assemble_export(self, config_path, tmp_path, backend):
        cfg = {"layup": {"angles": [0, 45, 90]}, "discretization": {"degree": 2, "elements": [2, 1]}}
        out = tmp_path / f"{backend}.mtx"
        assert main(["assemble", "--config", config_path(cfg), "--backend", backend, "--export-matrix", str(out)]) == 0
        K = scipy.io.mmread(out)
        n = 3 * 4 * 3 * 3
        assert K.shape == (n, n)

    def test_assemble_decompose(self, config_path, tmp_path, capsys):
        cfg = {"layup": {"family": "random", "layers": 6}, "discretization": {"degree": 1, "elements": [2, 2]}}
        assert main(["assemble", "--config", config_path(cfg), "--decompose-angles"]) == 0
        assert "m_bar=6" in capsys.readouterr().out

    def test_assemble_needs_single_cell(self, config_path):
        with pytest.raises(SystemExit):
            main(["assemble", "--config", config_path(SMALL)])

    def test_verify(self, config_path, capsys):
        assert main(["verify", "--config", config_path(SMALL)]) == 0
        out = capsys.readouterr().out
        assert "standard vs voigt_free" in out and out.strip().endswith("OK")

    def test_bad_config(self, config_path):
        with pytest.raises(SystemExit):
            main(["verify", "--config", config_path({"layup": {}})])
