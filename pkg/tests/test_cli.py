import hashlib
import json
import math
import os

import pytest

from hypgrowth import cli
from hypgrowth.cli import ConfigError, _parse_grid, main
from hypgrowth.gadgets import gadget_names, slab_gadget_names
from hypgrowth.graphs import GenerationCapError, TilingFamily, tiling_graph
from hypgrowth.oracle import CapExceededError


@pytest.fixture(autouse=True)
def no_ambient_cache(monkeypatch):
    # graph generators fall back to this env var; keep tests hermetic
    monkeypatch.delenv("HYPGROWTH_CACHE", raising=False)


def write_ini(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def gp_scan_ini(tmp_path, out, task="gp-scan", p="0.2", extra=""):
    return write_ini(
        tmp_path,
        f"""[task]
name = {task}
r_grid = 0.5,1.0
hr_samples = 2
{extra}
[percolation]
p = {p}
trials = 32
seed = 5

[graph]
family = tiling
p = 5
q = 4

[output]
dir = {out}
""",
        name=f"{task}.ini",
    )


def recursion_ini(tmp_path, out):
    return write_ini(
        tmp_path,
        f"""[task]
name = recursion
model = squaring
x1 = 0.1
p1 = 2.0
r1 = 1.0

[percolation]
seed = 3

[output]
dir = {out}
""",
        name="rec.ini",
    )


def out_bytes(out):
    return {name: (out / name).read_bytes() for name in os.listdir(out)}


class TestGridParsing:
    def test_comma_list(self):
        assert _parse_grid("0.1, 0.2,0.3", "g") == (0.1, 0.2, 0.3)

    def test_range_inclusive_stop(self):
        assert _parse_grid("0.25:1.0:0.25", "g") == (0.25, 0.5, 0.75, 1.0)

    def test_range_stop_not_on_step(self):
        assert _parse_grid("1:4:2", "g") == (1.0, 3.0)

    def test_bad_values(self):
        for text in ("a,b", "1:2", "1:2:0", ""):
            with pytest.raises(ConfigError):
                _parse_grid(text, "g")


class TestParseErrors:
    def test_missing_config_file(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.ini")
        assert main(["validate", "--config", missing]) == 2
        assert "nope.ini" in capsys.readouterr().err

    def test_p_out_of_range(self, tmp_path, capsys):
        cfg = gp_scan_ini(tmp_path, tmp_path / "o", p="1.5")
        assert main(["validate", "--config", cfg]) == 2
        assert "[0, 1]" in capsys.readouterr().err

    def test_unknown_task(self, tmp_path):
        cfg = write_ini(tmp_path, "[task]\nname = frobnicate\n")
        assert main(["validate", "--config", cfg]) == 2

    def test_missing_graph_file_names_path(self, tmp_path, capsys):
        cfg = write_ini(
            tmp_path,
            f"""[task]
name = boundary-point
x = 0.5
n_max = 1

[percolation]
p = 0.2
trials = 8

[graph]
file = {tmp_path}/ghost.json
""",
        )
        assert main(["validate", "--config", cfg]) == 2
        assert "ghost.json" in capsys.readouterr().err

    def test_non_hyperbolic_tiling(self, tmp_path):
        cfg = write_ini(
            tmp_path,
            """[task]
name = gp-scan
r_grid = 0.5

[percolation]
p = 0.2
trials = 8

[graph]
family = tiling
p = 4
q = 4
""",
        )
        assert main(["validate", "--config", cfg]) == 2

    def test_missing_required_option(self, tmp_path, capsys):
        cfg = write_ini(
            tmp_path,
            """[task]
name = gp-scan

[percolation]
p = 0.2
trials = 8

[graph]
family = tiling
p = 5
q = 4
""",
        )
        assert main(["validate", "--config", cfg]) == 2
        assert "r_grid" in capsys.readouterr().err

    def test_bad_p_grid_entry(self, tmp_path):
        cfg = write_ini(
            tmp_path,
            """[task]
name = pc-estimate
size_threshold = 4

[percolation]
p_grid = 0.3,oops
trials = 8

[graph]
family = lattice
d = 3
""",
        )
        assert main(["validate", "--config", cfg]) == 2

    def test_zero_trials_rejected(self, tmp_path):
        cfg = write_ini(
            tmp_path,
            """[task]
name = gp-scan
r_grid = 0.5

[percolation]
p = 0.2
trials = 0

[graph]
family = tiling
p = 5
q = 4
""",
        )
        assert main(["validate", "--config", cfg]) == 2


class TestValidate:
    def test_echo_and_guard_band_radius(self, tmp_path, capsys):
        out = tmp_path / "never"
        cfg = write_ini(
            tmp_path,
            f"""[task]
name = ends-survey
deltas = 0.25,0.5
r = 1.0
k_max = 1

[percolation]
p = 0.1
trials = 16
seed = 2

[graph]
family = tiling
p = 5
q = 4

[output]
dir = {out}
""",
        )
        assert main(["validate", "--config", cfg]) == 0
        text = capsys.readouterr().out
        assert "task = ends-survey" in text
        line = next(l for l in text.splitlines() if l.startswith("guard_band_radius"))
        got = float(line.split("=")[1])
        want = 1.0 + 0.5 + 2.0 * TilingFamily(5, 4).edge_length
        assert got == pytest.approx(want, rel=1e-12)
        assert not out.exists()

    def test_seed_override_echo(self, tmp_path, capsys):
        cfg = gp_scan_ini(tmp_path, tmp_path / "o")
        assert main(["validate", "--config", cfg, "--seed", "99"]) == 0
        assert "seed = 99" in capsys.readouterr().out


class TestRecursionRun:
    def test_outputs_and_rerun_identical(self, tmp_path):
        out = tmp_path / "out"
        cfg = recursion_ini(tmp_path, out)
        assert main(["run", "--config", cfg]) == 0
        first = out_bytes(out)
        assert set(first) == {"recursion.csv", "manifest.json"}
        lines = first["recursion.csv"].decode().strip().split("\n")
        assert lines[1] == "i,p_i,r_i,g_i"
        assert len(lines) >= 2 + 4
        row1 = lines[2].split(",")
        assert float(row1[1]) == 2.0
        assert float(row1[3]) == 0.1
        row2 = lines[3].split(",")
        assert float(row2[1]) == pytest.approx(2.0 - 0.3 * (1 - math.log(0.1)))

        assert main(["run", "--config", cfg]) == 0
        assert out_bytes(out) == first

    def test_manifest_shape(self, tmp_path):
        out = tmp_path / "out"
        cfg = recursion_ini(tmp_path, out)
        assert main(["run", "--config", cfg]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest) == {"config", "outputs"}
        assert manifest["config"]["task"] == "recursion"
        assert manifest["config"]["guard_band_radius"] == 0.0
        for name, digest in manifest["outputs"].items():
            assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest

    def test_out_flag_override(self, tmp_path):
        out = tmp_path / "cfgout"
        other = tmp_path / "flagout"
        cfg = recursion_ini(tmp_path, out)
        assert main(["run", "--config", cfg, "--out", str(other)]) == 0
        assert other.exists() and not out.exists()


class TestGpScan:
    def test_tiny_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = gp_scan_ini(tmp_path, out)
        assert main(["run", "--config", cfg]) == 0
        lines = (out / "gp_curve.csv").read_text().strip().split("\n")
        assert lines[0].startswith("# graph=")
        assert "seed=5" in lines[0] and "trials=32" in lines[0]
        assert lines[1] == "p,r,estimate,ci,hr_id"
        assert len(lines) == 2 + 2
        for row in lines[2:]:
            p, r, est, ci, cell = row.split(",")
            assert 0.0 <= float(est) <= 1.0
            assert float(ci) >= 0.0

    def test_gnuplot_emission(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_ini(
            tmp_path,
            f"""[task]
name = gp-scan
r_grid = 0.5,1.0
hr_samples = 2

[percolation]
p = 0.2
trials = 32
seed = 5

[graph]
family = tiling
p = 5
q = 4

[output]
dir = {out}
gnuplot = true
""",
        )
        assert main(["run", "--config", cfg]) == 0
        script = (out / "gp_curve.gp").read_text()
        assert "gp_curve.csv" in script
        manifest = json.loads((out / "manifest.json").read_text())
        assert "gp_curve.gp" in manifest["outputs"]

    def test_rerun_identical_bytes(self, tmp_path):
        out = tmp_path / "out"
        cfg = gp_scan_ini(tmp_path, out)
        assert main(["run", "--config", cfg]) == 0
        first = out_bytes(out)
        assert main(["run", "--config", cfg]) == 0
        assert out_bytes(out) == first

    def test_guard_band_exit(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = gp_scan_ini(tmp_path, out, extra="delta = 0.9")
        assert main(["run", "--config", cfg]) == 3
        assert "guard band" in capsys.readouterr().err

    def test_cache_env_populated_and_stable(self, tmp_path, monkeypatch):
        cache = tmp_path / "cache"
        monkeypatch.setenv("HYPGROWTH_CACHE", str(cache))
        out = tmp_path / "out"
        cfg = gp_scan_ini(tmp_path, out)
        assert main(["run", "--config", cfg]) == 0
        first = (out / "gp_curve.csv").read_bytes()
        assert cache.exists() and len(os.listdir(cache)) >= 1
        assert main(["run", "--config", cfg]) == 0
        assert (out / "gp_curve.csv").read_bytes() == first

    def test_decay_fit_emits_fit_file(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_ini(
            tmp_path,
            f"""[task]
name = decay-fit
r_grid = 0.25:1.5:0.25
hr_samples = 2

[percolation]
p = 0.3
trials = 128
seed = 6

[graph]
family = tiling
p = 5
q = 4

[output]
dir = {out}
""",
        )
        assert main(["run", "--config", cfg]) == 0
        lines = (out / "decay_fit.csv").read_text().strip().split("\n")
        assert lines[1] == "psi,r_squared,alpha,log_intercept,n_points"
        assert len(lines) == 3


class TestOracleVerify:
    def test_thread_count_does_not_change_bytes(self, tmp_path):
        cfg_text = """[task]
name = oracle-verify
bk_pairs = 2

[percolation]
seed = 1

[output]
dir = {out}
"""
        out1 = tmp_path / "o1"
        out4 = tmp_path / "o4"
        cfg1 = write_ini(tmp_path, cfg_text.format(out=out1), name="t1.ini")
        cfg4 = write_ini(tmp_path, cfg_text.format(out=out4), name="t4.ini")
        assert main(["run", "--config", cfg1, "--threads", "1"]) == 0
        assert main(["run", "--config", cfg4, "--threads", "4"]) == 0
        assert (out1 / "checks.csv").read_bytes() == (out4 / "checks.csv").read_bytes()

        lines = (out1 / "checks.csv").read_text().strip().split("\n")
        assert lines[1] == "check,instance,status,margin"
        kinds = {row.split(",")[0] for row in lines[2:]}
        assert kinds == {"russo", "bk", "saus", "russo-integral"}
        assert all(row.split(",")[2] == "ok" for row in lines[2:])


class TestPcEstimate:
    def test_tiny_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_ini(
            tmp_path,
            f"""[task]
name = pc-estimate
size_threshold = 4

[percolation]
p_grid = 0.3,0.45,0.55,0.7
trials = 160
seed = 11

[graph]
family = lattice
d = 3

[output]
dir = {out}
""",
        )
        assert main(["run", "--config", cfg]) == 0
        assert set(os.listdir(out)) == {"pc.csv", "pc_summary.csv", "manifest.json"}
        summary = (out / "pc_summary.csv").read_text().strip().split("\n")
        lo, hi, est = (float(x) for x in summary[2].split(",")[2:])
        assert 0.3 <= lo <= est <= hi <= 0.7


class TestBoundaryPoint:
    def make_graph_file(self, tmp_path, radius):
        path = tmp_path / "ball.json"
        tiling_graph(5, 4, radius).save(str(path))
        return path

    def boundary_ini(self, tmp_path, out, graph, n_max):
        return write_ini(
            tmp_path,
            f"""[task]
name = boundary-point
x = 0.5
n_max = {n_max}

[percolation]
p = 0.2
trials = 32
seed = 7

[graph]
file = {graph}

[output]
dir = {out}
""",
        )

    def test_tiny_run(self, tmp_path):
        graph = self.make_graph_file(tmp_path, 2.5)
        out = tmp_path / "out"
        cfg = self.boundary_ini(tmp_path, out, graph, n_max=1)
        assert main(["run", "--config", cfg]) == 0
        lines = (out / "boundary.csv").read_text().strip().split("\n")
        assert lines[1] == "n,radius,frequency,ci"
        assert len(lines) == 3
        assert 0.0 <= float(lines[2].split(",")[2]) <= 1.0

    def test_shallow_graph_guard(self, tmp_path):
        graph = self.make_graph_file(tmp_path, 2.5)
        out = tmp_path / "out"
        cfg = self.boundary_ini(tmp_path, out, graph, n_max=4)
        assert main(["run", "--config", cfg]) == 3


class TestEndsSurveyRun:
    def test_tiny_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_ini(
            tmp_path,
            f"""[task]
name = ends-survey
deltas = 0.25
r = 0.5
k_max = 1
fit_trials = 1024
fit_hr_samples = 2

[percolation]
p = 0.15
trials = 16
seed = 4

[graph]
family = tiling
p = 5
q = 4

[output]
dir = {out}
""",
        )
        assert main(["run", "--config", cfg]) == 0
        lines = (out / "survey.csv").read_text().strip().split("\n")
        assert lines[1] == "p,delta,k,frequency,ci,bound_from_fit"
        assert len(lines) == 2 + 2


class TestExitCodes:
    def raiser(self, exc):
        def fail(cfg, threads):
            raise exc

        return fail

    def test_oracle_cap_maps_to_4(self, tmp_path, monkeypatch, capsys):
        cfg = recursion_ini(tmp_path, tmp_path / "o")
        monkeypatch.setitem(
            cli._RUNNERS, "recursion", self.raiser(CapExceededError("unit cap"))
        )
        assert main(["run", "--config", cfg]) == 4
        assert "cap exceeded" in capsys.readouterr().err

    def test_generation_cap_maps_to_3(self, tmp_path, monkeypatch):
        cfg = recursion_ini(tmp_path, tmp_path / "o")
        monkeypatch.setitem(
            cli._RUNNERS, "recursion", self.raiser(GenerationCapError("vertex cap"))
        )
        assert main(["run", "--config", cfg]) == 3

    def test_value_error_maps_to_1(self, tmp_path, monkeypatch, capsys):
        cfg = recursion_ini(tmp_path, tmp_path / "o")
        monkeypatch.setitem(
            cli._RUNNERS, "recursion", self.raiser(ValueError("boom"))
        )
        assert main(["run", "--config", cfg]) == 1
        assert "boom" in capsys.readouterr().err


class TestListGadgets:
    def test_lists_everything(self, capsys):
        assert main(["list-gadgets"]) == 0
        text = capsys.readouterr().out
        for name in gadget_names():
            assert name in text
        for name in slab_gadget_names():
            assert name in text
        assert "units=" in text
