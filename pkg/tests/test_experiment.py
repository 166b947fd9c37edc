import math
import shutil
from pathlib import Path

import numpy as np
import pytest

from quantgt.cli import main
from quantgt.engine import CSV_COLUMNS, ExperimentTrace
from quantgt.experiment import OUTPUT_ENV, ConfigError, load_config, run_experiment
from quantgt.graphnet import assign_weights, gen_exponential, write_edgelist
from quantgt.report import compare_report, format_table, log_slope, moving_average, svg_chart

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """
[experiment]
name = {name}
iterations = {iterations}
stride = 10
seed = 1

[cost]
model = academic
seed = 3

[graph]
kind = exponential

[schedule]
period = 100
mode = reweight
seed = 5

[nonlinearity]
kind = {kind}
rho = 1/16

[step]
alpha = {alpha}
"""


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv(OUTPUT_ENV, str(out))
    return out


def write_cfg(tmp_path, name="small", iterations=300, kind="log", alpha="auto"):
    path = tmp_path / f"{name}.ini"
    path.write_text(SMALL.format(name=name, iterations=iterations, kind=kind, alpha=alpha))
    return path


# --- config loading ----------------------------------------------------------------


def test_all_bundled_configs_validate(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    paths = sorted(CONFIGS.glob("*.ini"))
    assert len(paths) >= 10
    for p in paths:
        cfg = load_config(p)
        assert cfg.name == p.stem
        assert cfg.output_dir == tmp_path


def test_config_defaults_and_fractions(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    assert cfg.nonlinearity.rho == 1 / 16 and cfg.alpha is None and cfg.safety == 0.5
    assert cfg.n == 16 and cfg.m == 1 and cfg.graph.scale == 0.5 and cfg.b_graph == "same"
    assert cfg.output_dir == tmp_path / "results"


def test_invalid_config_lists_every_bad_field(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(
        "[experiment]\nname = bad\niterations = -3\nstride = x\n"
        "[cost]\nmodel = svm\n[graph]\nkind = star\nscale = 1.5\n"
        "[nonlinearity]\nkind = log\nrho = 0\n[step]\nalpha = -1\n[extra]\nfoo = 1\n"
    )
    with pytest.raises(ConfigError) as err:
        load_config(path)
    fields = {e.split(":")[0] for e in err.value.errors}
    assert {"experiment.iterations", "experiment.stride", "cost.model", "graph.kind", "graph.scale",
            "nonlinearity.rho", "step.alpha", "extra"} <= fields


def test_config_cross_field_checks(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[experiment]\nname = x\n[cost]\nn = 12\n[graph]\nkind = exponential\n"
                    "b_graph = independent\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    text = str(err.value)
    assert "power of two" in text and "switching schedule" in text


def test_mnist_config_needs_divisible_total(tmp_path):
    path = tmp_path / "m.ini"
    path.write_text("[experiment]\nname = m\n[cost]\nmodel = mnist\ndata_dir = d\ntotal = 30\n")
    with pytest.raises(ConfigError, match="divisible"):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.ini")


# --- running -----------------------------------------------------------------------


def test_run_writes_csv_and_svg(tmp_path, outdir):
    tr = run_experiment(write_cfg(tmp_path, iterations=200))
    csv, svg = outdir / "small.csv", outdir / "small.svg"
    assert csv.is_file() and svg.is_file()
    text = csv.read_text()
    assert "# Fstar=" in text and "# grad_norm=" in text
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert body[0] == ",".join(CSV_COLUMNS)
    assert all(math.isfinite(float(v)) for row in body[1:] for v in row.split(","))
    assert svg.read_text().startswith("<svg") and "<polyline" in svg.read_text()
    assert tr.oracle_converged and ExperimentTrace.from_csv(csv).rows == tr.rows


def test_bundled_exponential_config_regression(outdir):
    tr = run_experiment(CONFIGS / "academic_exponential_logq.ini")
    # frozen from a seeded run of this config
    assert tr.alpha == pytest.approx(0.0029238758804300902, rel=1e-12)
    assert tr.rows[0].gap == pytest.approx(0.11370562913208984, rel=1e-12)
    assert tr.rows[1].gap == pytest.approx(0.054718050998460284, rel=1e-9)
    row500 = next(r for r in tr.rows if r.k == 500)
    assert row500.gap == pytest.approx(8.4149297222343567e-20, rel=1e-6)
    assert tr.final_gap <= 1e-30
    ma = moving_average(tr.gap, 10)
    start = int(np.searchsorted(tr.k, 500))
    assert np.all(np.diff(ma[start:]) <= 0)


def test_bundled_config_is_byte_reproducible(tmp_path, monkeypatch):
    texts = []
    for run in ("a", "b"):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / run))
        run_experiment(CONFIGS / "academic_er_logq.ini")
        texts.append((tmp_path / run / "academic_er_logq.csv").read_bytes())
    assert texts[0] == texts[1]


def test_bundled_uniform_vs_log_pair(outdir):
    log = run_experiment(CONFIGS / "academic_log_rho16.ini")
    uni = run_experiment(CONFIGS / "academic_uniform_rho16.ini")
    assert log.final_gap <= uni.final_gap
    assert list(log.k) == list(uni.k)


def test_divergent_run_still_writes_partial_trace(tmp_path, outdir):
    with pytest.raises(Exception) as err:
        run_experiment(write_cfg(tmp_path, name="boom", iterations=5000, alpha="5"))
    assert type(err.value).__name__ == "DivergenceError"
    assert (outdir / "boom.csv").is_file()


# --- reports -----------------------------------------------------------------------


def test_log_slope_and_moving_average():
    k = np.arange(0, 100, 10)
    assert log_slope(k, 10.0 ** (-0.1 * k)) == pytest.approx(-0.1, rel=1e-12)
    assert math.isnan(log_slope([0, 1], [0.0, -1.0]))
    np.testing.assert_allclose(moving_average([1, 2, 3, 4], 2), [1.5, 2.5, 3.5])
    assert moving_average([1, 2], 3).size == 0


def test_compare_exponential_beats_er(outdir, tmp_path):
    run_experiment(CONFIGS / "academic_exponential_logq.ini")
    run_experiment(CONFIGS / "academic_er_logq.ini")
    rows = compare_report([outdir / "academic_exponential_logq.csv", outdir / "academic_er_logq.csv"],
                          out_svg=tmp_path / "cmp.svg")
    assert rows[0].final_gap < rows[1].final_gap
    svg = (tmp_path / "cmp.svg").read_text()
    assert svg.count("<polyline") == 2 and "academic_er_logq" in svg
    assert "final_gap" in format_table(rows)


def test_compare_arity_and_grid_errors(tmp_path, outdir):
    run_experiment(write_cfg(tmp_path, name="a", iterations=100))
    run_experiment(write_cfg(tmp_path, name="b", iterations=150))
    with pytest.raises(ValueError, match="at least two"):
        compare_report([outdir / "a.csv"])
    with pytest.raises(ValueError, match="k-grid"):
        compare_report([outdir / "a.csv", outdir / "b.csv"])


def test_compare_identical_traces(tmp_path, outdir):
    run_experiment(write_cfg(tmp_path, name="a", iterations=100))
    shutil.copy(outdir / "a.csv", outdir / "a2.csv")
    r1, r2 = compare_report([outdir / "a.csv", outdir / "a2.csv"])
    assert (r1.final_gap, r1.slope, r1.iterations) == (r2.final_gap, r2.slope, r2.iterations)
    assert r1.slope - r2.slope == 0


def test_svg_chart_skips_nonpositive_values():
    svg = svg_chart([("a", [0, 1, 2], [1.0, 0.0, 1e-3])])
    pts = svg.split('points="')[1].split('"')[0].split()
    assert len(pts) == 2 and "1e-3" in svg


# --- command line --------------------------------------------------------------------


def test_cli_validate(capsys):
    assert main(["validate", str(CONFIGS / "academic_identity.ini")]) == 0
    assert "ok" in capsys.readouterr().out


def test_cli_validate_rejects_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[experiment]\nname = bad\niterations = zero\n")
    assert main(["validate", str(path)]) != 0
    assert "experiment.iterations" in capsys.readouterr().err


def test_cli_missing_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.ini")]) != 0
    assert "not found" in capsys.readouterr().err


def test_cli_run_and_compare(tmp_path, outdir, capsys):
    a, b = write_cfg(tmp_path, name="a"), write_cfg(tmp_path, name="b", kind="uniform")
    assert main(["run", str(a), str(b)]) == 0
    out = tmp_path / "cmp.svg"
    assert main(["compare", str(outdir / "a.csv"), str(outdir / "b.csv"), "--out", str(out)]) == 0
    assert out.is_file() and "log10_slope" in capsys.readouterr().out


def test_cli_compare_single_trace_fails(tmp_path, outdir, capsys):
    main(["run", str(write_cfg(tmp_path, name="a", iterations=20))])
    assert main(["compare", str(outdir / "a.csv")]) != 0


def test_cli_run_divergence_exit_status(tmp_path, outdir):
    assert main(["run", str(write_cfg(tmp_path, name="boom", iterations=5000, alpha="5"))]) == 3


def test_cli_spectrum(tmp_path, capsys):
    path = tmp_path / "g.txt"
    write_edgelist(assign_weights(gen_exponential(16), 0.5), path)
    assert main(["spectrum", str(path), "--L", "24", "--K", str(math.exp(1 / 256))]) == 0
    out = capsys.readouterr().out.split()
    assert float(out[out.index("lambda2") + 1]) == pytest.approx(0.25, abs=1e-12)
    assert float(out[out.index("alpha_bar") + 1]) == pytest.approx(0.25 / (24 * math.exp(1 / 256)), rel=1e-10)


def test_cli_spectrum_bad_file(tmp_path):
    (tmp_path / "g.txt").write_text("garbage\n")
    assert main(["spectrum", str(tmp_path / "g.txt")]) != 0
