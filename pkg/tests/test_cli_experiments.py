import json

import numpy as np
import pytest
from click.testing import CliRunner

from euler_maxwell import cli_experiments
from euler_maxwell.cli_experiments import (
    EXIT_BLOWUP,
    EXIT_CONFIG,
    RECIPES,
    ConfigError,
    ExperimentConfig,
    load_config,
    main,
    make_initial_data,
    parse_config_text,
    run,
    smooth_envelope,
)
from euler_maxwell.euler_maxwell_solver import BlowUpError, read_snapshot
from euler_maxwell.littlewood_paley import block_lp_norms, cutoffs_for
from euler_maxwell.spectral_core import Grid, biot_savart, divergence, lp_norm


def small(tmp_path, name="run", **overrides):
    values = {"n_points": "16", "dt": "0.01", "t_end": "0.05", "seed": "3", "out": str(tmp_path / name)}
    values.update({k: str(v) for k, v in overrides.items()})
    return ExperimentConfig.from_mapping(values)


# --- config --------------------------------------------------------------


def test_config_text_parsing():
    text = """
    # base run
    kind = sweep-c
    n_points = 32   # coarse
    c_values = 4, 8,16
    """
    values = parse_config_text(text)
    assert values == {"kind": "sweep-c", "n_points": "32", "c_values": "4, 8,16"}
    cfg = ExperimentConfig.from_mapping(values | {"seed": "1"})
    assert cfg.n_points == 32 and cfg.c_values == (4.0, 8.0, 16.0)


def test_malformed_line_is_reported():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("n_points = 16\nnot a pair\n")


def test_every_violation_is_named():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_mapping({"n_points": "15", "sigma": "0", "dt": "0.3", "recipe": "random-smooth"})
    text = " ".join(info.value.problems)
    for fragment in ("n_points", "sigma", "dt must divide", "needs a seed"):
        assert fragment in text
    assert len(info.value.problems) == 4


@pytest.mark.parametrize("kind", ["strichartz", "dispersion", "heat"])
def test_measurements_without_initial_data_need_no_seed(kind):
    assert ExperimentConfig.from_mapping({"kind": kind}).seed is None


@pytest.mark.parametrize(
    "values",
    [{"bogus": "1"}, {"n_points": "many"}, {"prepared": "maybe"}, {"kind": "plot"}, {"alphas": "0.7"}],
)
def test_bad_values_raise(values):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(values | {"seed": "1"})


def test_file_then_overrides(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("n_points = 32\nc = 4\nseed = 9\n")
    cfg = load_config(path, {"c": "16"})
    assert (cfg.n_points, cfg.c, cfg.seed) == (32, 16.0, 9)


def test_digest_ignores_output_directory(tmp_path):
    a = small(tmp_path, "a")
    b = small(tmp_path, "b")
    assert a.digest() == b.digest()
    assert small(tmp_path, "a", c=9).digest() != a.digest()


# --- initial data ---------------------------------------------------------


@pytest.mark.parametrize("recipe", RECIPES)
@pytest.mark.parametrize("cutoff", [None, 3])
def test_recipes_are_divergence_free_and_zero_mean(recipe, cutoff):
    grid = Grid(32)
    state = make_initial_data(recipe, grid, seed=5, shell=3, cutoff_index=cutoff)
    assert np.abs(divergence(state.E).spectral).max() < 1e-12
    for f in (state.omega, state.E, state.b):
        assert np.all(np.abs(f.mean) < 1e-15)


@pytest.mark.parametrize("recipe", ["single-shell", "random-smooth", "taylor-green"])
def test_recipes_have_requested_energy(recipe):
    state = make_initial_data(recipe, Grid(32), seed=2, amplitude=0.4, shell=3, prepared=True)
    energy = sum(lp_norm(f, 2) ** 2 for f in (biot_savart(state.omega), state.E, state.b))
    assert energy == pytest.approx(0.16, rel=1e-12)
    assert np.all(state.E.spectral == 0)


def test_single_shell_occupies_three_blocks():
    state = make_initial_data("single-shell", Grid(64), seed=1, shell=4)
    for f in (state.omega, state.E, state.b):
        live = {k for k, v in block_lp_norms(f, 2.0).items() if v > 1e-14}
        assert live <= {3, 4, 5} and 4 in live


def test_random_smooth_seeds_share_the_envelope():
    grid = Grid(128)
    env = smooth_envelope(grid, 1.0, 8.0)
    blocks = cutoffs_for(grid)
    fields = [make_initial_data("random-smooth", grid, seed=s, spectral_width=8.0).b for s in (1, 2)]
    assert not np.allclose(fields[0].spectral, fields[1].spectral)
    # dyadic blocks 3..5 hold hundreds of independent modes each, so sampling noise stays well under 20%
    expected = np.array([np.sum(blocks.block(k) ** 2 * env**2) for k in (3, 4, 5)])
    for f in fields:
        measured = np.array([np.sum(blocks.block(k) ** 2 * np.abs(f.spectral) ** 2) for k in (3, 4, 5)])
        ratio = measured / expected
        assert np.all(np.abs(ratio / ratio.mean() - 1) < 0.2)


def test_unknown_recipe_and_missing_seed():
    with pytest.raises(ValueError):
        make_initial_data("kelvin-helmholtz", Grid(16))
    with pytest.raises(ValueError):
        make_initial_data("random-smooth", Grid(16))


# --- experiments -----------------------------------------------------------


def test_zero_data_simulation(tmp_path):
    cfg = small(tmp_path, recipe="zero")
    assert run(cfg) == 0
    out = tmp_path / "run"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_sha256"] == cfg.digest()
    assert {"numpy", "scipy", "python", "euler_maxwell"} <= set(manifest["versions"])
    assert manifest["wall_time_s"] >= 0
    assert set(manifest["outputs"]) == {"energy.csv"}
    rows = np.loadtxt(out / "energy.csv", delimiter=",", comments="#", skiprows=7)
    assert rows.shape == (6, 6)
    assert np.all(rows[:, 1:] == 0)


def test_snapshots_written_when_asked(tmp_path):
    cfg = small(tmp_path, snapshots="yes", every=5)
    assert run(cfg) == 0
    snaps = sorted((tmp_path / "run" / "run-simulate").glob("snap-*.npz"))
    assert [p.name for p in snaps] == ["snap-000000.npz", "snap-000005.npz"]
    state, header = read_snapshot(snaps[-1])
    assert header["time"] == pytest.approx(0.05)


@pytest.mark.parametrize("threads", [1, 3])
def test_speed_sweep_is_byte_identical(tmp_path, threads):
    first = small(tmp_path, "first", kind="sweep-c", c_values="8,16,32")
    again = small(tmp_path, "again", kind="sweep-c", c_values="8,16,32", threads=threads)
    assert run(first) == 0 and run(again) == 0
    assert (tmp_path / "first" / "sweep_c.csv").read_bytes() == (tmp_path / "again" / "sweep_c.csv").read_bytes()


def test_strichartz_frequency_fit(tmp_path):
    cfg = small(tmp_path, kind="strichartz", n_points=256)
    assert run(cfg) == 0
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    law = summary["frequency_law"]
    assert law["slope"] == pytest.approx(0.75, abs=0.08)
    assert law["passed"] is True
    assert law["residual"] < 0.1


def test_dispersion_experiment(tmp_path):
    cfg = small(tmp_path, kind="dispersion", alphas="0", times="10,20,40,80")
    assert run(cfg) == 0
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary["alpha=0.0"]["slope"] == pytest.approx(-0.5, abs=0.05)


def test_heat_experiment(tmp_path):
    cfg = small(tmp_path, kind="heat", sizes="16,32", seeds=3)
    assert run(cfg) == 0
    text = (tmp_path / "run" / "heat.csv").read_text()
    assert text.startswith("# N: grid points per side")
    assert len([line for line in text.splitlines() if not line.startswith("#")]) == 1 + 6


def test_besov_check_and_energy_report(tmp_path):
    assert run(small(tmp_path, "besov", kind="besov-check", recipe="single-shell", shell=2)) == 0
    summary = json.loads((tmp_path / "besov" / "summary.json").read_text())
    # data lives in blocks 1..3, so raising the index by 1/2 multiplies the norm by 2^{k/2} for some k in [1, 3]
    gain = summary["b"]["B^0.5_(2,2)"] / summary["b"]["B^0.0_(2,2)"]
    assert 2**0.5 <= gain <= 2**1.5
    table = (tmp_path / "besov" / "besov.csv").read_text().splitlines()
    live = {int(line.split(",")[1]) for line in table if line.startswith("b,") and float(line.split(",")[2]) > 1e-14}
    assert live <= {1, 2, 3}
    assert run(small(tmp_path, "report", kind="energy-report", recipe="zero")) == 0
    rows = (tmp_path / "report" / "inequalities.csv").read_text().splitlines()
    assert sum(1 for line in rows if not line.startswith("#")) == 1 + 6


def test_blow_up_keeps_last_good_state(tmp_path, monkeypatch):
    def explode(state, params, dt, t_end, **kwargs):
        raise BlowUpError("non-finite vorticity", last_good=state)

    monkeypatch.setattr(cli_experiments, "simulate", explode)
    cfg = small(tmp_path)
    assert run(cfg) == EXIT_BLOWUP
    out = tmp_path / "run"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "blow-up"
    assert (out / summary["last_good_snapshot"]).exists()
    assert json.loads((out / "manifest.json").read_text())["exit_status"] == EXIT_BLOWUP


# --- command line -----------------------------------------------------------


def test_help_lists_every_experiment():
    result = CliRunner().invoke(main, ["--help"])
    assert result.exit_code == 0
    for kind in cli_experiments.KINDS:
        assert kind in result.output


def test_cli_run_and_config_errors(tmp_path):
    cfg = tmp_path / "zero.cfg"
    cfg.write_text("recipe = zero\nn_points = 16\nt_end = 0.02\n")
    runner = CliRunner()
    ok = runner.invoke(main, ["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--threads", "2"])
    assert ok.exit_code == 0, ok.output
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["threads"] == 2
    bad = runner.invoke(main, ["simulate", "--set", "recipe=random-smooth", "--out", str(tmp_path / "b")])
    assert bad.exit_code == EXIT_CONFIG
    assert "needs a seed" in bad.output
    assert not (tmp_path / "b").exists()
