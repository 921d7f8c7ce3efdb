import io
import json
import math

import numpy as np
import pytest

from atomrand import cli
from atomrand.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    FIGURES,
    ConfigError,
    RunConfig,
    build_config,
    cmd_sweep,
    figure_config,
    main,
    make_parser,
    parse_grid,
    read_csv,
    write_csv,
)


def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def cfg_from(argv):
    return build_config(make_parser().parse_args(argv))


def test_minentropy_documented_points(capsys):
    rc, out, _ = run(["minentropy", "--switching", "delta", "--a", str(1 / math.sqrt(2))], capsys)
    rep = json.loads(out)
    assert rc == EXIT_OK and rep["min_entropy"] == 1.0 and rep["valid"]
    rc, out, _ = run(["minentropy", "--a", "0", "--charge", "12.8"], capsys)
    rep = json.loads(out)
    assert rep["purity"] == pytest.approx(0.82, rel=0.02)
    assert rep["min_entropy"] == pytest.approx(0.32, rel=0.02)
    assert rep["valid"] is False
    rc, out, _ = run(["minentropy", "--switching", "delta", "--a", "0", "--charge", "0.3416"], capsys)
    assert json.loads(out)["purity"] == pytest.approx(0.98, rel=0.01)


def test_deltarho_json(capsys):
    rc, out, _ = run(["deltarho", "--switching", "delta", "--a", "0", "--format", "json"], capsys)
    d = json.loads(out)
    assert rc == 0 and d["basis"] == ["g", "e"]
    re_im = np.array(d["delta_rho_re_im"])
    assert re_im[0, 0, 0] == pytest.approx(-re_im[1, 1, 0])


def test_exit_codes(capsys):
    assert run(["sweep", "--sweep", "sigma=lin:1e-3:1e-2:0"], capsys)[0] == EXIT_CONFIG
    assert run(["minentropy", "--a", "1.5"], capsys)[0] == EXIT_CONFIG
    assert run(["minentropy", "--sigma", "-1"], capsys)[0] == EXIT_CONFIG
    assert run(["minentropy", "--switching", "sampled:/nonexistent.csv"], capsys)[0] == EXIT_CONFIG
    assert run(["minentropy", "--model", "udw", "--a", "0.5"], capsys)[0] == EXIT_CONFIG
    assert run(["figure", "fig9"], capsys)[0] == EXIT_CONFIG
    assert run(["minentropy", "--config", "/nonexistent.cfg"], capsys)[0] == EXIT_CONFIG
    rc, _, err = run(["minentropy", "--switching", "sudden", "--sigma", "0.5", "--rel-tol", "1e-15"], capsys)
    assert rc == EXIT_NUMERIC and "numerical failure" in err


def test_parse_grid():
    assert parse_grid("lin:0:1:3") == (0.0, 0.5, 1.0)
    assert parse_grid("log:1e-2:1:3") == pytest.approx((1e-2, 1e-1, 1.0))
    assert parse_grid("em,udw") == ("em", "udw")
    assert parse_grid("0.1, 0.2") == (0.1, 0.2)
    assert parse_grid("lin:0:1:0") == ()
    with pytest.raises(ConfigError):
        parse_grid("lin:0:1")
    with pytest.raises(ConfigError):
        RunConfig(sweeps={"a": (0.1,), "a2": (0.2,)}).validate()
    with pytest.raises(ConfigError):
        RunConfig(sweeps={"spin": (1.0,)}).validate()


def test_grid_order_is_lexicographic():
    cfg = RunConfig(sweeps={"sigma": (1e-3, 2e-3), "a2": (0.0, 1.0)})
    pts = cfg.points()
    assert [(p["sigma"], p["a"]) for p in pts] == [(1e-3, 0.0), (1e-3, 1.0), (2e-3, 0.0), (2e-3, 1.0)]


def test_config_precedence(tmp_path, monkeypatch):
    f = tmp_path / "run.cfg"
    f.write_text("# baseline run\ncharge = 2.0\nsigma = 1e-3   # comment\nsweep.a2 = lin:0:1:3\n")
    cfg = cfg_from(["sweep", "--config", str(f)])
    assert cfg.charge == 2.0 and cfg.sigma == 1e-3 and cfg.sweeps["a2"] == (0.0, 0.5, 1.0)
    cfg = cfg_from(["sweep", "--config", str(f), "--charge", "3"])
    assert cfg.charge == 3.0
    monkeypatch.setenv("ATOMRAND_CONFIG", str(f))
    assert cfg_from(["sweep"]).sigma == 1e-3
    assert cfg_from(["sweep", "--sigma", "2e-3"]).sigma == 2e-3
    bad = tmp_path / "bad.cfg"
    bad.write_text("charge 2\n")
    with pytest.raises(ConfigError):
        cfg_from(["sweep", "--config", str(bad)])
    bad.write_text("colour = red\n")
    with pytest.raises(ConfigError):
        cfg_from(["minentropy", "--config", str(bad)])


def test_validate_config(capsys, tmp_path):
    rc, out, _ = run(["validate-config", "--charge", "0.5"], capsys)
    assert rc == 0 and json.loads(out)["charge"] == 0.5


def _sweep_text(argv):
    cfg = cfg_from(argv)
    buf = io.StringIO()
    rows = cmd_sweep(cfg, buf)
    return buf.getvalue(), rows


def test_csv_round_trip_and_determinism():
    argv = ["sweep", "--switching", "sudden", "--gap", "0", "--sweep", "sigma=log:1e-4:1e-2:3", "--sweep", "a2=0,0.5"]
    text, rows = _sweep_text(argv)
    assert text == _sweep_text(argv)[0]
    meta, back = read_csv(text)
    assert json.loads(meta["sweeps"])["a2"] == [0.0, 0.5]
    header = [l for l in text.splitlines() if not l.startswith("#")][0]
    assert "sigma[eV^-1]" in header and "min_entropy[bits]" in header
    assert len(back) == len(rows) == 6
    for r, b in zip(rows, back):
        for k, v in b.items():
            assert v == (r[k] if k == "model" else float(r[k]))
    # 17 significant digits survive the text form exactly
    data = [l for l in text.splitlines() if not l.startswith("#")][1:]
    assert all(len(l.split(",")) == len(header.split(",")) for l in data)


def test_jobs_do_not_change_output():
    base = ["sweep", "--sweep", "sigma=log:1e-3:1e-2:4", "--sweep", "a2=0,1"]
    data = lambda text: [l for l in text.splitlines() if not l.startswith("#")]
    serial, parallel = _sweep_text(base)[0], _sweep_text(base + ["--jobs", "3"])[0]
    assert "# jobs=3" in parallel
    assert data(serial) == data(parallel)


def test_delta_a_sweep_symmetric():
    _, rows = _sweep_text(["sweep", "--switching", "delta", "--sweep", "a2=lin:0:1:11"])
    h = np.array([r["min_entropy"] for r in rows])
    ht = np.array([r["min_entropy_truncated"] for r in rows])
    assert np.allclose(h, h[::-1], atol=1e-10)
    assert np.allclose(ht, ht[::-1], atol=1e-10)
    assert h[5] == 1.0


def test_gaussian_sigma_sweep_rises_at_ground_state():
    _, rows = _sweep_text(["sweep", "--a", "1", "--sweep", "sigma=log:1e-2:1:15"])
    h = np.array([r["min_entropy"] for r in rows])
    assert np.all(np.diff(h) >= 0)
    assert h[-1] > 0.999999


def test_sampled_profile_through_cli(tmp_path, monkeypatch, capsys):
    # exact brute-force bilinears are slow; the dispatch is what is tested here
    from atomrand import evolution
    from atomrand.switching import SuddenTopHat, time_bilinear

    p = tmp_path / "chi.csv"
    p.write_text("t chi\n0 1\n0.0025 1\n")
    monkeypatch.setattr(evolution, "time_bilinear", lambda prof, cfg=None: time_bilinear(SuddenTopHat(2.5e-3)))
    rc, out, _ = run(["minentropy", "--switching", f"sampled:{p}", "--a", "0.3"], capsys)
    monkeypatch.undo()
    rc2, ref, _ = run(["minentropy", "--switching", "sudden", "--a", "0.3"], capsys)
    assert rc == rc2 == 0
    assert json.loads(out)["min_entropy"] == pytest.approx(json.loads(ref)["min_entropy"], rel=1e-9)


def test_single_point_commands_reject_sweeps(capsys):
    assert run(["minentropy", "--config", "/dev/null"], capsys)[0] == 0
    cfg = RunConfig(sweeps={"a": (0.0,)}).validate()
    with pytest.raises(ConfigError):
        cli.cmd_minentropy(cfg, io.StringIO())
    with pytest.raises(ConfigError):
        cmd_sweep(RunConfig(), io.StringIO())


@pytest.mark.parametrize("name", sorted(FIGURES))
def test_figure_grids(name):
    cfg = figure_config(name).validate()
    assert cfg.points()
    if name.startswith(("fig3",)):
        assert cfg.sigma == 2.5e-3
    if name == "fig1a":
        assert cfg.charge == pytest.approx(8.54e-2)
    if name == "fig1b":
        assert cfg.charge == 5.0
    if name.startswith("fig7"):
        assert cfg.charge == 1e-3 and cfg.sweeps["model"] == ("em", "udw", "udwd") and cfg.a == 1.0


def test_figure_command_writes_dataset(capsys):
    rc, out, _ = run(["figure", "fig5b"], capsys)
    meta, rows = read_csv(out)
    assert rc == 0 and meta["figure"] == "fig5b" and len(rows) == 5 * 36
    assert rows[0]["a2"] == 0.0 and rows[0]["charge"] == 0.0


def test_write_csv_formats_seventeen_digits():
    buf = io.StringIO()
    row = {k: 0.1 for k in cli.SWEEP_AXES} | {k: 1 / 3 for k, _ in cli.OUTPUT_COLUMNS}
    row["model"], row["valid"] = "em", 1
    write_csv([row], {"note": "x"}, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# note=x"
    assert "0.33333333333333331" in lines[2] and lines[2].endswith(",1")
