import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haptofv.grid import Grid, integrate
from haptofv.io import (
    DEFAULTS,
    ConfigError,
    SnapshotError,
    build_initial_state,
    config_hash,
    load_checkpoint,
    parse_config,
    read_series,
    read_snapshot,
    save_checkpoint,
    write_series,
    write_snapshot,
)
from haptofv.model import ValidationError
from haptofv.monitors import MonitorConfig
from haptofv.stepper import State, StepControl, run


def test_empty_document_is_demo():
    cfg = parse_config("")
    assert cfg.grid.dim == 1 and cfg.grid.cells == (256,)
    assert cfg.reg.eps == 0.05 and cfg.reg.theta == 4
    assert cfg.step.dt_max == 1e-3 and cfg.step.t_end == 1.0 and cfg.monitor.cadence == 0.01
    assert cfg.mode == "simulate"
    assert set(cfg.values) == set(DEFAULTS)


def test_comments_and_overrides():
    cfg = parse_config("# comment\n\ngrid.dim = 2  # inline\ngrid.n = 16, 12\nmodel.mu = 0.8\n")
    assert cfg.grid.cells == (16, 12) and cfg.params.mu == 0.8


@pytest.mark.parametrize("text,match", [
    ("model.mu = -1", "positive"),
    ("model.mu = 0", "positive"),
    ("grid.dim = 2\nreg.theta = 2", r"theta > max\{2, n\}"),
    ("init.h.kind = cosine\ninit.h.offset = 0.1\ninit.h.amplitude = 0.4", "assumption"),
    ("init.c1.kind = constant\ninit.c1.value = 0", "assumption"),
    ("model.alpha2.a = 0", "transition rates"),
    ("reg.eps = 1.0", "eps"),
    ("sweep.eps_list = 0.05, 0.1", "decreasing"),
    ("run.mode = dance", "run.mode"),
])
def test_validation_errors(text, match):
    with pytest.raises(ValidationError, match=match):
        parse_config(text)


@pytest.mark.parametrize("text,line", [
    ("grid.dim = 1\nbogus.key = 3", 2),
    ("\n\nmodel.mu 3", 3),
    ("model.mu = fast", 1),
    ("model.mu = 1\nmodel.mu = 2", 2),
    ("reg.theta = 4.5", 1),
])
def test_parse_errors_have_line_numbers(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line and f"line {line}" in str(err.value)


def test_canonical_text_round_trip():
    cfg = parse_config("grid.n = 64\nmodel.alpha1.b = 0.7\nmonitor.abort_on_failure = true\n")
    again = parse_config(cfg.to_text())
    assert again == cfg and config_hash(again) == config_hash(cfg)
    assert config_hash(parse_config("output.dir = elsewhere")) == config_hash(parse_config(""))
    assert config_hash(parse_config("model.mu = 0.51")) != config_hash(parse_config(""))


def test_initial_state_examples():
    cfg = parse_config("\n".join(
        f"init.{sp}.kind = constant\ninit.{sp}.value = {v}"
        for sp, v in (("c1", 0.2), ("c2", 0.1), ("h", 0.5), ("tau", 0.3))))
    s = build_initial_state(cfg)
    for sp, v in (("c1", 0.2), ("c2", 0.1), ("h", 0.5), ("tau", 0.3)):
        assert np.all(getattr(s, sp) == v)
    s = build_initial_state(parse_config("init.h.kind = cosine\ninit.h.offset = 0.5\ninit.h.amplitude = 0.4"))
    assert s.h.min() >= 0.1 - 1e-15 and s.h.min() > 0.0
    demo = build_initial_state(parse_config(""))
    assert integrate(demo.grid, demo.c1) > 0.0 and demo.c1.min() >= 0.01
    assert np.argmax(demo.c1) in (127, 128)


def test_initial_state_2d_neumann():
    s = build_initial_state(parse_config("grid.dim = 2\ngrid.n = 40"))
    assert s.h.shape == (40, 40)
    for u in (s.c2, s.h, s.tau):
        assert np.max(np.abs(u[1] - u[0])) < 0.02 and np.max(np.abs(u[:, -1] - u[:, -2])) < 0.02


@pytest.fixture(scope="module")
def short_run():
    cfg = parse_config("grid.n = 32\nstep.t_end = 0.05")
    s0 = build_initial_state(cfg)
    return cfg, s0, run(cfg.params, cfg.reg, s0, cfg.step, cfg.monitor)


def test_series_round_trip(short_run, tmp_path):
    _, _, res = short_run
    path = tmp_path / "s.csv"
    write_series(res.reports, path)
    lines = path.read_text().splitlines()
    assert len(lines) == len(res.reports) + 1 and lines[0].startswith("t,mass_c1,mass_c2,max_h")
    assert read_series(path) == res.reports
    write_series(res.reports[:1], path)
    assert len(path.read_text().splitlines()) == 2
    with pytest.raises(ValueError):
        write_series([], path)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_snapshot_raw_round_trip(tmp_path_factory, seed, dim):
    rng = np.random.default_rng(seed)
    g = Grid(dim, (5,) * dim, (1.3,) * dim)
    s = State(g, *(rng.random(g.shape) * 10 ** rng.uniform(-300, 300) for _ in range(4)), float(rng.random()))
    path = tmp_path_factory.mktemp("snap") / "x.bin"
    write_snapshot(s, path)
    assert read_snapshot(path).equals(s)


def test_snapshot_csv_round_trip(tmp_path, rng):
    g = Grid(2, (4, 3), (1.0, 2.0))
    s = State(g, *(rng.random(g.shape) for _ in range(4)), 0.3)
    write_snapshot(s, tmp_path / "x.csv")
    back = read_snapshot(tmp_path / "x.csv")
    for a, b in zip(back.fields(), s.fields()):
        assert np.all(np.abs(a - b) <= np.spacing(b))
    assert back.t == s.t and back.grid == s.grid


def test_truncated_snapshots(tmp_path, rng):
    g = Grid.uniform(6)
    s = State(g, *(rng.random(6) for _ in range(4)))
    write_snapshot(s, tmp_path / "x.bin")
    blob = (tmp_path / "x.bin").read_bytes()
    header = blob[: blob.index(b"\n") + 1]
    (tmp_path / "h.bin").write_bytes(header)
    with pytest.raises(SnapshotError, match="missing section 'c1'"):
        read_snapshot(tmp_path / "h.bin")
    (tmp_path / "t.bin").write_bytes(blob[:-8])
    with pytest.raises(SnapshotError, match="'tau' truncated"):
        read_snapshot(tmp_path / "t.bin")
    write_snapshot(s, tmp_path / "x.csv")
    head = (tmp_path / "x.csv").read_text().splitlines()[0] + "\n"
    (tmp_path / "h.csv").write_text(head)
    with pytest.raises(SnapshotError, match="missing section"):
        read_snapshot(tmp_path / "h.csv")
    (tmp_path / "bad.bin").write_bytes(b"garbage\n")
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "bad.bin")


def test_checkpoint_restart_bit_exact(tmp_path):
    cfg = parse_config("grid.n = 48\nstep.t_end = 0.2\nmonitor.cadence = 0.02")
    s0 = build_initial_state(cfg)
    full = run(cfg.params, cfg.reg, s0, cfg.step, cfg.monitor)
    half = run(cfg.params, cfg.reg, s0, cfg.step, cfg.monitor, stop_at=0.1)
    save_checkpoint(tmp_path / "ck.npz", cfg, half.state, half.carry)
    ck = load_checkpoint(tmp_path / "ck.npz", cfg)
    rest = run(cfg.params, cfg.reg, ck.state, cfg.step, cfg.monitor, resume=ck.carry)
    assert rest.state.equals(full.state)
    assert rest.reports == full.reports[len(half.reports):]
    with pytest.raises(SnapshotError, match="different configuration"):
        load_checkpoint(tmp_path / "ck.npz", parse_config("model.mu = 0.7"))


def test_monitored_quantities_survive_serialization(short_run, tmp_path):
    cfg, s0, res = short_run
    write_snapshot(res.state, tmp_path / "s.bin")
    back = read_snapshot(tmp_path / "s.bin")
    a = run(cfg.params, cfg.reg, res.state, StepControl(t_end=res.state.t), MonitorConfig())
    b = run(cfg.params, cfg.reg, back, StepControl(t_end=back.t), MonitorConfig())
    assert a.state.equals(b.state)
    from haptofv.monitors import Tracker

    ra = Tracker(cfg.params, cfg.reg, cfg.monitor, res.state).report(res.state)
    rb = Tracker(cfg.params, cfg.reg, cfg.monitor, back).report(back)
    assert ra == rb
