"""Run configuration, initial data, serialization and checkpoints.

Configuration is a flat ``key = value`` document with dotted prefixes::

    # demo overrides
    grid.dim = 2
    grid.n = 64
    model.mu = 0.8
    init.h.kind = cosine

Blank lines and ``#`` comments are ignored.  Every key has a documented
default (see ``DEFAULTS``); unknown keys are an error.  Lists are comma
separated.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .model import ModelParams, Regularization, TransitionFn, ValidationError
from .monitors import ALL_CHECKS, HARD_CHECKS, MonitorConfig, MonitorReport
from .stepper import SPECIES, State, StepControl


class ConfigError(ValueError):
    """Malformed configuration text (carries the offending line number)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SnapshotError(ValueError):
    """Snapshot or checkpoint file is malformed or truncated."""


MODES = ("simulate", "sweep", "convergence", "weakcheck")
INIT_KINDS = ("constant", "cosine", "gaussian")

# key -> (type tag, default).  Type tags: f float, i int, b bool, s str,
# F float list, I int list, S string list, fa float or "auto".
DEFAULTS: dict = {
    "grid.dim": ("i", 1),
    "grid.n": ("I", (256,)),
    "grid.length": ("F", (1.0,)),
    "model.a1": ("f", 0.05),
    "model.a2": ("f", 0.02),
    "model.b_h": ("f", 0.2),
    "model.b_tau": ("f", 0.2),
    "model.beta": ("f", 1.0),
    "model.gamma1": ("f", 0.5),
    "model.gamma2": ("f", 0.3),
    "model.delta": ("f", 0.4),
    "model.mu": ("f", 0.5),
    "model.sigma": ("f", 0.5),
    "model.alpha1.kind": ("s", "saturating"),
    "model.alpha1.a": ("f", 0.2),
    "model.alpha1.b": ("f", 0.3),
    "model.alpha2.kind": ("s", "constant"),
    "model.alpha2.a": ("f", 0.1),
    "model.alpha2.b": ("f", 0.0),
    "reg.eps": ("f", 0.05),
    "reg.theta": ("i", 4),
    "step.dt_max": ("f", 1e-3),
    "step.cfl_safety": ("f", 0.9),
    "step.t_end": ("f", 1.0),
    "step.floor": ("f", 1e-12),
    "step.solver": ("s", "auto"),
    "step.cg_rtol": ("f", 1e-10),
    "monitor.cadence": ("f", 0.01),
    "monitor.hard_checks": ("S", tuple(sorted(HARD_CHECKS))),
    "monitor.floor": ("f", 1e-12),
    "monitor.ledger_tolerance_factor": ("f", 100.0),
    "monitor.abort_on_failure": ("b", False),
    "save.cadence": ("fa", "auto"),
    "output.dir": ("s", "out"),
    "output.series": ("s", "series.csv"),
    "output.snapshot": ("s", "final.bin"),
    "output.checkpoint": ("s", ""),
    "run.mode": ("s", "simulate"),
    "sweep.eps_list": ("F", (0.1, 0.05, 0.025, 0.0125)),
    "convergence.n_list": ("I", (32, 64, 128, 256)),
    "weak.modes": ("I", (0, 1, 2)),
    "weak.q": ("i", 3),
}

# Demo initial data: a cell cluster in the middle of a cue landscape.
_INIT_DEFAULTS = {
    "c1": dict(kind="gaussian", value=0.2, offset=0.01, amplitude=0.8, mode=(1,), center=(0.5,), width=0.1),
    "c2": dict(kind="cosine", value=0.1, offset=0.1, amplitude=0.05, mode=(1,), center=(0.5,), width=0.1),
    "h": dict(kind="cosine", value=0.5, offset=0.6, amplitude=0.4, mode=(1,), center=(0.5,), width=0.1),
    "tau": dict(kind="cosine", value=0.3, offset=0.3, amplitude=0.2, mode=(1,), center=(0.5,), width=0.1),
}
_INIT_TYPES = dict(kind="s", value="f", offset="f", amplitude="f", mode="I", center="F", width="f")
for _sp, _d in _INIT_DEFAULTS.items():
    for _k, _v in _d.items():
        DEFAULTS[f"init.{_sp}.{_k}"] = (_INIT_TYPES[_k], _v)


@dataclass(frozen=True)
class InitSpec:
    """Initial profile of one species.

    ``constant``: ``value``.  ``cosine``: ``offset + amplitude * prod_i
    cos(mode_i pi x_i / L_i)``.  ``gaussian``: ``offset + amplitude *
    exp(-|x - center|^2 / (2 width^2))`` with ``center`` and ``width`` given
    as fractions of the axis length.
    """

    kind: str = "constant"
    value: float = 0.1
    offset: float = 0.1
    amplitude: float = 0.0
    mode: tuple = (1,)
    center: tuple = (0.5,)
    width: float = 0.1

    def minimum(self) -> float:
        """Lower bound of the profile over the domain."""
        if self.kind == "constant":
            return self.value
        if self.kind == "cosine":
            return self.offset - abs(self.amplitude)
        return self.offset + min(self.amplitude, 0.0)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    series: str = "series.csv"
    snapshot: str = "final.bin"
    checkpoint: str = ""

    def path(self, name: str) -> str:
        return os.path.join(self.dir, name)


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    params: ModelParams
    reg: Regularization
    step: StepControl
    monitor: MonitorConfig
    init: dict
    output: OutputSpec = field(default_factory=OutputSpec)
    save_cadence: float | None = None
    mode: str = "simulate"
    eps_list: tuple = (0.1, 0.05, 0.025, 0.0125)
    n_list: tuple = (32, 64, 128, 256)
    weak_modes: tuple = (0, 1, 2)
    weak_q: int = 3
    values: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def effective_save_cadence(self) -> float:
        """``save.cadence``, or ``min(T/200, dt_max)`` when set to auto.

        Weak residuals use the trapezoid rule over the save times; saving
        at the step size keeps that quadrature error below the
        discretization error being measured.
        """
        if self.save_cadence is not None:
            return self.save_cadence
        return min(self.step.t_end / 200.0, self.step.dt_max) if self.step.t_end > 0 else self.step.dt_max

    def to_text(self) -> str:
        """Canonical ``key = value`` rendering (every key, sorted)."""
        return "".join(f"{k} = {_format_value(DEFAULTS[k][0], v)}\n" for k, v in sorted(self.values.items()))

    def replace_values(self, **changes) -> "RunConfig":
        """Re-parse with dotted keys overridden (underscores for dots: ``reg__eps``)."""
        vals = dict(self.values)
        for k, v in changes.items():
            key = k.replace("__", ".")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}")
            vals[key] = v
        return _build(vals)


def _format_value(tag: str, v) -> str:
    if tag in ("F", "I", "S"):
        return ",".join(_format_value(tag.lower(), x) for x in v)
    if tag in ("f", "fa") and not isinstance(v, str):
        return repr(float(v))
    if tag == "b":
        return "true" if v else "false"
    return str(v)


def _parse_value(tag: str, raw: str, key: str, line: int | None):
    try:
        if tag == "f":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if tag == "fa":
            return "auto" if raw.strip().lower() == "auto" else _parse_value("f", raw, key, line)
        if tag == "i":
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        if tag == "b":
            low = raw.strip().lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError
        if tag == "s":
            return raw.strip()
        if tag in ("F", "I", "S"):
            parts = [x.strip() for x in raw.split(",") if x.strip()]
            return tuple(_parse_value(tag.lower(), x, key, line) for x in parts)
    except (ValueError, OverflowError):
        pass
    kind = {"f": "a finite number", "fa": "a number or 'auto'", "i": "an integer", "b": "a boolean",
            "F": "a list of numbers", "I": "a list of integers", "S": "a list of names"}[tag]
    raise ConfigError(f"{key} must be {kind}, got {raw.strip()!r}", line)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document."""
    values = {k: v for k, (_, v) in DEFAULTS.items()}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, val = (x.strip() for x in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno)
        seen[key] = lineno
        values[key] = _parse_value(DEFAULTS[key][0], val, key, lineno)
    return _build(values)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _per_axis(v: tuple, dim: int, key: str) -> tuple:
    if len(v) == 1:
        return v * dim
    if len(v) != dim:
        raise ValidationError(f"{key} needs 1 or {dim} entries, got {len(v)}")
    return v


def _positive(values: dict, key: str, why: str):
    v = values[key]
    if not v > 0.0:
        raise ValidationError(f"{key} = {v} must be strictly positive ({why})")


def _build(values: dict) -> RunConfig:
    for k, v in values.items():
        tag = DEFAULTS[k][0]
        if isinstance(v, str) and tag not in ("s", "fa"):
            values[k] = _parse_value(tag, v, k, None)
        elif tag in ("F", "I", "S") and not isinstance(v, tuple):
            values[k] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
    dim = values["grid.dim"]
    if dim not in (1, 2):
        raise ValidationError(f"grid.dim must be 1 or 2, got {dim}")
    grid = Grid(dim, _per_axis(values["grid.n"], dim, "grid.n"),
                _per_axis(values["grid.length"], dim, "grid.length"))

    why = "assumption: all model constants are positive"
    for name in ("a1", "a2", "b_h", "b_tau", "beta", "gamma1", "gamma2", "delta", "mu", "sigma"):
        _positive(values, f"model.{name}", why)
    alphas = {}
    for name in ("alpha1", "alpha2"):
        kind = values[f"model.{name}.kind"]
        a, b = values[f"model.{name}.a"], values[f"model.{name}.b"]
        if kind not in ("constant", "saturating"):
            raise ValidationError(f"model.{name}.kind must be constant or saturating, got {kind!r}")
        if not a > 0.0:
            raise ValidationError(
                f"model.{name}.a = {a} must be strictly positive "
                "(assumption: transition rates bounded between positive constants)")
        if b < 0.0:
            raise ValidationError(
                f"model.{name}.b = {b} must be nonnegative "
                "(assumption: transition rates bounded between positive constants)")
        alphas[name] = TransitionFn(kind, a, b if kind == "saturating" else 0.0)
    params = ModelParams(**{k.split(".")[1]: values[k] for k in values
                            if k.startswith("model.") and k.count(".") == 1}, **alphas)
    params.check_assumptions()

    eps = values["reg.eps"]
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"reg.eps = {eps} must lie in (0, 1) (regularization parameter)")
    reg = Regularization(eps, values["reg.theta"]).check_dimension(dim)

    step = StepControl(values["step.dt_max"], values["step.cfl_safety"], values["step.t_end"],
                       values["step.floor"], values["step.solver"], values["step.cg_rtol"])
    if step.solver == "tridiagonal" and dim != 1:
        raise ValidationError("step.solver = tridiagonal is only available for grid.dim = 1")
    unknown = set(values["monitor.hard_checks"]) - ALL_CHECKS
    if unknown:
        raise ValidationError(f"monitor.hard_checks: unknown checks {sorted(unknown)}")
    monitor = MonitorConfig(values["monitor.cadence"], frozenset(values["monitor.hard_checks"]),
                            values["monitor.floor"], values["monitor.ledger_tolerance_factor"],
                            values["monitor.abort_on_failure"])

    init = {}
    for sp in SPECIES:
        kw = {k: values[f"init.{sp}.{k}"] for k in _INIT_TYPES}
        if kw["kind"] not in INIT_KINDS:
            raise ValidationError(f"init.{sp}.kind must be one of {INIT_KINDS}, got {kw['kind']!r}")
        kw["mode"] = _per_axis(kw["mode"], dim, f"init.{sp}.mode")
        kw["center"] = _per_axis(kw["center"], dim, f"init.{sp}.center")
        if any(m < 0 for m in kw["mode"]):
            raise ValidationError(f"init.{sp}.mode must be nonnegative")
        if kw["kind"] == "gaussian" and not kw["width"] > 0.0:
            raise ValidationError(f"init.{sp}.width must be positive")
        spec = InitSpec(**kw)
        if not spec.minimum() > 0.0:
            role = "cue densities h0, tau0" if sp in ("h", "tau") else "cell densities of the regularized problem"
            raise ValidationError(
                f"init.{sp} has minimum {spec.minimum()} but must be strictly positive "
                f"(assumption: initial {role} are positive)")
        init[sp] = spec

    save = values["save.cadence"]
    if save != "auto" and not save > 0.0:
        raise ValidationError(f"save.cadence must be positive or auto, got {save}")
    mode = values["run.mode"]
    if mode not in MODES:
        raise ValidationError(f"run.mode must be one of {MODES}, got {mode!r}")
    eps_list = values["sweep.eps_list"]
    if not eps_list or any(not 0.0 < e < 1.0 for e in eps_list) or any(
            b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValidationError("sweep.eps_list must be strictly decreasing in (0, 1)")
    n_list = values["convergence.n_list"]
    if not n_list or any(n < 3 for n in n_list):
        raise ValidationError("convergence.n_list needs entries >= 3")
    if values["weak.q"] < 2:
        raise ValidationError("weak.q must be >= 2 so test functions vanish smoothly at t = T")
    output = OutputSpec(values["output.dir"], values["output.series"], values["output.snapshot"],
                        values["output.checkpoint"])
    return RunConfig(grid, params, reg, step, monitor, init, output,
                     None if save == "auto" else save, mode, eps_list, n_list,
                     values["weak.modes"], values["weak.q"], dict(values))


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical text, ignoring output locations."""
    text = "".join(line for line in cfg.to_text().splitlines(True) if not line.startswith("output."))
    return hashlib.sha256(text.encode()).hexdigest()


def _profile(grid: Grid, spec: InitSpec) -> np.ndarray:
    X = grid.mesh()
    if spec.kind == "constant":
        return grid.full(spec.value)
    if spec.kind == "cosine":
        wave = np.ones(grid.shape)
        for x, k, L in zip(X, spec.mode, grid.lengths):
            wave = wave * np.cos(k * np.pi * x / L)
        return spec.offset + spec.amplitude * wave
    r2 = np.zeros(grid.shape)
    for x, c, L in zip(X, spec.center, grid.lengths):
        r2 = r2 + ((x - c * L) / L) ** 2
    return spec.offset + spec.amplitude * np.exp(-r2 / (2.0 * spec.width**2))


def build_initial_state(cfg: RunConfig) -> State:
    """Smooth, strictly positive initial data (independent of eps)."""
    s = State(cfg.grid, *(_profile(cfg.grid, cfg.init[sp]) for sp in SPECIES), 0.0)
    return s.validate()


# ---------------------------------------------------------------------------
# monitor series

SERIES_FIELDS = (
    "t", "mass_c1", "mass_c2", "max_h", "max_tau", "M_h", "M_tau", "entropy_F",
    "dissipation_D", "dissipation_integral", "grad_h_sq", "grad_tau_sq",
    "c2_sq_integral", "ledger_residual", "floor_engaged",
)
FLAG_FIELDS = tuple(sorted(ALL_CHECKS))


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def write_series(reports, path) -> None:
    reports = list(reports)
    if not reports:
        raise ValueError("write_series needs at least one report")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(SERIES_FIELDS + FLAG_FIELDS)
            for r in reports:
                row = [_g17(getattr(r, k)) for k in SERIES_FIELDS[:-1]]
                row.append("1" if r.floor_engaged else "0")
                row += ["1" if r.flags.get(k, True) else "0" for k in FLAG_FIELDS]
                w.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write series to {path}: {exc}") from exc


def read_series(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][: len(SERIES_FIELDS)]) != SERIES_FIELDS:
        raise SnapshotError(f"{path}: missing or malformed series header")
    flag_names = rows[0][len(SERIES_FIELDS):]
    out = []
    for row in rows[1:]:
        vals = dict(zip(rows[0], row))
        kw = {k: float(vals[k]) for k in SERIES_FIELDS[:-1]}
        kw["floor_engaged"] = vals["floor_engaged"] == "1"
        kw["flags"] = {k: vals[k] == "1" for k in flag_names}
        out.append(MonitorReport(**kw))
    return out


# ---------------------------------------------------------------------------
# snapshots

_MAGIC = "HAPTOFV-SNAPSHOT 1"


def _header(s: State) -> str:
    g = s.grid
    return (f"{_MAGIC} dim={g.dim} cells={','.join(map(str, g.cells))} "
            f"lengths={','.join(float(x).hex() for x in g.lengths)} t={float(s.t).hex()}")


def _parse_header(line: str, path) -> tuple:
    parts = line.strip().split()
    if " ".join(parts[:2]) != _MAGIC:
        raise SnapshotError(f"{path}: not a snapshot (bad magic)")
    kv = dict(p.split("=", 1) for p in parts[2:])
    try:
        dim = int(kv["dim"])
        cells = tuple(int(x) for x in kv["cells"].split(","))
        lengths = tuple(float.fromhex(x) for x in kv["lengths"].split(","))
        t = float.fromhex(kv["t"])
    except (KeyError, ValueError) as exc:
        raise SnapshotError(f"{path}: malformed header ({exc})") from exc
    return Grid(dim, cells, lengths), t


def _is_csv(path) -> bool:
    return str(path).lower().endswith(".csv")


def write_snapshot(s: State, path) -> None:
    """Self-describing snapshot: raw little-endian doubles, or CSV for ``*.csv``."""
    try:
        if _is_csv(path):
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write("# " + _header(s) + "\n")
                w = csv.writer(fh)
                w.writerow(SPECIES)
                cols = [getattr(s, k).ravel() for k in SPECIES]
                for i in range(s.grid.size):
                    w.writerow([_g17(c[i]) for c in cols])
        else:
            with open(path, "wb") as fh:
                fh.write((_header(s) + "\n").encode())
                for k in SPECIES:
                    fh.write(f"{k}\n".encode())
                    fh.write(np.ascontiguousarray(getattr(s, k), dtype="<f8").tobytes())
    except OSError as exc:
        raise OSError(f"cannot write snapshot to {path}: {exc}") from exc


def read_snapshot(path) -> State:
    if _is_csv(path):
        with open(path, newline="", encoding="utf-8") as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise SnapshotError(f"{path}: missing header section")
            grid, t = _parse_header(first[2:], path)
            rows = list(csv.reader(fh))
        if not rows:
            raise SnapshotError(f"{path}: missing section 'column header'")
        if tuple(rows[0]) != SPECIES:
            raise SnapshotError(f"{path}: column header must be {','.join(SPECIES)}")
        data = rows[1:]
        if len(data) != grid.size:
            raise SnapshotError(f"{path}: missing section 'cell data' (expected {grid.size} rows, found {len(data)})")
        arr = np.array([[float(x) for x in r] for r in data])
        if arr.shape != (grid.size, 4):
            raise SnapshotError(f"{path}: cell data rows must have 4 columns")
        return State(grid, *(arr[:, i].reshape(grid.shape) for i in range(4)), t)
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise SnapshotError(f"{path}: missing header section")
    grid, t = _parse_header(blob[:nl].decode(errors="replace"), path)
    pos, nbytes, fields_ = nl + 1, 8 * grid.size, {}
    for k in SPECIES:
        tag = f"{k}\n".encode()
        if blob[pos:pos + len(tag)] != tag:
            raise SnapshotError(f"{path}: missing section '{k}'")
        pos += len(tag)
        chunk = blob[pos:pos + nbytes]
        if len(chunk) != nbytes:
            raise SnapshotError(f"{path}: section '{k}' truncated ({len(chunk)} of {nbytes} bytes)")
        fields_[k] = np.frombuffer(chunk, dtype="<f8").astype(float).reshape(grid.shape)
        pos += nbytes
    if pos != len(blob):
        raise SnapshotError(f"{path}: {len(blob) - pos} trailing bytes after last section")
    return State(grid, *(fields_[k] for k in SPECIES), t)


# ---------------------------------------------------------------------------
# checkpoints


@dataclass
class Checkpoint:
    config_hash: str
    state: State
    carry: dict


def save_checkpoint(path, cfg: RunConfig, state: State, carry: dict) -> None:
    g = state.grid
    np.savez(
        path,
        config_hash=np.array(config_hash(cfg)),
        dim=np.array(g.dim),
        cells=np.array(g.cells),
        lengths=np.array(g.lengths),
        t=np.array(state.t),
        carry=np.array(json.dumps(carry)),
        **{k: getattr(state, k) for k in SPECIES},
    )


def load_checkpoint(path, cfg: RunConfig | None = None) -> Checkpoint:
    """Load a checkpoint; with ``cfg`` given, its hash must match."""
    try:
        with np.load(path) as z:
            h = str(z["config_hash"])
            grid = Grid(int(z["dim"]), tuple(int(x) for x in z["cells"]), tuple(float(x) for x in z["lengths"]))
            state = State(grid, *(z[k].copy() for k in SPECIES), float(z["t"]))
            carry = json.loads(str(z["carry"]))
    except KeyError as exc:
        raise SnapshotError(f"{path}: checkpoint is missing section {exc}") from exc
    if carry["tracker"].get("last_report") is not None:
        carry["tracker"]["last_report"] = tuple(carry["tracker"]["last_report"])
    if cfg is not None and h != config_hash(cfg):
        raise SnapshotError(f"{path}: checkpoint was written for a different configuration")
    return Checkpoint(h, state, carry)


# ---------------------------------------------------------------------------
# analysis outputs


def write_sweep(result, directory) -> tuple:
    """Write an epsilon sweep as two CSV matrices; returns their paths."""
    os.makedirs(directory, exist_ok=True)
    pair_path = os.path.join(directory, "pairwise_l2.csv")
    res_path = os.path.join(directory, "weak_residuals.csv")
    eps = result.eps_list
    with open(pair_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("eps_a", "eps_b") + SPECIES)
        for j in range(len(eps) - 1):
            w.writerow([_g17(eps[j]), _g17(eps[j + 1])] + [_g17(result.pairwise_l2[k][j]) for k in SPECIES])
    with open(res_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("eps", "equation", "test_function", "residual"))
        for e in eps:
            for eq, vals in result.weak_residuals[e].items():
                for i, r in enumerate(vals):
                    w.writerow([_g17(e), eq, i, _g17(r)])
    return pair_path, res_path


def write_table(path, header, rows) -> None:
    """Small CSV writer for analysis tables (floats at 17 digits)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_g17(x) if isinstance(x, float) else x for x in row])
