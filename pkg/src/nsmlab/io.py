"""Binary snapshots, CSV diagnostics and the INI-style experiment configuration."""
from __future__ import annotations

import configparser
import csv
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .spectral import Grid, SpectralField, make_grid
from .systems import PhysParams, PlasmaState, System
from .timestepping import StepperConfig

MAGIC = b"NSMS"
VERSION = 1
HEADER = struct.Struct("<4sIIIIdd")  # magic, version, d, N, field_count, L, t
FIELD_ORDER = ("v", "E", "B")


class SnapshotError(ValueError):
    pass


class ConfigError(ValueError):
    def __init__(self, message, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


# ----------------------------------------------------------------------------
# snapshots

def snapshot_size(d: int, N: int, field_count: int) -> int:
    return HEADER.size + field_count * (8 + 3 * 16 * N**d)


def encode_snapshot(state: PlasmaState) -> bytes:
    g = state.grid
    fields = state.fields()
    parts = [HEADER.pack(MAGIC, VERSION, g.d, g.N, len(fields), g.L, float(state.t))]
    for name in FIELD_ORDER:
        if name in fields:
            parts.append(name.encode("ascii").ljust(8, b" "))
            parts.append(np.ascontiguousarray(fields[name].data, dtype="<c16").tobytes())
    return b"".join(parts)


def decode_snapshot(buf: bytes) -> PlasmaState:
    if len(buf) < HEADER.size:
        raise SnapshotError("truncated snapshot header")
    magic, version, d, N, nf, L, t = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    g = make_grid(d, N, L)
    if len(buf) != snapshot_size(d, N, nf):
        raise SnapshotError(f"snapshot size {len(buf)} does not match header ({snapshot_size(d, N, nf)})")
    off = HEADER.size
    count = 3 * N**d
    out: Dict[str, SpectralField] = {}
    for _ in range(nf):
        name = buf[off:off + 8].decode("ascii").strip()
        off += 8
        data = np.frombuffer(buf, dtype="<c16", count=count, offset=off).reshape((3,) + g.shape).astype(complex)
        off += 16 * count
        if name not in FIELD_ORDER:
            raise SnapshotError(f"unknown field name {name!r}")
        out[name] = SpectralField(g, data, divfree=name != "E")
    if "B" not in out:
        raise SnapshotError("snapshot has no magnetic field")
    return PlasmaState(t, out.get("v"), out["B"], out.get("E"))


def save_snapshot(state: PlasmaState, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(state))
    return path


def load_snapshot(path) -> PlasmaState:
    return decode_snapshot(Path(path).read_bytes())


# ----------------------------------------------------------------------------
# CSV diagnostics

def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_diagnostics_csv(records, path) -> Path:
    from .diagnostics import CSV_COLUMNS
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(x) for x in r.row()])
    return path


def read_diagnostics_csv(path) -> List[dict]:
    with Path(path).open(newline="") as fh:
        return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in csv.DictReader(fh)]


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clean = _finite_or_null(json.loads(json.dumps(report, default=_json_default)))
    path.write_text(json.dumps(clean, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _finite_or_null(o):
    """Strict JSON: NaN and infinities become null."""
    if isinstance(o, float) and not np.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _finite_or_null(v) for k, v in o.items()}
    if isinstance(o, list):
        return [_finite_or_null(v) for v in o]
    return o


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# ----------------------------------------------------------------------------
# configuration

SCENARIOS = ("E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "CUSTOM")
SWEEP_KEYS = ("nu", "c", "sigma", "n", "amplitude", "kappa")


@dataclass
class ExperimentConfig:
    scenario: str = "CUSTOM"
    d: int = 2
    N: int = 32
    L: float = 2 * np.pi
    params: PhysParams = field(default_factory=PhysParams)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    initial: dict = field(default_factory=lambda: {"kind": "random"})
    sweep_key: Optional[str] = None
    sweep: List[float] = field(default_factory=list)
    out_dir: Optional[Path] = None
    seed: int = 0
    options: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return make_grid(self.d, self.N, self.L)


def _key_lines(text: str) -> Dict[tuple, int]:
    """Line number of every (section, key) pair, for error messages."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
        elif "=" in s and not s.startswith(("#", ";")):
            out[(section, s.split("=", 1)[0].strip().lower())] = no
    return out


def _number_list(text: str) -> List[float]:
    return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def parse_config(text: str, out_dir=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(str(exc).splitlines()[-1].strip(), line) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc), getattr(exc, "lineno", None)) from None
    lines = _key_lines(text)
    known = {"grid", "params", "stepper", "experiment", "sweep"}
    for sec in cp.sections():
        if sec.lower() not in known:
            raise ConfigError(f"unknown section [{sec}]")

    def get(sec, key, conv, default):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {sec}.{key}: {raw!r} ({exc})", lines.get((sec, key))) from None

    def boolean(raw):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")

    scenario = get("experiment", "scenario", lambda s: s.strip().upper(), "CUSTOM")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}", lines.get(("experiment", "scenario")))
    try:
        from .scenarios import preset
        cfg = preset(scenario)
    except KeyError:
        cfg = ExperimentConfig(scenario=scenario)

    cfg.d = get("grid", "d", int, cfg.d)
    cfg.N = get("grid", "n", int, cfg.N)
    cfg.L = get("grid", "l", float, cfg.L)
    try:
        cfg.grid
    except ValueError as exc:
        raise ConfigError(str(exc), lines.get(("grid", "n")) or lines.get(("grid", "d"))) from None

    pkw = {}
    for key in ("nu", "sigma", "c", "kappa", "alpha", "beta"):
        if cp.has_option("params", key):
            pkw[key] = get("params", key, float, None)
    if cp.has_option("params", "b_star"):
        pkw["B_star"] = get("params", "b_star", _number_list, None)
    if cp.has_option("params", "system"):
        pkw["system"] = get("params", "system", lambda s: System(s.strip().upper()), None)
    if cp.has_option("params", "nonlinear"):
        pkw["nonlinear"] = get("params", "nonlinear", boolean, True)
    try:
        cfg.params = cfg.params.with_(**pkw)
    except ValueError as exc:
        raise ConfigError(f"invalid physical parameters: {exc}", _first_line(lines, "params")) from None

    st = cfg.stepper
    skw = dict(dt=get("stepper", "dt", float, st.dt), cfl=get("stepper", "cfl", float, st.cfl),
               t_end=get("stepper", "t_end", float, st.t_end),
               record_every=get("stepper", "record_every", int, st.record_every),
               scheme=get("stepper", "scheme", str.strip, st.scheme),
               dt_min=get("stepper", "dt_min", float, st.dt_min))
    try:
        cfg.stepper = StepperConfig(**skw, store_states=st.store_states)
    except ValueError as exc:
        raise ConfigError(f"invalid stepper settings: {exc}", _first_line(lines, "stepper")) from None

    cfg.seed = get("experiment", "seed", int, cfg.seed)
    if cp.has_section("experiment"):
        for key, raw in cp.items("experiment"):
            if key in ("scenario", "seed"):
                continue
            cfg.initial[key] = _scalar(raw)

    if cp.has_section("sweep"):
        items = cp.items("sweep")
        if len(items) != 1:
            raise ConfigError("[sweep] takes exactly one parameter", _first_line(lines, "sweep"))
        key, raw = items[0]
        if key not in SWEEP_KEYS:
            raise ConfigError(f"cannot sweep {key!r}", lines.get(("sweep", key)))
        vals = get("sweep", key, _number_list, [])
        floor_ok = (lambda v: v >= 0) if key == "kappa" else (lambda v: v > 0)
        if not vals or not all(floor_ok(v) for v in vals):
            raise ConfigError("sweep values must be positive (kappa may be 0)", lines.get(("sweep", key)))
        if vals != sorted(vals) and vals != sorted(vals, reverse=True):
            raise ConfigError("sweep values must be sorted", lines.get(("sweep", key)))
        cfg.sweep_key, cfg.sweep = key, vals
    if out_dir is not None:
        cfg.out_dir = Path(out_dir)
    return cfg


def _first_line(lines, section):
    nos = [n for (s, _), n in lines.items() if s == section]
    return min(nos) if nos else None


def _scalar(raw: str):
    raw = raw.strip()
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    return raw


def load_config(path, out_dir=None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, out_dir)
