"""Field files, constants sidecars, key=value configs and CSV reports.

Field file layout: b"LEFD", uint32 n (little-endian), then n*n float64
little-endian nodal values in row-major order.
"""
import json
import math
import os
import struct
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .spectral import ScalarField, make_grid

MAGIC = b"LEFD"
HEADER = struct.Struct("<4sI")
OUTPUT_ROOT_ENV = "LANELAB_OUTPUT_ROOT"

COMMANDS = ("ground-state", "maximize", "evolve", "stability", "spectrum", "verify")
PERT_KINDS = ("multiplicative", "random_smooth", "area_preserving")


class FormatError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class ValidationError(ValueError):
    def __init__(self, field_name, msg):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


# --- binary fields ---------------------------------------------------------

def write_field(path, f):
    path = Path(path)
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, f.grid.n))
        fh.write(payload)


def read_field(path):
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, n = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    expected = HEADER.size + 8 * n * n
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for n={n}, found {len(data)}")
    vals = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(n, n)
    try:
        return ScalarField(make_grid(n), vals.astype(float))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


# --- numbers ----------------------------------------------------------------

def fmt(x):
    """17 significant digits: lossless for float64."""
    return format(float(x), ".17g")


def write_constants(path, solution, config=None):
    lines = [
        f"p={fmt(solution.p)}",
        f"c_p={fmt(solution.c_p)}",
        f"mu_p={fmt(solution.mu_p)}",
        f"M_p={fmt(solution.M_p)}",
        f"residual={fmt(solution.residual)}",
        f"iterations={solution.iterations}",
    ]
    if config:
        lines += [f"config.{k}={v}" for k, v in config.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_constants(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        key, _, val = line.partition("=")
        if key.startswith("config."):
            continue
        out[key] = int(val) if key == "iterations" else float(val)
    return out


# --- configuration ------------------------------------------------------

@dataclass
class ExperimentConfig:
    command: str = "ground-state"
    p: float = 2.0
    n: int = 64
    tol: float = 1e-10
    max_iter: int = 2000
    cfl: float = 0.5
    t_end: float | None = None  # None: 10 eddy turnover times
    delta: float = 0.04
    norm_s: list = field(default_factory=lambda: [2.0])
    seed: int = 0
    pert_kind: str = "random_smooth"
    constrain_to_Sp: bool = False
    output_dir: str = ""

    def __post_init__(self):
        if not self.output_dir:
            self.output_dir = os.environ.get(OUTPUT_ROOT_ENV, "out")

    def as_dict(self):
        return asdict(self)

    def echo(self):
        """Canonical key=value rendering, used inside every output artifact."""
        return {k: _render(v) for k, v in self.as_dict().items()}


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, list):
        return ",".join(_render(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def _to_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _to_float_or_none(text):
    return None if text.strip().lower() in ("none", "") else float(text)


_CONVERTERS = {
    "command": str.strip,
    "p": float,
    "n": int,
    "tol": float,
    "max_iter": int,
    "cfl": float,
    "t_end": _to_float_or_none,
    "delta": float,
    "norm_s": lambda t: [float(x) for x in t.split(",") if x.strip()],
    "seed": int,
    "pert_kind": str.strip,
    "constrain_to_Sp": _to_bool,
    "output_dir": str.strip,
}
_ALIASES = {"s": "norm_s", "pert": "pert_kind", "sp_constrain": "constrain_to_Sp",
            "out": "output_dir", "t-end": "t_end", "max-iter": "max_iter"}


def validate(cfg):
    """Range checks; raises ValidationError naming the first bad field."""
    if cfg.command not in COMMANDS:
        raise ValidationError("command", f"must be one of {COMMANDS}")
    if cfg.command in ("ground-state", "verify") and not cfg.p > 1:
        raise ValidationError("p", f"command {cfg.command} needs p > 1")
    if not (cfg.p > 0 and math.isfinite(cfg.p)):
        raise ValidationError("p", "must be positive and finite")
    if cfg.n < 4:
        raise ValidationError("n", "must be at least 4")
    if not cfg.tol > 0:
        raise ValidationError("tol", "must be positive")
    if cfg.max_iter < 1:
        raise ValidationError("max_iter", "must be at least 1")
    if not 0 < cfg.cfl <= 1:
        raise ValidationError("cfl", "must lie in (0, 1]")
    if cfg.t_end is not None and not cfg.t_end > 0:
        raise ValidationError("t_end", "must be positive")
    if not cfg.delta > 0:
        raise ValidationError("delta", "must be positive")
    if not cfg.norm_s or any(not s >= 1 for s in cfg.norm_s):
        raise ValidationError("norm_s", "every s must be >= 1")
    if cfg.pert_kind not in PERT_KINDS:
        raise ValidationError("pert_kind", f"must be one of {PERT_KINDS}")
    return cfg


def parse_config(text, **overrides):
    """Parse a key=value document (``#`` comments allowed) into a validated config."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected key=value, got {raw!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        key = _ALIASES.get(key, key.replace("-", "_"))
        if key not in _CONVERTERS:
            raise ParseError(lineno, f"unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](val)
        except ValueError as exc:
            raise ParseError(lineno, f"bad value for {key}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return validate(ExperimentConfig(**values))


def config_keys():
    return [f.name for f in fields(ExperimentConfig)]


# --- CSV --------------------------------------------------------------------

def _header_lines(config):
    return [f"# {line}" for line in json.dumps(config, sort_keys=True, indent=1).splitlines()]


def write_csv(path, columns, config=None):
    """Write ``columns`` ((name, series) pairs) with an optional # JSON header."""
    path = Path(path)
    names = [name for name, _ in columns]
    lengths = {len(series) for _, series in columns}
    if len(lengths) > 1:
        raise ValueError(f"{path}: columns differ in length {sorted(lengths)}")
    lines = _header_lines(config) if config is not None else []
    lines.append(",".join(names))
    for row in zip(*(series for _, series in columns)):
        lines.append(",".join(fmt(x) for x in row))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_report(report, path):
    """CSV of a StabilityReport; incomplete runs are written too (see header)."""
    write_csv(path, report.columns(), report.config)


def read_csv(path):
    """Returns (config dict or None, column names, dict name -> list of floats)."""
    lines = Path(path).read_text().splitlines()
    head = [ln[2:] for ln in lines if ln.startswith("# ")]
    body = [ln for ln in lines if not ln.startswith("#")]
    config = json.loads("\n".join(head)) if head else None
    names = body[0].split(",")
    cols = {name: [] for name in names}
    for ln in body[1:]:
        for name, val in zip(names, ln.split(",")):
            cols[name].append(float(val))
    return config, names, cols
