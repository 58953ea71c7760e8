"""Line-oriented run configuration.

One ``key = value`` pair per line, keys grouped by dotted prefixes::

    norm.family = ellipsoidal
    norm.matrix = 4 0 0; 0 1 0; 0 0 1
    body.kind = wulff
    body.r0 = 2
    grid = 96x192
    p_list = 2, 2.5
    flow.t_end = 2

Blank lines and ``#`` comments are ignored.  :func:`serialize` writes every
key, so ``parse(serialize(c)) == c``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import AnicapError, ConfigError
from .flow import FlowControls
from .norm import NormSpec
from .surface import RadialSpec


@dataclass(frozen=True)
class Outputs:
    report_path: str = "report.json"
    trace_path: str = "trace.csv"
    mesh_dir: str = "mesh"
    formats: tuple[str, ...] = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    norm: NormSpec = field(default_factory=NormSpec)
    body: RadialSpec = field(default_factory=RadialSpec)
    grid: tuple[int, int] = (96, 192)
    grid_order: int = 8
    p_list: tuple[float, ...] = (2.0,)
    q: float | None = None
    flow: FlowControls = field(default_factory=lambda: FlowControls(t_end=2.0))
    outputs: Outputs = field(default_factory=Outputs)

    def __post_init__(self):
        if not self.p_list:
            raise ConfigError("p_list must not be empty")
        for p in self.p_list:
            if not 1 < p < 3:
                raise ConfigError(f"p = {p} outside (1, 3)")
        if len(self.grid) != 2:
            raise ConfigError("grid must be n_theta x n_phi")
        nt, nph = self.grid
        if nt < 16 or nph < 32 or nph % 2:
            raise ConfigError(f"grid {nt}x{nph}: need n_theta >= 16 and even n_phi >= 32")
        if self.grid_order not in (4, 6, 8):
            raise ConfigError("grid.order must be 4, 6 or 8")


# -- value codecs --------------------------------------------------------------

def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _fmt_floats(vals):
    return ", ".join(repr(float(v)) for v in vals)


def _matrix(text):
    if text.strip().lower() in ("", "none"):
        return None
    rows = [r for r in text.split(";") if r.strip()]
    M = tuple(_floats(r) for r in rows)
    if len(M) == 1:
        # a single row is read as a diagonal
        d = M[0]
        return tuple(tuple(d[i] if i == j else 0.0 for j in range(len(d))) for i in range(len(d)))
    return M


def _fmt_matrix(M):
    if M is None:
        return "none"
    return "; ".join(" ".join(repr(float(v)) for v in row) for row in M)


def _grid(text):
    try:
        a, b = text.lower().split("x")
        return (int(a), int(b))
    except ValueError:
        raise ConfigError(f"grid must look like 96x192, got {text!r}") from None


def _harmonics(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, coef = item.partition(":")
        out.append((name.strip(), float(coef) if coef else 1.0))
    return tuple(out)


def _fmt_harmonics(h):
    return ", ".join(f"{n}:{c!r}" for n, c in h)


def _opt_float(text):
    return None if text.strip().lower() == "none" else float(text)


def _strs(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


_S = str
_KEYS = {
    # key: (section, attribute, parse, format)
    "norm.family": ("norm", "family", _S, _S),
    "norm.dimension": ("norm", "dimension", int, str),
    "norm.matrix": ("norm", "matrix", _matrix, _fmt_matrix),
    "norm.amplitude": ("norm", "amplitude", float, repr),
    "body.kind": ("body", "kind", _S, _S),
    "body.radius": ("body", "radius", float, repr),
    "body.r0": ("body", "r0", float, repr),
    "body.axes": ("body", "axes", _floats, _fmt_floats),
    "body.epsilon": ("body", "epsilon", float, repr),
    "body.harmonics": ("body", "harmonics", _harmonics, _fmt_harmonics),
    "body.center": ("body", "center", _floats, _fmt_floats),
    "grid": (None, "grid", _grid, lambda g: f"{g[0]}x{g[1]}"),
    "grid.order": (None, "grid_order", int, str),
    "p_list": (None, "p_list", _floats, _fmt_floats),
    "q": (None, "q", _opt_float, lambda v: "none" if v is None else repr(v)),
    "flow.t_end": ("flow", "t_end", float, repr),
    "flow.cfl": ("flow", "cfl", float, repr),
    "flow.max_steps": ("flow", "max_steps", int, str),
    "flow.snapshot_every": ("flow", "snapshot_every", float, repr),
    "flow.min_HF": ("flow", "min_HF", float, repr),
    "outputs.report_path": ("outputs", "report_path", _S, _S),
    "outputs.trace_path": ("outputs", "trace_path", _S, _S),
    "outputs.mesh_dir": ("outputs", "mesh_dir", _S, _S),
    "outputs.formats": ("outputs", "formats", _strs, lambda v: ", ".join(v)),
}
_SECTION_TYPES = {"norm": NormSpec, "body": RadialSpec, "flow": FlowControls, "outputs": Outputs}


def parse(text: str) -> RunConfig:
    """Parse configuration text.

    Raises
    ------
    ConfigError
        On syntax errors, unknown keys, bad values or violated invariants.
    """
    sections: dict = {name: {} for name in _SECTION_TYPES}
    top: dict = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        section, attr, conv, _ = _KEYS[key]
        try:
            val = conv(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        (top if section is None else sections[section])[attr] = val
    try:
        built = {}
        for name, cls in _SECTION_TYPES.items():
            kw = sections[name]
            if name == "flow":
                kw = {"t_end": 2.0, **kw}
            built[name] = cls(**kw)
        return RunConfig(**built, **top)
    except ConfigError:
        raise
    except (AnicapError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def serialize(config: RunConfig) -> str:
    lines = []
    for key, (section, attr, _, fmt) in _KEYS.items():
        obj = config if section is None else getattr(config, section)
        lines.append(f"{key} = {fmt(getattr(obj, attr))}")
    return "\n".join(lines) + "\n"


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse(text)


def with_overrides(config: RunConfig, grid=None, p_list=None) -> RunConfig:
    kw = {}
    if grid is not None:
        kw["grid"] = _grid(grid) if isinstance(grid, str) else tuple(grid)
    if p_list is not None:
        kw["p_list"] = _floats(p_list) if isinstance(p_list, str) else tuple(map(float, p_list))
    return replace(config, **kw) if kw else config


__all__ = ["Outputs", "RunConfig", "parse", "serialize", "load", "with_overrides"]
