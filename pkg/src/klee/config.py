"""Run configuration and its flat ``key = value`` file format."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .core import DEFAULT_DEGREE, DEFAULT_NODES
from .sections import GOLDEN_WIDTH, RADIUS_TOL

FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and, for files, the line."""


@dataclass(frozen=True)
class RunConfig:
    dims: tuple[int, ...] = (3, 4, 5)
    epsilons: tuple[float, ...] = (0.02, 0.05, 0.1)
    degree: int = DEFAULT_DEGREE
    nodes: int = DEFAULT_NODES
    mc_samples: int = 0
    seed: int = 0
    tol_m: float | None = None  # None: 1e-6 * kappa_{n-1} per dimension
    tol_solver: float = RADIUS_TOL
    tol_maximizer: float = GOLDEN_WIDTH
    refine: bool = False
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "svg")
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.dims:
            raise ConfigError("dims: at least one dimension is required")
        for n in self.dims:
            if int(n) != n or n < 3:
                raise ConfigError(f"dims: n must be an integer >= 3, got {n!r}")
        if not self.epsilons:
            raise ConfigError("epsilons: at least one value is required")
        for e in self.epsilons:
            # eps = 0 is the unit ball and is accepted as a reference cell
            if not 0 <= e < 1:
                raise ConfigError(f"epsilons: eps must lie in [0, 1), got {e!r}")
        if self.degree < 2 or self.degree % 2:
            raise ConfigError(f"degree: N must be a positive even integer, got {self.degree!r}")
        if self.nodes < 16:
            raise ConfigError(f"nodes: m must be >= 16, got {self.nodes!r}")
        if self.mc_samples < 0 or 0 < self.mc_samples < 1000:
            raise ConfigError(f"mc_samples: use 0 or at least 1000, got {self.mc_samples!r}")
        if self.seed < 0:
            raise ConfigError(f"seed: must be non-negative, got {self.seed!r}")
        if self.tol_m is not None and not self.tol_m > 0:
            raise ConfigError(f"tol_m: must be positive, got {self.tol_m!r}")
        # the solvers run at fixed tolerances; the keys exist so reports can record them
        if self.tol_solver != RADIUS_TOL:
            raise ConfigError(f"tol_solver: fixed at {RADIUS_TOL!r}, got {self.tol_solver!r}")
        if self.tol_maximizer != GOLDEN_WIDTH:
            raise ConfigError(f"tol_maximizer: fixed at {GOLDEN_WIDTH!r}, got {self.tol_maximizer!r}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad or not self.formats:
            raise ConfigError(f"formats: choose from {', '.join(FORMATS)}, got {list(self.formats)!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs: must be >= 1, got {self.jobs!r}")

    @property
    def cells(self) -> list[tuple[int, float]]:
        return [(n, e) for n in self.dims for e in self.epsilons]

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_text(self) -> str:
        lines = ["# klee run configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _as_bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.lower() in ("none", "") else float(text)


def _list_of(conv):
    def parse(text: str) -> tuple:
        return tuple(conv(x.strip()) for x in text.split(",") if x.strip())

    return parse


_PARSERS = {
    "dims": _list_of(int),
    "epsilons": _list_of(float),
    "degree": int,
    "nodes": int,
    "mc_samples": int,
    "seed": int,
    "tol_m": _optional_float,
    "tol_solver": float,
    "tol_maximizer": float,
    "refine": _as_bool,
    "out_dir": str,
    "formats": _list_of(str),
    "jobs": int,
}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


__all__ = ["ConfigError", "FORMATS", "RunConfig", "load_config", "parse_config"]
