"""Line-oriented ``key = value`` experiment configuration.

    # comment
    model.d = 1
    model.n = 2
    model.h = 1.0
    model.L_list = 8, 12, 16, 24
    model.interaction = hard_sphere
    disorder.distribution = uniform
    disorder.seed = 7
    disorder.R = 100

Keys are dot-scoped, list values are comma separated, unknown and duplicate
keys are rejected.  Every error names the key, and the line when there is one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from anderson_mp.disorder import DISTRIBUTIONS, DisorderSpec
from anderson_mp.errors import ConfigError
from anderson_mp.lattice import DEFAULT_DIMENSION_CAP, NORMS, InteractionKernel, LatticeModel

_REQUIRED = object()


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not a finite number")
    return value


def _list(item: Callable[[str], Any]) -> Callable[[str], list]:
    def parse(text: str) -> list:
        parts = [p.strip() for p in text.split(",")]
        if not parts or any(p == "" for p in parts):
            raise ValueError("empty list element")
        return [item(p) for p in parts]

    return parse


def _pair(text: str) -> tuple[float, float]:
    values = _list(_float)(text)
    if len(values) != 2:
        raise ValueError("expected two comma-separated numbers")
    return values[0], values[1]


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _steps(text: str) -> tuple[tuple[float, float], ...]:
    steps = []
    for part in text.split(","):
        r, sep, v = part.partition(":")
        if not sep:
            raise ValueError("table steps are written r_upper:value")
        steps.append((_float(r), _float(v)))
    return tuple(steps)


def _positive(v) -> bool:
    return all(x > 0 for x in v) if isinstance(v, (list, tuple)) else v > 0


def _non_negative(v) -> bool:
    return all(x >= 0 for x in v) if isinstance(v, (list, tuple)) else v >= 0


# key -> (parser, default, constraint, constraint description)
SCHEMA: dict[str, tuple] = {
    "model.d": (_int, _REQUIRED, _positive, "a positive integer"),
    "model.n": (_int, _REQUIRED, _positive, "a positive integer"),
    "model.h": (_float, _REQUIRED, _positive, "positive"),
    "model.L_list": (_list(_float), None, _positive, "positive lengths"),
    "model.m_list": (_list(_int), None, _positive, "positive integers"),
    "model.interaction": (_choice("none", "hard_sphere", "yukawa", "table"), "none", None, ""),
    "model.u0": (_float, 1.0, _non_negative, "non-negative"),
    "model.r0": (_float, 1.0, _non_negative, "non-negative"),
    "model.screening": (_float, 1.0, _positive, "positive"),
    "model.table": (_steps, (), None, ""),
    "model.norm": (_choice(*NORMS), "max", None, ""),
    "model.dimension_cap": (_int, DEFAULT_DIMENSION_CAP, _positive, "positive"),
    "disorder.distribution": (_choice(*DISTRIBUTIONS), _REQUIRED, None, ""),
    "disorder.v_max": (_float, 1.0, _non_negative, "non-negative"),
    "disorder.p": (_float, 0.5, lambda v: 0 <= v <= 1, "in [0, 1]"),
    "disorder.rate": (_float, 1.0, _positive, "positive"),
    "disorder.cap": (_float, 10.0, _non_negative, "non-negative"),
    "disorder.seed": (_int, _REQUIRED, lambda v: 0 <= v < 2**64, "in [0, 2^64)"),
    "disorder.R": (_int, _REQUIRED, _non_negative, "a non-negative integer"),
    "task.E_min": (_float, None, None, ""),
    "task.E_max": (_float, None, None, ""),
    "task.E_points": (_int, None, _positive, "positive"),
    "task.fit_window": (_pair, None, lambda v: v[0] < v[1], "an ascending pair"),
    "task.fit_ntilde": (_pair, (1e-6, 1e-1), lambda v: 0 < v[0] < v[1] < 1, "0 < lo < hi < 1"),
    "task.fit_L": (_float, None, _positive, "positive"),
    "task.E0": (_float, 0.0, None, ""),
    "task.E_probe": (_float, None, None, ""),
    "task.probe_ntilde": (_pair, (1e-3, 1e-2), lambda v: 0 < v[0] < v[1] < 1, "0 < lo < hi < 1"),
    "task.tol": (_float, 1e-9, _positive, "positive"),
    "task.realization": (_int, 0, _non_negative, "non-negative"),
    "task.weyl_k": (_int, 1, _positive, "positive"),
    "task.weyl_m_list": (_list(_int), [4, 8, 16], _positive, "positive integers"),
    "output.dir": (str, ".", None, ""),
    "output.prefix": (str, "", None, ""),
}


@dataclass(frozen=True)
class TaskConfig:
    E_min: float | None = None
    E_max: float | None = None
    E_points: int | None = None
    fit_window: tuple[float, float] | None = None
    fit_ntilde: tuple[float, float] = (1e-6, 1e-1)
    fit_L: float | None = None
    E0: float = 0.0
    E_probe: float | None = None
    probe_ntilde: tuple[float, float] = (1e-3, 1e-2)
    tol: float = 1e-9
    realization: int = 0
    weyl_k: int = 1
    weyl_m_list: tuple[int, ...] = (4, 8, 16)

    def energy_grid(self, purpose: str) -> np.ndarray:
        for key in ("E_min", "E_max", "E_points"):
            if getattr(self, key) is None:
                raise ConfigError(f"task.{key} is required for {purpose}", key=f"task.{key}")
        return np.linspace(self.E_min, self.E_max, self.E_points)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "."
    prefix: str = ""

    def path(self, name: str) -> Path:
        return Path(self.dir) / f"{self.prefix}{name}"


@dataclass(frozen=True)
class ExperimentConfig:
    model: LatticeModel
    m_list: tuple[int, ...]
    disorder: DisorderSpec
    task: TaskConfig
    output: OutputConfig
    values: dict = field(default_factory=dict, compare=False)

    @property
    def L_list(self) -> list[float]:
        return [m * self.model.h for m in self.m_list]


def _split_line(raw: str):
    text = raw.split("#", 1)[0].strip()
    if not text:
        return None
    key, sep, value = text.partition("=")
    if not sep:
        raise ValueError("expected 'key = value'")
    return key.strip(), value.strip()


def _read_entries(lines: Iterable[str], source: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(lines, start=1):
        try:
            parsed = _split_line(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}", line=lineno) from None
        if parsed is None:
            continue
        key, value = parsed
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", key=key, line=lineno)
        if key in entries:
            first = entries[key][1]
            raise ConfigError(
                f"{source}: duplicate key {key!r} on lines {first} and {lineno}", key=key, line=lineno
            )
        entries[key] = (value, lineno)
    return entries


def _coerce(entries: dict[str, tuple[str, int | None]], source: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for key, (parser, default, check, desc) in SCHEMA.items():
        if key not in entries:
            if default is _REQUIRED:
                raise ConfigError(f"{source}: missing mandatory key {key!r}", key=key)
            values[key] = default
            continue
        text, lineno = entries[key]
        where = f"{source}:{lineno}" if lineno else source
        try:
            value = parser(text)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value {text!r} for {key}: {exc}", key=key, line=lineno) from None
        if check is not None and not check(value):
            raise ConfigError(f"{where}: {key} must be {desc}, got {text!r}", key=key, line=lineno)
        values[key] = value
    return values


def _build(values: dict[str, Any]) -> ExperimentConfig:
    def fail(key: str, msg: str):
        raise ConfigError(f"{key}: {msg}", key=key)

    kind = values["model.interaction"]
    try:
        if kind == "none":
            kernel = InteractionKernel.none()
        else:
            kernel = InteractionKernel(
                kind,
                u0=values["model.u0"],
                r0=values["model.r0"],
                screening=values["model.screening"],
                table=values["model.table"],
            )
    except ValueError as exc:
        fail("model.interaction", str(exc))
    try:
        model = LatticeModel(
            d=values["model.d"],
            n=values["model.n"],
            h=values["model.h"],
            kernel=kernel,
            norm=values["model.norm"],
            dimension_cap=values["model.dimension_cap"],
        )
    except ValueError as exc:
        fail("model.n", str(exc))

    L_list, m_list = values["model.L_list"], values["model.m_list"]
    if (L_list is None) == (m_list is None):
        fail("model.L_list", "exactly one of model.L_list and model.m_list must be given")
    if L_list is not None:
        try:
            m_list = [model.sites_for_length(L) for L in L_list]
        except ValueError as exc:
            fail("model.L_list", str(exc))
    for m in m_list:
        dim = m ** (model.n * model.d)
        if dim > model.dimension_cap:
            key = "model.L_list" if L_list is not None else "model.m_list"
            fail(key, f"m={m} gives dimension m^(n*d) = {dim} above model.dimension_cap")

    disorder = DisorderSpec(
        distribution=values["disorder.distribution"],
        v_max=values["disorder.v_max"],
        p=values["disorder.p"],
        rate=values["disorder.rate"],
        cap=values["disorder.cap"],
        seed=values["disorder.seed"],
        realizations=values["disorder.R"],
    )
    task = TaskConfig(
        **{k.split(".", 1)[1]: values[k] for k in SCHEMA if k.startswith("task.")}
        | {"weyl_m_list": tuple(values["task.weyl_m_list"])}
    )
    if task.E_min is not None and task.E_max is not None and task.E_min >= task.E_max:
        fail("task.E_max", "must exceed task.E_min")
    if values["disorder.R"] and task.realization >= values["disorder.R"]:
        fail("task.realization", "must be below disorder.R")
    output = OutputConfig(values["output.dir"], values["output.prefix"])
    return ExperimentConfig(model, tuple(m_list), disorder, task, output, values)


def parse_overrides(overrides: Iterable[str]) -> dict[str, str]:
    """``["key=value", ...]`` from repeated ``--set`` flags; later ones win."""
    out: dict[str, str] = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        if key not in SCHEMA:
            raise ConfigError(f"override names unknown key {key!r}", key=key)
        out[key] = value.strip()
    return out


def parse_text(text: str, overrides: dict[str, str] | None = None, source: str = "<config>") -> ExperimentConfig:
    entries: dict[str, tuple[str, int | None]] = dict(_read_entries(text.splitlines(), source))
    for key, value in (overrides or {}).items():
        entries[key] = (value, None)
    return _build(_coerce(entries, source))


def parse_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Read and fully validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_text(text, overrides, source=str(path))
