"""TOML analysis configuration with strict key validation."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .criteria import CHECKS, CriteriaSettings
from .quadrature import QuadratureRule
from .weights import DecoupledWeight, Weight, WeightError, builtin, builtin_names, decoupled

ANALYSES = ("criteria", "spectrum", "decoupled", "identity")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class CriteriaConfig:
    checks: tuple[str, ...] = tuple(CHECKS)
    q: tuple[int, ...] = ()
    bergman_k_max: int = 11
    doubling: bool = True
    k_min: int = 2
    k_max: int = 20
    samples_per_shell: int = 256
    ball_centers: int = 32
    window: int = 4
    div_factor: float = 1e3
    bnd_factor: float = 10.0
    threshold_floor: float = 1e-6
    eps0: float = 1e-6

    def settings(self, rule: QuadratureRule) -> CriteriaSettings:
        keep = {f.name for f in fields(CriteriaSettings)}
        return CriteriaSettings(**{k: v for k, v in asdict(self).items() if k in keep}, rule=rule)


@dataclass(frozen=True)
class SpectrumConfig:
    degrees: tuple[str, ...] = ("top", "zero")
    cutoff: float = 5.3
    tol: float = 1e-8
    export_operator: bool = False


@dataclass(frozen=True)
class GridConfig:
    L: float = 8.0
    N: int = 128


@dataclass(frozen=True)
class DecoupledConfig:
    spectra: bool = False
    L: float = 6.0
    h: float = 0.125
    growth_factor: float = 1.5
    cutoff: float = 4.0
    compose_cutoff: float = 3.0


@dataclass(frozen=True)
class IdentityConfig:
    kmh_forms: int = 10
    polydisk: bool = True


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    normalize_timings: bool = False


_SECTIONS = {
    "criteria": CriteriaConfig,
    "quad": QuadratureRule,
    "spectrum": SpectrumConfig,
    "grid": GridConfig,
    "decoupled": DecoupledConfig,
    "identity": IdentityConfig,
    "output": OutputConfig,
}


@dataclass(frozen=True)
class AnalysisConfig:
    weight: dict
    analyses: tuple[str, ...] = ANALYSES
    seed: int = 0
    criteria: CriteriaConfig = CriteriaConfig()
    quad: QuadratureRule = QuadratureRule()
    spectrum: SpectrumConfig = SpectrumConfig()
    grid: GridConfig = GridConfig()
    decoupled: DecoupledConfig = DecoupledConfig()
    identity: IdentityConfig = IdentityConfig()
    output: OutputConfig = OutputConfig()
    echo: dict = field(default_factory=dict, compare=False)

    def build_weight(self) -> Weight | DecoupledWeight:
        return build_weight(self.weight)


def build_weight(spec: dict) -> Weight | DecoupledWeight:
    if "decoupled" in spec:
        return decoupled(*(builtin(c["name"], **c.get("params", {})) for c in spec["decoupled"]))
    return builtin(spec["name"], **spec.get("params", {}))


def _locate(text: str, section: str | None, key: str) -> str:
    """'line N' of the first assignment to ``key`` inside ``section`` (top level when None)."""
    current = None
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[\s*([^\]]+?)\s*\]", line)
        if head:
            current = head.group(1)
            continue
        if current == section and pat.match(line):
            return f"line {i}"
        if current == section and re.search(rf"[{{,]\s*{re.escape(key)}\s*=", line):
            return f"line {i}"
    return "unknown line"


def _coerce(cls, raw: dict, section: str, text: str, errors: list[str]):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            errors.append(f"{_locate(text, section, key)}: unknown key '{section}.{key}'")
            continue
        default = getattr(cls(), key)
        if isinstance(default, tuple):
            if not isinstance(value, list):
                errors.append(f"{_locate(text, section, key)}: '{section}.{key}' must be a list")
                continue
            value = tuple(value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                errors.append(f"{_locate(text, section, key)}: '{section}.{key}' must be true or false")
                continue
        elif isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.append(f"{_locate(text, section, key)}: '{section}.{key}' must be a number")
                continue
            if isinstance(default, int) and not isinstance(value, int):
                errors.append(f"{_locate(text, section, key)}: '{section}.{key}' must be an integer")
                continue
        elif isinstance(default, str) and not isinstance(value, str):
            errors.append(f"{_locate(text, section, key)}: '{section}.{key}' must be a string")
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        errors.append(f"[{section}]: {exc}")
        return cls()


def _check_weight_entry(entry, where: str, text: str, errors: list[str]) -> dict | None:
    if not isinstance(entry, dict):
        errors.append(f"{where}: weight entry must be a table")
        return None
    extra = set(entry) - {"name", "params"}
    for key in sorted(extra):
        errors.append(f"{_locate(text, 'weight', key)}: unknown key 'weight.{key}'")
    if "name" not in entry:
        errors.append(f"{where}: missing required key 'weight.name'")
        return None
    name, params = entry["name"], entry.get("params", {})
    if name not in builtin_names():
        errors.append(f"{_locate(text, 'weight', 'name')}: unknown weight '{name}'; known: {', '.join(builtin_names())}")
        return None
    if not isinstance(params, dict):
        errors.append(f"{where}: 'weight.params' must be a table")
        return None
    for key in ("alpha", "scale"):
        if key in params and isinstance(params[key], (int, float)) and params[key] < 0:
            errors.append(f"{_locate(text, 'weight', key)}: 'weight.params.{key}' must be >= 0, got {params[key]}")
            return None
    try:
        w = builtin(name, **params)
    except (WeightError, ValueError, TypeError) as exc:
        errors.append(f"{where}: {exc}")
        return None
    return {"name": name, "params": dict(params), "n": w.n}


def parse_config(text: str) -> AnalysisConfig:
    """Validated configuration from TOML text; raises ConfigError listing every problem."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML syntax error: {exc}"]) from None
    errors: list[str] = []
    top_known = {"weight", "analyses", "seed", *_SECTIONS}
    for key in raw:
        if key not in top_known:
            errors.append(f"{_locate(text, None, key)}: unknown key '{key}'")
    wraw = raw.get("weight")
    weight: dict = {}
    if wraw is None:
        errors.append("missing required section [weight]")
    elif "decoupled" in wraw:
        extra = set(wraw) - {"decoupled"}
        for key in sorted(extra):
            errors.append(f"{_locate(text, 'weight', key)}: key 'weight.{key}' not allowed with 'weight.decoupled'")
        comps = []
        for i, entry in enumerate(wraw["decoupled"] if isinstance(wraw["decoupled"], list) else []):
            c = _check_weight_entry(entry, f"weight.decoupled[{i}]", text, errors)
            if c is not None and c["n"] != 1:
                errors.append(f"weight.decoupled[{i}]: components must be one-variable weights")
            elif c is not None:
                comps.append({"name": c["name"], "params": c["params"]})
        if not comps and not errors:
            errors.append(f"{_locate(text, 'weight', 'decoupled')}: 'weight.decoupled' must be a non-empty list")
        weight = {"decoupled": comps}
    else:
        c = _check_weight_entry(wraw, "[weight]", text, errors)
        if c is not None:
            weight = {"name": c["name"], "params": c["params"]}
    analyses = raw.get("analyses", list(ANALYSES))
    if not isinstance(analyses, list) or any(a not in ANALYSES for a in analyses):
        errors.append(f"{_locate(text, None, 'analyses')}: 'analyses' must be a list drawn from {list(ANALYSES)}")
        analyses = []
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append(f"{_locate(text, None, 'seed')}: 'seed' must be a non-negative integer")
        seed = 0
    sections = {}
    for name, cls in _SECTIONS.items():
        part = raw.get(name, {})
        if not isinstance(part, dict):
            errors.append(f"{_locate(text, None, name)}: '{name}' must be a table")
            part = {}
        sections[name] = _coerce(cls, part, name, text, errors)
    crit: CriteriaConfig = sections["criteria"]
    for c in crit.checks:
        if c not in CHECKS:
            errors.append(f"{_locate(text, 'criteria', 'checks')}: unknown check '{c}'")
    for d in sections["spectrum"].degrees:
        if d not in ("top", "zero"):
            errors.append(f"{_locate(text, 'spectrum', 'degrees')}: unknown degree '{d}'")
    if sections["grid"].L <= 0 or sections["grid"].N < 4:
        errors.append(f"{_locate(text, 'grid', 'N')}: grid needs L > 0 and N >= 4")
    if crit.k_max - crit.k_min + 1 < crit.window + 2:
        errors.append(f"{_locate(text, 'criteria', 'k_max')}: need at least window + 2 shells")
    if errors:
        raise ConfigError(errors)
    echo = {"weight": weight, "analyses": list(analyses), "seed": seed,
            **{k: _plain(asdict(v)) for k, v in sections.items()}}
    echo["output"].pop("dir")  # location of the report itself; kept out so reruns compare equal
    return AnalysisConfig(weight, tuple(analyses), seed, echo=echo, **sections)


def _plain(d: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def with_overrides(cfg: AnalysisConfig, seed: int | None = None, grid_L: float | None = None,
                   grid_N: int | None = None, out: str | None = None,
                   normalize_timings: bool | None = None, analyses=None) -> AnalysisConfig:
    from dataclasses import replace

    grid = replace(cfg.grid, **{k: v for k, v in (("L", grid_L), ("N", grid_N)) if v is not None})
    output = replace(cfg.output, **{k: v for k, v in (("dir", out), ("normalize_timings", normalize_timings))
                                    if v is not None})
    new = replace(cfg, seed=cfg.seed if seed is None else seed, grid=grid, output=output,
                  analyses=cfg.analyses if analyses is None else tuple(analyses))
    echo = dict(cfg.echo)
    echo.update(seed=new.seed, grid=asdict(grid), analyses=list(new.analyses),
                output={"normalize_timings": output.normalize_timings})
    return replace(new, echo=echo)
