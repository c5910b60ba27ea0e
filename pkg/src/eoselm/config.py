"""Experiment configuration: nested dataclasses loaded from JSON or TOML."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

from eoselm.errors import ConfigurationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


@dataclass(frozen=True)
class GridSection:
    load_levels: tuple[float, ...] = (0.8, 0.925, 1.05, 1.175, 1.3)
    n_dispatch: int = 3
    n_faults: int = 20
    t_fault: float = 0.2
    clear_cycles: float = 15.0
    dispatch_spread: float = 0.2
    dt: float = 1.0 / 1200.0
    horizon: float = 5.0
    batch_size: int = 64
    workers: int = 1


@dataclass(frozen=True)
class ModelSection:
    L: int = 20
    n0: int | None = None  # defaults to L + 50
    K: int = 10
    N: int | None = None  # defaults to K
    activation: str = "sigmoid"
    mode: str = "one-by-one"
    chunk_size: int = 1
    L_grid: tuple[int, ...] = (5, 10, 15, 20, 30, 40, 50, 60, 80)
    cv_folds: int = 5
    cv_repeats: int = 3


@dataclass(frozen=True)
class FeatselSection:
    sigma: float = 0.2
    w: float = 0.1
    pop_size: int = 20
    max_iters: int = 100
    lower: float = -1.0
    upper: float = 1.0


@dataclass(frozen=True)
class SgbpSection:
    hidden: int = 30
    lr: float = 0.05
    epochs: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    network: str = "wscc9"  # bundled name or path to a network JSON file
    kb_path: str | None = None  # defaults to <out_dir>/kb.csv
    out_dir: str = "out"
    seed: int = 0
    trials: int = 50
    workers: int = 1  # processes for independent trials
    grid: GridSection = field(default_factory=GridSection)
    model: ModelSection = field(default_factory=ModelSection)
    featsel: FeatselSection = field(default_factory=FeatselSection)
    sgbp: SgbpSection = field(default_factory=SgbpSection)

    def __post_init__(self):
        validate(self)

    @property
    def kb_file(self) -> Path:
        return Path(self.kb_path) if self.kb_path else Path(self.out_dir) / "kb.csv"


def validate(cfg: ExperimentConfig) -> None:
    m, g, f = cfg.model, cfg.grid, cfg.featsel
    problems = []
    if cfg.trials < 1 or cfg.workers < 1:
        problems.append("trials and workers must be >= 1")
    if m.L < 1 or m.K < 1 or (m.N is not None and m.N < 1):
        problems.append("L, K and N must be positive")
    if m.n0 is not None and m.n0 < m.L:
        problems.append("n0 must be >= L")
    if m.mode not in ("one-by-one", "chunk"):
        problems.append(f"mode must be one-by-one or chunk, got {m.mode!r}")
    if m.chunk_size < 1:
        problems.append("chunk_size must be >= 1")
    if m.activation not in ("sigmoid", "rbf", "polynomial"):
        problems.append(f"unknown activation {m.activation!r}")
    if not m.L_grid or min(m.L_grid) < 1:
        problems.append("L_grid must hold positive integers")
    if m.cv_folds < 2 or m.cv_repeats < 1:
        problems.append("need cv_folds >= 2 and cv_repeats >= 1")
    if f.sigma <= 0 or f.w < 0 or f.pop_size < 2 or f.max_iters < 0 or f.lower >= f.upper:
        problems.append("invalid featsel settings")
    if g.dt <= 0 or g.dt > 1e-3 or g.horizon <= 0 or g.batch_size < 1 or g.workers < 1:
        problems.append("invalid simulation settings")
    if cfg.sgbp.hidden < 1 or cfg.sgbp.lr < 0 or cfg.sgbp.epochs < 0:
        problems.append("invalid sgbp settings")
    if problems:
        raise ConfigurationError("; ".join(problems))


def _build(cls, doc: dict, where: str):
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{where or 'config'} must be a table/object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    kw = {}
    defaults = cls()
    for name, value in doc.items():
        current = getattr(defaults, name)
        if is_dataclass(current):
            kw[name] = _build(type(current), value, f"{where}.{name}" if where else name)
        elif isinstance(current, tuple):
            kw[name] = tuple(value)
        else:
            kw[name] = value
    return cls(**kw)


def config_from_dict(doc: dict) -> ExperimentConfig:
    try:
        return _build(ExperimentConfig, doc, "")
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()
    try:
        doc = tomllib.loads(text) if path.suffix == ".toml" else json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return config_from_dict(doc)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return json.loads(json.dumps(asdict(cfg)))


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Apply CLI overrides; ``None`` values are ignored. Model keys go to ``cfg.model``."""
    top = {k: v for k, v in kw.items() if v is not None and k in {f.name for f in fields(ExperimentConfig)}}
    model = {k: v for k, v in kw.items() if v is not None and k in {f.name for f in fields(ModelSection)}}
    if model:
        top["model"] = replace(cfg.model, **model)
    return replace(cfg, **top)
