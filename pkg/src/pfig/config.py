"""Pipeline configuration loaded from TOML."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .blending import BlendConfig
from .errors import ConfigError
from .forgery_types import TypeThresholds
from .losses import C2FConfig


@dataclass(frozen=True)
class RegionConfig:
    theta: float = 0.05
    # landmarks may sit this many pixels outside the image
    landmark_slack: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("region theta must lie in (0, 1)")
        if self.landmark_slack < 0:
            raise ValueError("landmark_slack must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    real_dir: Path
    fake_dir: Path
    landmarks_dir: Path
    images_dir: Path
    manifest: Path
    report: Path | None = None
    seed: int = 0
    workers: int = 1
    samples_per_pair: int = 1
    region: RegionConfig = field(default_factory=RegionConfig)
    types: TypeThresholds = field(default_factory=TypeThresholds)
    blend: BlendConfig = field(default_factory=BlendConfig)
    c2f: C2FConfig = field(default_factory=C2FConfig)

    def __post_init__(self):
        paths = [self.real_dir, self.fake_dir, self.landmarks_dir, self.images_dir, self.manifest]
        if len({Path(p).resolve() for p in paths}) != len(paths):
            raise ConfigError("input and output paths must be distinct")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.workers < 1 or self.samples_per_pair < 1:
            raise ConfigError("workers and samples_per_pair must be >= 1")

    @property
    def report_path(self) -> Path:
        return self.report if self.report is not None else self.manifest.with_suffix(".report.json")

    def with_overrides(self, **kw) -> "PipelineConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _section(doc: dict, name: str, cls):
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    """Read a TOML config; relative paths resolve against the file's directory."""
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    base = path.parent

    def resolve(section: str, key: str, required: bool = True) -> Path | None:
        value = doc.get(section, {}).get(key)
        if value is None:
            if required:
                raise ConfigError(f"missing [{section}] {key}")
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    inp = doc.get("input", {})
    out = doc.get("output", {})
    for name, table, allowed in (
        ("input", inp, {"real_dir", "fake_dir", "landmarks_dir"}),
        ("output", out, {"images_dir", "manifest", "report"}),
    ):
        unknown = set(table) - allowed
        if unknown:
            raise ConfigError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    unknown_top = set(doc) - {"seed", "workers", "samples_per_pair", "input", "output", "region", "types", "blend", "c2f"}
    if unknown_top:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown_top))}")
    try:
        return PipelineConfig(
            real_dir=resolve("input", "real_dir"),
            fake_dir=resolve("input", "fake_dir"),
            landmarks_dir=resolve("input", "landmarks_dir"),
            images_dir=resolve("output", "images_dir"),
            manifest=resolve("output", "manifest"),
            report=resolve("output", "report", required=False),
            seed=int(doc.get("seed", 0)),
            workers=int(doc.get("workers", 1)),
            samples_per_pair=int(doc.get("samples_per_pair", 1)),
            region=_section(doc, "region", RegionConfig),
            types=_section(doc, "types", TypeThresholds),
            blend=_section(doc, "blend", BlendConfig),
            c2f=_section(doc, "c2f", C2FConfig),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
