"""Flat ``key = value`` pipeline configuration with dotted namespaces.

Lines starting with ``#`` are comments.  Relative paths are resolved against
the config file's directory.  Example::

    seed = 0
    output = run
    areas = a0,a1
    area.a0.raster = data/a0.hdr
    area.a0.labels = data/a0_labels.hdr
    superpixel.k_target = 300
    grid.lr.C = log-uniform 0.01..100
"""

from dataclasses import dataclass, field
from pathlib import Path

from ..learners import ESTIMATORS, default_grids, parse_dimension
from ..superpixel import METHODS


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "seed": "0",
    "output": "out",
    "methods": ",".join(METHODS),
    "superpixel.k_target": "6000",
    "superpixel.iterations": "10",
    "features.bands": "",
    "features.levels": "64",
    "dataset.min_pixels": "70",
    "dataset.min_homogeneity": "0.70",
    "dataset.n_pure": "45",
    "dataset.n_mixed": "45",
    "dataset.reference": "slic",
    "dataset.validation_fraction": "0.25",
    "learners.algorithms": ",".join(ESTIMATORS),
    "learners.folds": "5",
    "learners.top_k": "5",
    "learners.tune_budget": "10",
    "ensemble.population": "50",
    "ensemble.elite_fraction": "0.2",
    "ensemble.iterations": "100",
    "ensemble.clamp": "0.02",
    "ensemble.runs": "5",
}


def parse_text(text: str) -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {raw!r}")
        k, v = (p.strip() for p in line.split("=", 1))
        if not k:
            raise ConfigError(f"line {n}: empty key")
        if k in out:
            raise ConfigError(f"line {n}: duplicate key {k!r}")
        out[k] = v
    return out


def _list(v):
    return [s.strip() for s in v.split(",") if s.strip()]


@dataclass
class Area:
    name: str
    raster: Path
    labels: Path
    mask: Path | None = None


@dataclass
class PipelineConfig:
    path: Path
    text: str
    values: dict
    areas: list = field(default_factory=list)

    @classmethod
    def load(cls, path, seed=None):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        vals = dict(DEFAULTS)
        vals.update(parse_text(text))
        if seed is not None:
            vals["seed"] = str(int(seed))
        cfg = cls(path, text, vals)
        cfg._validate()
        return cfg

    # -------------------------------------------------------------- access
    def get(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise ConfigError(f"missing config key {key!r}")

    def int(self, key):
        try:
            return int(self.get(key))
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {self.get(key)!r}")

    def float(self, key):
        try:
            return float(self.get(key))
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {self.get(key)!r}")

    def list(self, key):
        return _list(self.get(key))

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else (self.path.parent / p)

    @property
    def seed(self):
        return self.int("seed")

    @property
    def output(self) -> Path:
        return self.resolve(self.get("output"))

    @property
    def methods(self):
        return self.list("methods")

    def compactness(self, method):
        key = f"superpixel.{method}.compactness"
        return float(self.values[key]) if key in self.values else None

    def k_target(self, method):
        key = f"superpixel.{method}.k_target"
        return int(self.values.get(key, self.values["superpixel.k_target"]))

    def grids(self):
        grids = default_grids()
        for k, v in self.values.items():
            if k.startswith("grid."):
                parts = k.split(".")
                if len(parts) != 3:
                    raise ConfigError(f"grid keys look like grid.<alg>.<param>, got {k!r}")
                grids.setdefault(parts[1].upper(), {})[parts[2]] = parse_dimension(v)
        return grids

    def area(self, name):
        for a in self.areas:
            if a.name == name:
                return a
        raise ConfigError(f"unknown area {name!r}; configured: {[a.name for a in self.areas]}")

    # -------------------------------------------------------------- checks
    def _validate(self):
        self.int("seed")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown superpixel methods {bad}; choose from {list(METHODS)}")
        bad = [a for a in self.list("learners.algorithms") if a not in ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown learners {bad}; choose from {sorted(ESTIMATORS)}")
        ref = self.get("dataset.reference")
        if ref not in ("none", *self.methods):
            raise ConfigError(f"dataset.reference must be 'none' or a configured method, got {ref!r}")
        names = self.list("areas") if "areas" in self.values else []
        if not names:
            raise ConfigError("config lists no areas")
        for n in names:
            try:
                raster = self.resolve(self.values[f"area.{n}.raster"])
                labels = self.resolve(self.values[f"area.{n}.labels"])
            except KeyError as e:
                raise ConfigError(f"area {n!r} needs {e.args[0]}")
            mask = self.values.get(f"area.{n}.mask")
            mask = self.resolve(mask) if mask else None
            for p in (raster, labels, mask):
                if p is not None and not p.is_file():
                    raise ConfigError(f"area {n!r}: file not found: {p}")
            self.areas.append(Area(n, raster, labels, mask))
        for k in ("superpixel.k_target", "features.levels", "learners.folds", "learners.top_k",
                  "learners.tune_budget", "ensemble.population", "ensemble.iterations", "ensemble.runs",
                  "dataset.n_pure", "dataset.n_mixed", "dataset.min_pixels"):
            self.int(k)
        for k in ("dataset.min_homogeneity", "dataset.validation_fraction", "ensemble.elite_fraction",
                  "ensemble.clamp"):
            self.float(k)
        self.grids()
