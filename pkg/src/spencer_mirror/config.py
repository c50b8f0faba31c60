"""Run configuration: parsing, validation, and construction of run inputs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from spencer_mirror.complex import METRICS, ConstantLambdaField
from spencer_mirror.dec import TriMesh, icosphere, read_off
from spencer_mirror.lie_core import LieAlgebra, algebra_from_spec
from spencer_mirror.spectral import GapPolicy
from spencer_mirror.sphere import RadialLambdaField


class ConfigError(ValueError):
    pass


def _strict(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"{where}: unknown field(s) {extra}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class MeshSpec:
    kind: str = "icosphere"
    subdivisions: int = 2
    radius: float = 1.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("icosphere", "off"):
            raise ConfigError(f"mesh.kind must be 'icosphere' or 'off', got {self.kind!r}")
        if self.kind == "icosphere" and not (isinstance(self.subdivisions, int) and 0 <= self.subdivisions <= 6):
            raise ConfigError("mesh.subdivisions must be an integer in [0, 6]")
        if self.kind == "off" and not self.path:
            raise ConfigError("mesh.path is required for OFF meshes")
        if not (isinstance(self.radius, (int, float)) and self.radius > 0):
            raise ConfigError("mesh.radius must be positive")

    def build(self) -> TriMesh:
        if self.kind == "icosphere":
            return icosphere(self.subdivisions, float(self.radius))
        return read_off(self.path)

    def sphere_radius(self) -> float | None:
        return float(self.radius) if self.kind == "icosphere" else None


@dataclass(frozen=True)
class LambdaSpec:
    """``radial`` (profile text such as ``constant:1``) or ``vector`` (constant dual vector)."""

    kind: str = "radial"
    profile: str = "constant:1"
    coeffs: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("radial", "vector"):
            raise ConfigError(f"lambda.kind must be 'radial' or 'vector', got {self.kind!r}")
        if self.kind == "vector":
            if self.coeffs is None:
                raise ConfigError("lambda.coeffs is required for kind 'vector'")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        elif self.coeffs is not None:
            raise ConfigError("lambda.coeffs only applies to kind 'vector'")

    def build(self, algebra: LieAlgebra):
        if self.kind == "vector":
            if len(self.coeffs) != algebra.dim:
                raise ConfigError(f"lambda.coeffs has length {len(self.coeffs)}, algebra dim is {algebra.dim}")
            return ConstantLambdaField(self.coeffs)
        if algebra.dim != 3:
            raise ConfigError("radial lambda fields need a 3-dimensional algebra")
        try:
            return RadialLambdaField.parse(self.profile)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class Tolerances:
    identity: float = 1e-12
    spectral_rtol: float = 1e-9
    gap_floor: float = 1e-8
    gap_min_ratio: float = 1e3
    gap_window: int = 20
    dense_limit: int = 2500

    def policy(self) -> GapPolicy:
        return GapPolicy(window=self.gap_window, floor=self.gap_floor,
                         min_ratio=self.gap_min_ratio, dense_limit=self.dense_limit)


@dataclass(frozen=True)
class RunConfig:
    algebra: str = "so3"
    mesh: MeshSpec = field(default_factory=MeshSpec)
    lam: LambdaSpec = field(default_factory=LambdaSpec)
    metric: str = "constraint"
    max_sym_degree: int = 3
    seed: int = 0
    c_str_samples: int = 100_000
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str | None = None
    csv: str | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not (isinstance(self.max_sym_degree, int) and 1 <= self.max_sym_degree <= 6):
            raise ConfigError("max_sym_degree must be an integer in [1, 6]")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if not (isinstance(self.c_str_samples, int) and self.c_str_samples >= 1):
            raise ConfigError("c_str_samples must be a positive integer")

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        if "lambda" in data:
            if "lam" in data:
                raise ConfigError("give either 'lambda' or 'lam', not both")
            data["lam"] = data.pop("lambda")
        sub = {"mesh": MeshSpec, "lam": LambdaSpec, "tolerances": Tolerances}
        for key, typ in sub.items():
            if key in data:
                data[key] = _strict(typ, data[key], key if key != "lam" else "lambda")
        return _strict(cls, data, "config")

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        if d["lambda"]["coeffs"] is not None:
            d["lambda"]["coeffs"] = list(d["lambda"]["coeffs"])
        return d

    def with_overrides(self, **kw) -> RunConfig:
        """Apply CLI-style overrides (``None`` values are ignored)."""
        d = self.to_dict()
        if kw.get("algebra") is not None:
            d["algebra"] = kw["algebra"]
        if kw.get("subdivisions") is not None:
            d["mesh"] = {**d["mesh"], "kind": "icosphere", "subdivisions": kw["subdivisions"], "path": None}
        if kw.get("lambda0") is not None:
            profile = d["lambda"]["profile"].split(":")[0] if d["lambda"]["kind"] == "radial" else "constant"
            d["lambda"] = {"kind": "radial", "profile": f"{profile}:{kw['lambda0']!r}", "coeffs": None}
        for key in ("metric", "max_sym_degree", "seed", "output", "csv"):
            if kw.get(key) is not None:
                d[key] = kw[key]
        return RunConfig.from_dict(d)

    def build_algebra(self) -> LieAlgebra:
        return algebra_from_spec(self.algebra)
