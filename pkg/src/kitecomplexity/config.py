"""Run configuration: a flat JSON document, validated on load."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import List, Mapping, Optional

from .bounds import AssumedFTable, ConstantsConfig, NetEstimateFSource
from .geometry import AngleValue, DegenerateTriangle, build_kite


class ConfigError(ValueError):
    """Bad or missing configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


REQUIRED = ("alpha", "beta")

# Default constants: output of scripts/calibrate_constants.py (values rounded up).
CALIBRATED = {
    "C_dichotomy": 0.00117158,
    "c_shear": 1.0,
    "C_phi_arg": 1.0,
    "C_generic": 0.184637,
    "C_lower": 0.000141374,
}
UNCALIBRATED = ("c_shear", "C_phi_arg")


def default_constants() -> ConstantsConfig:
    prov = {k: "default" if k in UNCALIBRATED else "calibrated" for k in CALIBRATED}
    return ConstantsConfig(**CALIBRATED, provenance=prov)


@dataclass
class RunConfig:
    alpha: str
    beta: str
    theta: str = "0.3"
    base_side: int = 1
    n_max: int = 30
    max_N: int = 10000
    cap: int = 12
    eps: float = 1e-3
    beams: int = 10
    directions: int = 4
    ms: List[int] = field(default_factory=lambda: [2, 4, 8, 16])
    n_grid: List[int] = field(default_factory=lambda: [2, 5, 10, 20, 50, 100, 200])
    eps_grid: List[str] = field(default_factory=lambda: ["0.5", "0.25", "0.1", "0.05", "0.01"])
    rho: float = 0.1
    k_max: int = 200
    f_source: str = "assumed"
    f_const: int = 5
    constants: Optional[dict] = None
    precision: int = 64
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        for name in ("alpha", "beta", "theta"):
            try:
                AngleValue.parse(getattr(self, name))
            except (ValueError, TypeError) as exc:
                raise ConfigError(name, str(exc)) from None
        self.alpha, self.beta, self.theta = str(self.alpha), str(self.beta), str(self.theta)
        if self.base_side not in (1, 2, 3, 4):
            raise ConfigError("base_side", "must be 1..4")
        for name in ("n_max", "max_N", "cap", "beams", "directions", "k_max", "precision", "f_const"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(name, "must be a positive integer")
        if self.precision < 64:
            raise ConfigError("precision", "must be at least 64 bits")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not 0 < float(self.eps) < 1:
            raise ConfigError("eps", "must be in (0, 1)")
        if not float(self.rho) > 0:
            raise ConfigError("rho", "must be positive")
        if self.f_source not in ("assumed", "estimate"):
            raise ConfigError("f_source", "must be 'assumed' or 'estimate'")
        if any(int(n) < 2 for n in self.n_grid):
            raise ConfigError("n_grid", "entries must be >= 2")
        if any(int(m) < 1 for m in self.ms):
            raise ConfigError("ms", "entries must be >= 1")
        try:
            self.constants_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError("constants", str(exc)) from None

    # -- round trip --------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RunConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("<root>", "config must be a JSON object")
        for name in REQUIRED:
            if name not in doc:
                raise ConfigError(name, "missing required field")
        known = {f.name for f in fields(cls)}
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(extra[0], "unknown field")
        return cls(**dict(doc))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON ({exc})") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.from_json(fh.read())
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    # -- derived objects ---------------------------------------------------
    def kite(self):
        try:
            return build_kite(self.alpha, self.beta, self.base_side, self.precision)
        except DegenerateTriangle as exc:
            raise ConfigError("alpha", str(exc)) from None

    def constants_config(self) -> ConstantsConfig:
        base = default_constants()
        if self.constants is None:
            return base
        # entries given in the config override the calibrated values
        doc = {k: getattr(base, k) for k in CALIBRATED}
        doc.update(self.constants)
        prov = dict(base.provenance)
        prov.update({k: "user" for k in self.constants if k in CALIBRATED})
        prov.update(self.constants.get("provenance", {}))
        doc["provenance"] = prov
        return ConstantsConfig.from_dict(doc)

    def f_source_obj(self):
        if self.f_source == "assumed":
            return AssumedFTable(self.f_const)
        return NetEstimateFSource(self.alpha, self.beta)
