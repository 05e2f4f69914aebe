"""Experiment configuration: flat JSON keys, validated before any compute.

Scalar-or-list keys (``P``, ``layers``, ``ansatz``, ``shots``) define sweep
grids; everything else is a scalar. Unknown keys are rejected.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .lattice import build_ladder

EXPERIMENTS = ("ground-state", "string-breaking", "variance-scan", "fidelity-trace", "exact")
ANSATZE = ("GI", "ZZ")
OPTIMIZERS = ("bfgs", "spsa")
INITS = ("random", "normal", "pi")
ORACLE_METHODS = ("auto", "dense", "dense-blocks", "lanczos")
REQUIRED = ("experiment", "mu", "J", "m")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    mu: float
    J: float
    m: float
    V: float = 0.0
    P: tuple[int, ...] = (1,)
    layers: tuple[int, ...] = (1,)
    ansatz: tuple[str, ...] = ("GI",)
    charges: tuple[tuple[int, int], ...] = ()
    optimizer: str = "bfgs"
    max_iter: int | None = None        # None: 500 for bfgs, 300 for spsa
    grad_tol: float = 1e-6
    spsa_a: float | None = None
    spsa_c: float = 0.1
    shots: tuple[int | None, ...] = (None,)
    n_runs: int = 1
    seed: int = 0
    init: str = "normal"
    init_scale: float = 0.1
    samples: int = 100
    all_params: bool = False
    rz_sublayer: bool = False
    vqe: bool = False
    oracle_method: str = "auto"
    output_dir: str | None = None
    threads: int = 1

    def effective_max_iter(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        return 300 if self.optimizer == "spsa" else 500

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)


_KEYS = {f.name for f in fields(ExperimentConfig)}
_LIST_KEYS = ("P", "layers", "ansatz", "shots")


def _as_tuple(value):
    return tuple(value) if isinstance(value, (list, tuple)) else (value,)


def _number(raw: dict, key: str) -> float:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {v!r}")
    return float(v)


def _int(value, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key!r} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key!r} must be >= {minimum}, got {value}")
    return value


def validate_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - _KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    out = dict(raw)
    if out["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"'experiment' must be one of {EXPERIMENTS}, got {out['experiment']!r}")
    for key in ("mu", "J", "m", "V"):
        if key in out:
            out[key] = _number(out, key)
    if out["mu"] <= 0:
        raise ConfigError(f"'mu' must be > 0, got {out['mu']}")
    for key in ("J", "m", "V"):
        if out.get(key, 0.0) < 0:
            raise ConfigError(f"{key!r} must be >= 0, got {out[key]}")

    for key in _LIST_KEYS:
        if key in out:
            out[key] = _as_tuple(out[key])
            if not out[key]:
                raise ConfigError(f"{key!r} must not be empty")
    out["P"] = tuple(_int(p, "P", 1) for p in out.get("P", (1,)))
    out["layers"] = tuple(_int(l, "layers", 1) for l in out.get("layers", (1,)))
    ans = []
    for a in out.get("ansatz", ("GI",)):
        if not isinstance(a, str) or a.upper() not in ANSATZE:
            raise ConfigError(f"'ansatz' entries must be one of {ANSATZE}, got {a!r}")
        ans.append(a.upper())
    out["ansatz"] = tuple(ans)
    out["shots"] = tuple(None if s is None else _int(s, "shots", 1)
                         for s in out.get("shots", (None,)))

    charges = []
    for ch in out.get("charges", ()):
        if not (isinstance(ch, (list, tuple)) and len(ch) == 2):
            raise ConfigError(f"charge {ch!r} must be a [column, leg] pair")
        charges.append((_int(ch[0], "charges", 0), _int(ch[1], "charges", 0)))
    if len(set(charges)) != len(charges):
        raise ConfigError("a site cannot carry two static charges")
    for p in out["P"]:
        lattice = build_ladder(p)
        for ch in charges:
            if not lattice.has_site(ch):
                raise ConfigError(f"charge at {ch} is off-lattice for P={p}")
    out["charges"] = tuple(charges)

    opt = out.get("optimizer", "bfgs")
    if not isinstance(opt, str) or opt.lower() not in OPTIMIZERS:
        raise ConfigError(f"'optimizer' must be one of {OPTIMIZERS}, got {opt!r}")
    out["optimizer"] = opt.lower()
    if out["optimizer"] == "bfgs" and any(s is not None for s in out["shots"]):
        raise ConfigError("shot mode needs optimizer 'spsa'")
    if out.get("init", "normal") not in INITS:
        raise ConfigError(f"'init' must be one of {INITS}, got {out['init']!r}")
    if out.get("oracle_method", "auto") not in ORACLE_METHODS:
        raise ConfigError(f"'oracle_method' must be one of {ORACLE_METHODS}")
    for key, minimum in (("n_runs", 1), ("seed", 0), ("samples", 2), ("threads", 1)):
        if key in out:
            _int(out[key], key, minimum)
    if out.get("max_iter") is not None:
        _int(out["max_iter"], "max_iter", 1)
    for key in ("grad_tol", "init_scale", "spsa_c"):
        if key in out and _number(out, key) <= 0:
            raise ConfigError(f"{key!r} must be > 0")
    for key in ("all_params", "rz_sublayer", "vqe"):
        if key in out and not isinstance(out[key], bool):
            raise ConfigError(f"{key!r} must be true or false")
    return ExperimentConfig(**out)


def parse_override(text: str) -> tuple[str, object]:
    """``key=value`` with ``value`` read as JSON, falling back to a bare string."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not key=value")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip(), parsed


def load_config(path: str | Path | None, overrides: list[str] = (),
                defaults: dict | None = None) -> ExperimentConfig:
    """File keys override ``defaults``; ``key=value`` overrides apply last."""
    raw = dict(defaults or {})
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        raw.update(loaded)
    for item in overrides:
        key, value = parse_override(item)
        raw[key] = value
    return validate_config(raw)
