"""Run-configuration files (YAML) and the compact policy notation shared with the CLI.

Policy notation: ``jsq``, ``uniform``, ``pw:D``, ``error:M:P``, ``vec:a,b,...``
for queue-based allocation vectors and ``workload:M:P`` for JmSW(p). In YAML the
same policy may be written as a mapping, e.g. ``{kind: pw, d: 2}``.
"""
from __future__ import annotations

from pathlib import Path

import yaml

from .ctmc import Variant
from .desim import QueueBased, SimConfig, WorkloadBased
from .errors import InvalidParameter
from .policy import AllocationVector, error_allocation, jsq_allocation, pw_allocation, uniform_allocation
from .state import SystemParams

SIM_KEYS = {"name", "s", "lam", "rho", "mu", "policy", "variant", "horizon_arrivals", "seed",
            "sample_stride", "split_m", "max_samples"}
CTMC_KEYS = {"name", "s", "lam", "rho", "mu", "policy", "variant", "cap", "tol"}
EXPERIMENT_KEYS = {"suite", "s", "offset", "horizon", "seed", "seeds", "sample_stride", "jobs"}


class ConfigError(InvalidParameter):
    pass


def load_config(path, allowed: set[str]) -> dict:
    """Read a YAML mapping and reject keys outside ``allowed``."""
    path = Path(path)
    with open(path) as fh:  # FileNotFoundError propagates to the caller
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    return data


def merge(file_values: dict, overrides: dict) -> dict:
    """Flags win over file values; ``None`` flags mean "not given"."""
    out = dict(file_values)
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def _number(value, name):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None


def _integer(value, name):
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    if f != int(f):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(f)


def parse_policy(spec, s: int):
    """Return a ``QueueBased`` or ``WorkloadBased`` policy for ``s`` servers."""
    if isinstance(spec, dict):
        spec = dict(spec)
        kind = str(spec.pop("kind", "")).lower()
        if kind in ("jsq", "uniform"):
            fields = []
        elif kind == "pw":
            fields = [spec.pop("d", None)]
        elif kind in ("error", "workload"):
            fields = [spec.pop("m", None), spec.pop("p", None)]
        elif kind == "vec":
            probs = spec.pop("probs", None)
            fields = [",".join(str(v) for v in probs or [])]
        else:
            raise ConfigError(f"unknown policy kind {kind!r}")
        if spec:
            raise ConfigError(f"unknown policy keys {sorted(spec)}")
        if any(f is None for f in fields):
            raise ConfigError(f"policy {kind!r} is missing parameters")
        spec = ":".join([kind] + [str(f) for f in fields])
    if not isinstance(spec, str):
        raise ConfigError(f"cannot parse policy {spec!r}")
    kind, _, rest = spec.strip().partition(":")
    kind = kind.lower()
    args = rest.split(":") if rest else []
    if kind == "jsq" and not args:
        return QueueBased(jsq_allocation(s))
    if kind == "uniform" and not args:
        return QueueBased(uniform_allocation(s))
    if kind == "pw" and len(args) == 1:
        return QueueBased(pw_allocation(s, _integer(args[0], "d")))
    if kind == "error" and len(args) == 2:
        return QueueBased(error_allocation(s, _integer(args[0], "m"), _number(args[1], "p")))
    if kind == "vec" and len(args) == 1:
        probs = tuple(_number(v, "probability") for v in args[0].split(",") if v.strip())
        if len(probs) != s:
            raise ConfigError(f"vector has {len(probs)} entries for {s} servers")
        return QueueBased(AllocationVector(probs))
    if kind == "workload" and len(args) == 2:
        return WorkloadBased(_integer(args[0], "m"), _number(args[1], "p"))
    raise ConfigError(f"cannot parse policy {spec!r}")


def system_params(values: dict) -> SystemParams:
    if "s" not in values:
        raise ConfigError("missing required key 's'")
    s = _integer(values["s"], "s")
    mu = _number(values.get("mu", 1.0), "mu")
    has_lam, has_rho = values.get("lam") is not None, values.get("rho") is not None
    if has_lam == has_rho:
        raise ConfigError("give exactly one of 'lam' or 'rho'")
    if has_rho:
        return SystemParams.from_rho(s, _number(values["rho"], "rho"), mu)
    return SystemParams(s, _number(values["lam"], "lam"), mu)


def sim_config(values: dict) -> SimConfig:
    for key in ("policy", "horizon_arrivals"):
        if values.get(key) is None:
            raise ConfigError(f"missing required key {key!r}")
    params = system_params(values)
    policy = parse_policy(values["policy"], params.s)
    split_m = values.get("split_m")
    kwargs = {}
    if values.get("max_samples") is not None:
        kwargs["max_samples"] = _integer(values["max_samples"], "max_samples")
    return SimConfig(
        params=params,
        policy=policy,
        variant=Variant.parse(str(values.get("variant", "idling"))),
        horizon_arrivals=_integer(values["horizon_arrivals"], "horizon_arrivals"),
        seed=_integer(values.get("seed", 0), "seed"),
        sample_stride=_integer(values.get("sample_stride", 1), "sample_stride"),
        split_m=None if split_m is None else _integer(split_m, "split_m"),
        **kwargs,
    )
