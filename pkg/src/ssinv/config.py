"""Run configuration: schema validation and object construction.

Configs are YAML (JSON is a subset) documents with sections ``model``,
``costs`` and per-command options.  Unknown keys are rejected so typos
fail loudly before any computation starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .costs import (
    CostModel,
    holding_piecewise_linear,
    holding_power,
    ordering_linear,
    ordering_power,
)
from .errors import ConfigError
from .expressions import compile_expression
from .funcs import Fn
from .models import DbmParams, GbmParams, dbm_costs, dbm_model, gbm_costs, gbm_model
from .sde import DiffusionModel
from .simulate import DelayedTrigger, JustInTime, OrderUpTo, SimConfig

_MODEL_KEYS = {"builtin", "params", "drift", "diffusion", "left", "right", "anchor", "reflected_left"}
_COSTS_KEYS = {"c_b", "c_h", "k1", "k2", "k3", "k4", "k5", "beta", "eta", "c0", "H"}
_SOLVE_KEYS = {"multistarts", "search_span", "skip_cost_validation", "domain", "mode"}
_VERIFY_KEYS = {"grid_points", "tol_scale", "domain", "mode"}
_SIM_KEYS = {"policy", "seed", "dt", "horizon", "paths", "burn_in", "x0", "hist_bins", "hist_range", "block_steps"}
_COMPARE_KEYS = {"ys", "zs", "simulate", "seed", "dt", "horizon", "paths"}
_EXPORT_KEYS = {"points", "domain", "mode"}
_TOP_KEYS = {"model", "costs", "solve", "verify", "simulate", "compare", "export", "output"}
_OUTPUT_KEYS = {"directory"}
_POLICY_TYPES = {"order_up_to", "delayed_trigger", "just_in_time", "optimal"}

_DBM_COST_KEYS = {"c_b", "c_h", "k1", "k2"}
_RDBM_COST_KEYS = {"c_h", "k1", "k2", "k5"}
_GBM_COST_KEYS = {"k1", "k2", "k3", "k4", "beta", "eta"}


@dataclass
class RunConfig:
    model: DiffusionModel
    costs: CostModel
    builtin: str | None
    dbm_params: DbmParams | None
    gbm_params: GbmParams | None
    solve: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    compare: dict = field(default_factory=dict)
    export: dict = field(default_factory=dict)
    output_dir: str = "."
    raw: dict = field(default_factory=dict)


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in section {where!r}")


def _num(section: dict, key: str, where: str, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key {key!r} in section {where!r}")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"key {where}.{key} must be a number, got {v!r}")
    return float(v)


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    return parse_config(text)


def parse_config(text: str) -> RunConfig:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    _check_keys(doc, _TOP_KEYS, "<top level>")
    if "model" not in doc:
        raise ConfigError("config must contain a 'model' section")
    if "costs" not in doc:
        raise ConfigError("config must contain a 'costs' section")

    model_sec = doc["model"] or {}
    costs_sec = doc["costs"] or {}
    if not isinstance(model_sec, dict) or not isinstance(costs_sec, dict):
        raise ConfigError("'model' and 'costs' sections must be mappings")
    _check_keys(model_sec, _MODEL_KEYS, "model")
    _check_keys(costs_sec, _COSTS_KEYS, "costs")

    builtin = model_sec.get("builtin")
    dbm_p = gbm_p = None
    if builtin is not None:
        model, costs, dbm_p, gbm_p = _build_builtin(builtin, model_sec, costs_sec)
    else:
        model = _build_expression_model(model_sec)
        costs = _build_expression_costs(costs_sec)

    out_sec = doc.get("output") or {}
    _check_keys(out_sec, _OUTPUT_KEYS, "output")

    for name, keys in (
        ("solve", _SOLVE_KEYS),
        ("verify", _VERIFY_KEYS),
        ("simulate", _SIM_KEYS),
        ("compare", _COMPARE_KEYS),
        ("export", _EXPORT_KEYS),
    ):
        sec = doc.get(name) or {}
        if not isinstance(sec, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        _check_keys(sec, keys, name)

    sim_sec = doc.get("simulate") or {}
    if "policy" in sim_sec:
        pol = sim_sec["policy"]
        if not isinstance(pol, dict) or pol.get("type") not in _POLICY_TYPES:
            raise ConfigError(
                f"simulate.policy must be a mapping with type in {sorted(_POLICY_TYPES)}"
            )

    return RunConfig(
        model=model,
        costs=costs,
        builtin=builtin,
        dbm_params=dbm_p,
        gbm_params=gbm_p,
        solve=doc.get("solve") or {},
        verify=doc.get("verify") or {},
        simulate=sim_sec,
        compare=doc.get("compare") or {},
        export=doc.get("export") or {},
        output_dir=(out_sec.get("directory") or "."),
        raw=doc,
    )


def _build_builtin(builtin: str, model_sec: dict, costs_sec: dict):
    params = model_sec.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("model.params must be a mapping")
    _check_keys(params, {"mu", "sigma"}, "model.params")
    mu = _num(params, "mu", "model.params", required=True)
    sigma = _num(params, "sigma", "model.params", required=True)
    if builtin == "dbm":
        _check_keys(costs_sec, _DBM_COST_KEYS, "costs (dbm)")
        p = DbmParams(
            mu=mu,
            sigma=sigma,
            c_b=_num(costs_sec, "c_b", "costs", required=True),
            c_h=_num(costs_sec, "c_h", "costs", required=True),
            k1=_num(costs_sec, "k1", "costs", required=True),
            k2=_num(costs_sec, "k2", "costs", 0.0),
        )
        return dbm_model(p), dbm_costs(p), p, None
    if builtin == "reflected_dbm":
        _check_keys(costs_sec, _RDBM_COST_KEYS, "costs (reflected_dbm)")
        p = DbmParams(
            mu=mu,
            sigma=sigma,
            c_h=_num(costs_sec, "c_h", "costs", required=True),
            k1=_num(costs_sec, "k1", "costs", required=True),
            k2=_num(costs_sec, "k2", "costs", 0.0),
            k5=_num(costs_sec, "k5", "costs", 0.0),
            reflected=True,
        )
        return dbm_model(p), dbm_costs(p), p, None
    if builtin == "gbm":
        _check_keys(costs_sec, _GBM_COST_KEYS, "costs (gbm)")
        p = GbmParams(
            mu=mu,
            sigma=sigma,
            k1=_num(costs_sec, "k1", "costs", required=True),
            k2=_num(costs_sec, "k2", "costs", 0.0),
            k3=_num(costs_sec, "k3", "costs", 0.0),
            k4=_num(costs_sec, "k4", "costs", 0.0),
            beta=_num(costs_sec, "beta", "costs", required=True),
            eta=_num(costs_sec, "eta", "costs", 1.0),
        )
        return gbm_model(p), gbm_costs(p), None, p
    raise ConfigError(f"unknown builtin model {builtin!r} (expected dbm, reflected_dbm or gbm)")


def _build_expression_model(sec: dict) -> DiffusionModel:
    for key in ("drift", "diffusion", "anchor"):
        if key not in sec:
            raise ConfigError(f"expression model requires key {key!r}")
    drift = compile_expression(str(sec["drift"]))
    diffusion = compile_expression(str(sec["diffusion"]))
    left = _num(sec, "left", "model", -math.inf)
    right = _num(sec, "right", "model", math.inf)
    anchor = _num(sec, "anchor", "model", required=True)
    return DiffusionModel(
        drift=drift,
        diffusion=diffusion,
        left=left,
        right=right,
        anchor=anchor,
        reflected_left=bool(sec.get("reflected_left", False)),
        kind="expression",
        params={"drift": str(sec["drift"]), "diffusion": str(sec["diffusion"])},
    )


def _build_expression_costs(sec: dict) -> CostModel:
    k1 = _num(sec, "k1", "costs", required=True)
    if "c0" in sec:
        c0 = Fn(compile_expression(str(sec["c0"])), name=str(sec["c0"]))
        c0_kind = "generic"
    elif "c_b" in sec and "c_h" in sec:
        c0 = holding_piecewise_linear(_num(sec, "c_b", "costs"), _num(sec, "c_h", "costs"))
        c0_kind = "piecewise_linear"
    elif "k3" in sec or "k4" in sec:
        c0 = holding_power(_num(sec, "k3", "costs", 0.0), _num(sec, "k4", "costs", 0.0), _num(sec, "beta", "costs", -1.0))
        c0_kind = "power"
    else:
        raise ConfigError("expression costs require 'c0' or a builtin holding family")
    if "H" in sec:
        H = Fn(compile_expression(str(sec["H"])), name=str(sec["H"]))
        h_kind = "generic"
    elif "eta" in sec:
        H = ordering_power(_num(sec, "k2", "costs", 0.0), _num(sec, "eta", "costs", 1.0))
        h_kind = "power"
    else:
        H = ordering_linear(_num(sec, "k2", "costs", 0.0))
        h_kind = "linear"
    params = {k: float(v) for k, v in sec.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}
    return CostModel(c0=c0, H=H, k1=k1, c0_kind=c0_kind, H_kind=h_kind, params=params)


def sim_config_from(sec: dict, seed_override=None, threads=1) -> SimConfig:
    kwargs = {}
    if "seed" in sec:
        kwargs["seed"] = int(sec["seed"])
    if seed_override is not None:
        kwargs["seed"] = int(seed_override)
    for key in ("dt", "horizon", "burn_in", "x0"):
        if key in sec and sec[key] is not None:
            kwargs[key] = float(sec[key])
    for key in ("paths", "hist_bins", "block_steps"):
        if key in sec:
            kwargs[key] = int(sec[key])
    if sec.get("hist_range") is not None:
        lo, hi = sec["hist_range"]
        kwargs["hist_range"] = (float(lo), float(hi))
    kwargs["threads"] = threads
    return SimConfig(**kwargs)


def policy_from(sec: dict, solve_result=None):
    pol = sec.get("policy") or {"type": "optimal"}
    t = pol.get("type")
    if t == "order_up_to":
        return OrderUpTo(float(pol["y"]), float(pol["z"]))
    if t == "delayed_trigger":
        return DelayedTrigger(float(pol["trigger"]), float(pol["reorder"]), float(pol["target"]))
    if t == "just_in_time":
        return JustInTime()
    if t == "optimal":
        if solve_result is None or not solve_result.found:
            raise ConfigError("policy 'optimal' requires a successful solve")
        return OrderUpTo(solve_result.y_star, solve_result.z_star)
    raise ConfigError(f"unknown policy type {t!r}")
