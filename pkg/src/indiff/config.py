"""Scenario configuration: TOML in, validated model builders out.

A scenario file names a model family, the per-index schedules, a task, and
output options.  Schedules admit the closed forms the scalings are usually
written in (powers, logs, reciprocals of ``n``) as expression strings, a
bare number for constants, or an explicit list paired positionally with
``task_args.n_list``.

Expressions are parsed with :mod:`ast` and only arithmetic on the index
variable plus a short whitelist of functions is allowed; there is no access
to builtins or attribute lookups, so a config file cannot execute anything.

Unknown keys anywhere are rejected by name rather than ignored: a typo in a
tolerance should fail the run, not silently change its meaning.
"""

from __future__ import annotations

import ast
import hashlib
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import RateSchedule, RiskAversionSchedule
from .errors import ConfigError
from .models.basis_risk import BasisRiskModel, BasisRiskParams, MonteCarloConfig
from .models.default_bond import DefaultBondModel, DefaultBondParams
from .models.gaussian import GaussianResidualModel, GaussianResidualParams
from .models.transaction import PdeConfig, TransactionCostModel, TransCostParams

__all__ = [
    "ScenarioConfig",
    "load_config",
    "compile_expression",
]

_ALLOWED_FUNCS: Dict[str, Callable] = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
}
_ALLOWED_CONSTS = {"pi": math.pi, "e": math.e}

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load,
)


def compile_expression(expr: str, variable: str) -> Callable[[Any], Any]:
    """Compile an arithmetic expression of one variable, safely.

    Only numbers, the named variable, ``+ - * / **``, unary sign, and calls
    to exp/log/sqrt/tanh/abs/sin/cos are admitted.  Anything else (names,
    attributes, subscripts, comprehensions) raises :class:`ConfigError`.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc.msg}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigError(
                f"expression {expr!r} uses a disallowed construct: "
                f"{type(node).__name__}"
            )
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_FUNCS:
                raise ConfigError(
                    f"expression {expr!r} calls something other than "
                    f"{sorted(_ALLOWED_FUNCS)}"
                )
            if node.keywords or len(node.args) != 1:
                raise ConfigError(
                    f"expression {expr!r}: functions take exactly one argument"
                )
        if isinstance(node, ast.Name) and node.id not in (
            variable, *_ALLOWED_FUNCS, *_ALLOWED_CONSTS,
        ):
            raise ConfigError(
                f"expression {expr!r} references unknown name {node.id!r}; "
                f"only {variable!r}, functions and pi/e are in scope"
            )
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ConfigError(f"expression {expr!r} contains a non-numeric constant")
    code = compile(tree, "<schedule>", "eval")
    env = {"__builtins__": {}, **_ALLOWED_FUNCS, **_ALLOWED_CONSTS}

    def fn(x: Any) -> Any:
        return eval(code, env, {variable: x})  # noqa: S307 - AST whitelisted above

    return fn


def _schedule_fn(
    value: Any, where: str, n_list: Optional[Sequence[int]]
) -> Callable[[int], float]:
    """A per-index callable from a number, an expression, or a list."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected number, expression or list")
    if isinstance(value, (int, float)):
        return lambda n, v=float(value): v
    if isinstance(value, str):
        f = compile_expression(value, "n")
        return lambda n: float(f(n))
    if isinstance(value, list):
        if n_list is None:
            raise ConfigError(
                f"{where}: a list schedule needs task_args.n_list to pair with"
            )
        if len(value) != len(n_list):
            raise ConfigError(
                f"{where}: list length {len(value)} != n_list length {len(n_list)}"
            )
        table = {int(n): float(v) for n, v in zip(n_list, value)}
        return lambda n: table[int(n)]
    raise ConfigError(f"{where}: expected number, expression or list, got {type(value).__name__}")


def _check_keys(section: Dict[str, Any], allowed: Sequence[str], where: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where} (allowed: {sorted(allowed)})")


def _get(section: Dict[str, Any], key: str, where: str) -> Any:
    if key not in section:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return section[key]


_TASKS = ("price", "curve", "limit", "rates", "position", "equilibrium", "pde", "sweep")

_ROOT_KEYS = ("scenario_id", "task", "seed", "model", "schedules", "task_args",
              "output", "tolerances")
_SCHEDULE_KEYS = ("ra", "rate", "p_tilde")
_OUTPUT_KEYS = ("format", "path")
_TOL_KEYS = ("cauchy", "position", "equilibrium", "validation")
_TASK_ARG_KEYS = ("n", "n_list", "q", "q_grid", "ell", "ell_grid", "p_tilde",
                  "b", "a1", "a2", "b1", "b2", "ell_cap")

_MODEL_KEYS: Dict[str, Sequence[str]] = {
    "gaussian": ("family", "d", "gamma2"),
    "basis_risk": ("family", "mu", "sigma", "drift", "a_y", "rho", "horizon",
                   "y0", "payoff", "route", "paths", "time_steps", "antithetic"),
    "default_bond": ("family", "mu", "sigma", "intensity", "horizon", "steps",
                     "variant"),
    "transaction": ("family", "sigma", "strike", "maturity", "spot",
                    "valuation_time", "cost", "space_points", "time_steps",
                    "s_max_mult"),
}


@dataclass
class ScenarioConfig:
    """One validated scenario, with builders for the model and schedules."""

    scenario_id: str
    task: str
    seed: int
    model_section: Dict[str, Any]
    schedules: Dict[str, Any]
    task_args: Dict[str, Any]
    output_format: str
    output_path: Optional[str]
    tolerances: Dict[str, float] = field(default_factory=dict)
    config_sha256: str = ""

    @property
    def n_list(self) -> Optional[List[int]]:
        raw = self.task_args.get("n_list")
        return None if raw is None else [int(n) for n in raw]

    def build_model(self):
        """Instantiate the configured model family."""
        sec = self.model_section
        family = sec["family"]
        if family == "gaussian":
            return GaussianResidualModel(GaussianResidualParams(
                d_schedule=_schedule_fn(_get(sec, "d", "model"), "model.d", self.n_list),
                gamma2_schedule=_schedule_fn(
                    _get(sec, "gamma2", "model"), "model.gamma2", self.n_list
                ),
            ))
        if family == "basis_risk":
            payoff_expr = _get(sec, "payoff", "model")
            if not isinstance(payoff_expr, str):
                raise ConfigError("model.payoff: expected an expression of y")
            payoff = compile_expression(payoff_expr, "y")
            mc = MonteCarloConfig(
                paths=int(sec.get("paths", 200_000)),
                time_steps=int(sec.get("time_steps", 252)),
                seed=self.seed,
                antithetic=bool(sec.get("antithetic", True)),
            )
            params = BasisRiskParams(
                mu=float(_get(sec, "mu", "model")),
                sigma=float(_get(sec, "sigma", "model")),
                b=float(sec.get("drift", 0.0)),
                a_y=float(_get(sec, "a_y", "model")),
                rho_schedule=_schedule_fn(
                    _get(sec, "rho", "model"), "model.rho", self.n_list
                ),
                horizon=float(sec.get("horizon", 1.0)),
                y0=float(sec.get("y0", 0.0)),
                payoff=payoff,
                mc=mc,
            )
            route = sec.get("route", "mc")
            if route not in ("mc", "quadrature"):
                raise ConfigError(f"model.route must be mc or quadrature, got {route!r}")
            return BasisRiskModel(params, route=route)
        if family == "default_bond":
            params = DefaultBondParams(
                mu=float(_get(sec, "mu", "model")),
                sigma=float(_get(sec, "sigma", "model")),
                lambda_schedule=_schedule_fn(
                    _get(sec, "intensity", "model"), "model.intensity", self.n_list
                ),
                horizon=float(sec.get("horizon", 1.0)),
                fixed_point_variant=sec.get("variant", "as_printed"),
            )
            return DefaultBondModel(params, steps=int(sec.get("steps", 400)))
        if family == "transaction":
            pde = PdeConfig(
                space_points=int(sec.get("space_points", 801)),
                time_steps=int(sec.get("time_steps", 256)),
                s_max_mult=(float(sec["s_max_mult"]) if "s_max_mult" in sec else None),
            )
            cost = (
                _schedule_fn(sec["cost"], "model.cost", self.n_list)
                if "cost" in sec else None
            )
            return TransactionCostModel(TransCostParams(
                sigma=float(_get(sec, "sigma", "model")),
                strike=float(_get(sec, "strike", "model")),
                maturity=float(_get(sec, "maturity", "model")),
                spot=float(_get(sec, "spot", "model")),
                valuation_time=float(sec.get("valuation_time", 0.0)),
                cost_schedule=cost,
                pde=pde,
            ))
        raise ConfigError(f"unknown model.family {family!r}")

    def ra_schedule(self) -> RiskAversionSchedule:
        raw = self.schedules.get("ra", 1.0)
        return RiskAversionSchedule(
            _schedule_fn(raw, "schedules.ra", self.n_list), label=str(raw)
        )

    def rate_schedule(self) -> RateSchedule:
        if "rate" not in self.schedules:
            model = self.build_model()
            if hasattr(model, "default_rate_schedule"):
                return model.default_rate_schedule()
            if hasattr(model, "rate"):
                return RateSchedule(model.rate, label="model rate")
            raise ConfigError("schedules.rate is required for this model")
        raw = self.schedules["rate"]
        return RateSchedule(
            _schedule_fn(raw, "schedules.rate", self.n_list), label=str(raw)
        )

    def p_tilde_schedule(self) -> Callable[[int], float]:
        if "p_tilde" not in self.schedules:
            raise ConfigError("missing required key 'p_tilde' in schedules")
        return _schedule_fn(self.schedules["p_tilde"], "schedules.p_tilde", self.n_list)

    def tolerance(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))


def _validate(raw: Dict[str, Any], default_id: str) -> ScenarioConfig:
    _check_keys(raw, _ROOT_KEYS, "scenario root")
    task = raw.get("task")
    if task is None:
        raise ConfigError("missing required key 'task' in scenario root")
    if task not in _TASKS:
        raise ConfigError(f"task must be one of {_TASKS}, got {task!r}")

    model_sec = raw.get("model")
    if not isinstance(model_sec, dict):
        raise ConfigError("missing required key 'model' in scenario root")
    family = model_sec.get("family")
    if family is None:
        raise ConfigError("missing required key 'family' in model")
    if family not in _MODEL_KEYS:
        raise ConfigError(
            f"model.family must be one of {sorted(_MODEL_KEYS)}, got {family!r}"
        )
    _check_keys(model_sec, _MODEL_KEYS[family], f"model ({family})")

    schedules = raw.get("schedules", {})
    _check_keys(schedules, _SCHEDULE_KEYS, "schedules")
    task_args = raw.get("task_args", {})
    _check_keys(task_args, _TASK_ARG_KEYS, "task_args")
    tolerances = raw.get("tolerances", {})
    _check_keys(tolerances, _TOL_KEYS, "tolerances")

    output = raw.get("output", {})
    _check_keys(output, _OUTPUT_KEYS, "output")
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"output.format must be csv or jsonl, got {fmt!r}")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    return ScenarioConfig(
        scenario_id=str(raw.get("scenario_id", default_id)),
        task=str(task),
        seed=seed,
        model_section=model_sec,
        schedules=schedules,
        task_args=task_args,
        output_format=str(fmt),
        output_path=output.get("path"),
        tolerances={k: float(v) for k, v in tolerances.items()},
    )


def load_config(path: str) -> ScenarioConfig:
    """Parse and validate one scenario file."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    try:
        raw = tomllib.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    default_id = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    cfg = _validate(raw, default_id)
    cfg.config_sha256 = hashlib.sha256(blob).hexdigest()
    return cfg
