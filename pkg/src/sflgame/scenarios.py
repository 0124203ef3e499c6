"""Declarative scenario runner: load a TOML config, solve, emit CSV.

A scenario names a mode (``ne``, ``stackelberg``, ``poa``, ``fit``,
``privacy``), the system constants, the client population (an explicit
list or a homogeneous template), and for the solver modes a sweep over
one variable (``R``, ``N``, ``l_c``, or ``tau_ratio``).  Output is CSV
with a fixed, documented column set per mode, 12 significant digits, and
no nondeterminism: rerunning a scenario reproduces the bytes.
"""

from __future__ import annotations

import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .followers import FollowerProblem, closed_form_ne
from .leader import LeaderProblem, round_r_to_integer, stackelberg_search
from .model import ClientProfile, CutCostModel, SystemParams
from .privacy import PrivacyTable
from .quantities import parse_quantity
from .regression import fit_report, read_samples_csv
from .welfare import WelfareProblem, price_of_anarchy

SCENARIO_DIR_ENV = "SFLGAME_SCENARIO_DIR"

_MODES = ("ne", "stackelberg", "poa", "fit", "privacy")
_SWEEPABLE = {"ne": ("R", "l_c", "N"), "stackelberg": ("N", "tau_ratio"),
              "poa": ("N", "l_c", "R")}

_SYSTEM_FIELDS = {
    # toml key -> (dataclass field, quantity kind, cast)
    "n_clients": ("n_clients", "plain", int),
    "minibatches_per_epoch": ("minibatches_per_epoch", "plain", int),
    "epochs": ("epochs", "plain", int),
    "rounds": ("rounds", "plain", int),
    "d_req": ("d_req", "plain", float),
    "bits_per_param": ("bits_per_param", "plain", float),
    "smashed_size": ("smashed_size", "size", float),
    "gradient_size": ("gradient_size", "size", float),
    "full_model": ("full_model_gflops", "gflops", float),
    "computing_intensity": ("computing_intensity", "plain", float),
    "tau1": ("tau1", "plain", float),
    "tau2": ("tau2", "plain", float),
    "r_min": ("r_min", "plain", float),
    "r_max": ("r_max", "plain", float),
    "l_min": ("l_min", "plain", int),
    "l_max": ("l_max", "plain", int),
}

_CLIENT_FIELDS = {
    "cpu_freq": ("cpu_freq", "frequency"),
    "psi": ("psi", "plain"),
    "dataset_cap": ("dataset_cap", "plain"),
    "p_compute": ("p_compute", "power"),
    "p_tx": ("p_tx", "power"),
    "p_rx": ("p_rx", "power"),
    "rate_up_main": ("rate_up_main", "rate"),
    "rate_down_main": ("rate_down_main", "rate"),
    "rate_up_fed": ("rate_up_fed", "rate"),
    "rate_down_fed": ("rate_down_fed", "rate"),
    "offset": ("offset", "plain"),
}

_COST_FIELDS = ("flops_slope", "flops_intercept", "params_scale", "params_rate")


@dataclass(frozen=True, eq=False)
class Scenario:
    """A parsed, validated scenario configuration."""

    name: str
    mode: str
    seed: int
    system_fields: dict | None
    clients: tuple[ClientProfile, ...] | None
    template: dict | None  # client kwargs for the homogeneous shorthand
    template_count: int | None
    cost_model: CutCostModel | None
    game_r: float | None
    game_l_c: int | None
    sweep_variable: str | None
    sweep_values: tuple
    tau_ratios: tuple | None
    fit_samples: Path | None
    privacy_table: Path | None
    path: Path | None = field(default=None, repr=False)


@dataclass(frozen=True)
class ResultRow:
    """One emitted CSV row: the swept value plus its computed outputs."""

    values: tuple


def _require(table: dict, key: str, context: str):
    if key not in table:
        raise ConfigError(f"{context}.{key}: required field is missing")
    return table[key]


def _no_unknown(table: dict, known, context: str):
    for key in table:
        if key not in known:
            raise ConfigError(f"{context}.{key}: unknown field")


def _parse_client(table: dict, context: str) -> dict:
    _no_unknown(table, set(_CLIENT_FIELDS) | {"count"}, context)
    kwargs = {}
    for key, (attr, kind) in _CLIENT_FIELDS.items():
        if key == "offset":
            kwargs[attr] = float(parse_quantity(table.get(key, 0.0), kind, f"{context}.{key}"))
            continue
        kwargs[attr] = float(parse_quantity(_require(table, key, context), kind, f"{context}.{key}"))
    return kwargs


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario TOML file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None

    _no_unknown(raw, {"name", "mode", "seed", "system", "cost_model", "clients",
                      "client_template", "game", "sweep", "stackelberg", "fit",
                      "privacy", "welfare"}, path.stem)
    name = raw.get("name", path.stem)
    mode = _require(raw, "mode", name)
    if mode not in _MODES:
        raise ConfigError(f"{name}.mode: {mode!r} is not one of {_MODES}")
    seed = int(raw.get("seed", 0))

    # sweep
    sweep_variable = None
    sweep_values: tuple = ()
    if mode in _SWEEPABLE:
        sweep = _require(raw, "sweep", name)
        _no_unknown(sweep, {"variable", "values"}, f"{name}.sweep")
        sweep_variable = _require(sweep, "variable", f"{name}.sweep")
        if sweep_variable not in _SWEEPABLE[mode]:
            raise ConfigError(
                f"{name}.sweep.variable: {sweep_variable!r} not valid for mode "
                f"{mode!r} (allowed: {_SWEEPABLE[mode]})")
        values = _require(sweep, "values", f"{name}.sweep")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{name}.sweep.values: must be a nonempty list")
        if any(values[i] >= values[i + 1] for i in range(len(values) - 1)):
            raise ConfigError(f"{name}.sweep.values: must be strictly ascending")
        if sweep_variable in ("N", "l_c"):
            if any(int(v) != v for v in values):
                raise ConfigError(f"{name}.sweep.values: {sweep_variable} values must be integers")
            values = [int(v) for v in values]
        sweep_values = tuple(values)
    elif "sweep" in raw:
        raise ConfigError(f"{name}.sweep: not allowed for mode {mode!r}")

    if mode in ("fit", "privacy"):
        fit_samples = privacy_table = None
        if mode == "fit":
            fit_cfg = _require(raw, "fit", name)
            _no_unknown(fit_cfg, {"samples"}, f"{name}.fit")
            fit_samples = path.parent / _require(fit_cfg, "samples", f"{name}.fit")
        else:
            privacy_cfg = raw.get("privacy", {})
            _no_unknown(privacy_cfg, {"table"}, f"{name}.privacy")
            if "table" in privacy_cfg:
                privacy_table = path.parent / privacy_cfg["table"]
            else:
                privacy_table = None
        return Scenario(name=name, mode=mode, seed=seed, system_fields=None,
                        clients=None, template=None, template_count=None,
                        cost_model=None, game_r=None, game_l_c=None,
                        sweep_variable=None, sweep_values=(), tau_ratios=None,
                        fit_samples=fit_samples, privacy_table=privacy_table, path=path)

    # solver modes need system, cost model and a client population
    system_raw = _require(raw, "system", name)
    _no_unknown(system_raw, set(_SYSTEM_FIELDS), f"{name}.system")
    system_fields = {}
    for key, (attr, kind, cast) in _SYSTEM_FIELDS.items():
        if key == "n_clients":
            if key in system_raw:
                system_fields[attr] = cast(system_raw[key])
            continue
        value = _require(system_raw, key, f"{name}.system")
        system_fields[attr] = cast(parse_quantity(value, kind, f"{name}.system.{key}"))

    cost_raw = _require(raw, "cost_model", name)
    _no_unknown(cost_raw, set(_COST_FIELDS), f"{name}.cost_model")
    try:
        cost_model = CutCostModel(**{k: float(_require(cost_raw, k, f"{name}.cost_model"))
                                     for k in _COST_FIELDS})
    except ValueError as exc:
        raise ConfigError(f"{name}.cost_model: {exc}") from None

    clients = template = template_count = None
    if "clients" in raw and "client_template" in raw:
        raise ConfigError(f"{name}: give either clients or client_template, not both")
    if sweep_variable == "N":
        if "client_template" not in raw:
            raise ConfigError(f"{name}.client_template: required when sweeping N")
    if "clients" in raw:
        rows = raw["clients"]
        if not isinstance(rows, list) or not rows:
            raise ConfigError(f"{name}.clients: must be a nonempty array of tables")
        try:
            clients = tuple(ClientProfile(**_parse_client(row, f"{name}.clients[{i}]"))
                            for i, row in enumerate(rows))
        except ValueError as exc:
            raise ConfigError(f"{name}.clients: {exc}") from None
    elif "client_template" in raw:
        table = dict(raw["client_template"])
        template_count = table.pop("count", None)
        if template_count is not None:
            template_count = int(template_count)
        template = _parse_client(table, f"{name}.client_template")
        if sweep_variable != "N" and template_count is None:
            raise ConfigError(f"{name}.client_template.count: required unless sweeping N")
    else:
        raise ConfigError(f"{name}: a clients array or client_template is required")

    explicit_n = system_fields.get("n_clients")
    if clients is not None:
        if explicit_n is not None and explicit_n != len(clients):
            raise ConfigError(f"{name}.system.n_clients: {explicit_n} != {len(clients)} clients")
        system_fields["n_clients"] = len(clients)
    elif template_count is not None:
        if explicit_n is not None and explicit_n != template_count:
            raise ConfigError(
                f"{name}.system.n_clients: {explicit_n} != client_template.count {template_count}")
        system_fields["n_clients"] = template_count

    game = raw.get("game", {})
    _no_unknown(game, {"r", "l_c"}, f"{name}.game")
    game_r = float(game["r"]) if "r" in game else None
    game_l_c = int(game["l_c"]) if "l_c" in game else None
    if mode in ("ne", "poa"):
        if sweep_variable != "R" and game_r is None:
            raise ConfigError(f"{name}.game.r: required unless sweeping R")
        if sweep_variable != "l_c" and game_l_c is None:
            raise ConfigError(f"{name}.game.l_c: required unless sweeping l_c")

    tau_ratios = None
    if "stackelberg" in raw:
        if mode != "stackelberg":
            raise ConfigError(f"{name}.stackelberg: only valid for mode 'stackelberg'")
        stk = raw["stackelberg"]
        _no_unknown(stk, {"tau_ratios"}, f"{name}.stackelberg")
        if "tau_ratios" in stk:
            if sweep_variable == "tau_ratio":
                raise ConfigError(
                    f"{name}.stackelberg.tau_ratios: redundant with a tau_ratio sweep")
            ratios = stk["tau_ratios"]
            if not isinstance(ratios, list) or not ratios:
                raise ConfigError(f"{name}.stackelberg.tau_ratios: must be a nonempty list")
            tau_ratios = tuple(float(v) for v in ratios)

    return Scenario(name=name, mode=mode, seed=seed, system_fields=system_fields,
                    clients=clients, template=template, template_count=template_count,
                    cost_model=cost_model, game_r=game_r, game_l_c=game_l_c,
                    sweep_variable=sweep_variable, sweep_values=sweep_values,
                    tau_ratios=tau_ratios, fit_samples=None, privacy_table=None,
                    path=path)


def _build_population(scenario: Scenario, n: int | None = None):
    """System params and client tuple, optionally resized to ``n`` clients."""
    fields = dict(scenario.system_fields)
    if scenario.clients is not None:
        clients = scenario.clients
    else:
        count = n if n is not None else scenario.template_count
        clients = tuple(ClientProfile(**scenario.template) for _ in range(count))
    if n is not None:
        fields["n_clients"] = n
    fields.setdefault("n_clients", len(clients))
    try:
        params = SystemParams(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{scenario.name}.system: {exc}") from None
    return params, clients


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int,)) or (isinstance(value, float) and value.is_integer()
                                     and abs(value) < 1e15):
        return str(int(value))
    return f"{value:.12g}"


def _ne_header(scenario: Scenario) -> list[str]:
    if scenario.sweep_variable == "N":
        return [scenario.sweep_variable, "d_per_client", "eta", "u_per_client"]
    n = scenario.system_fields["n_clients"]
    return ([scenario.sweep_variable]
            + [f"d{i + 1}" for i in range(n)] + ["eta"]
            + [f"u{i + 1}" for i in range(n)])


def _ne_point(scenario: Scenario, value):
    variable = scenario.sweep_variable
    params, clients = _build_population(scenario, n=value if variable == "N" else None)
    r = value if variable == "R" else scenario.game_r
    l_c = value if variable == "l_c" else scenario.game_l_c
    outcome = closed_form_ne(FollowerProblem.from_model(params, clients, scenario.cost_model,
                                                        float(r), l_c))
    if variable == "N":
        return ResultRow((value, outcome.d_star[0], outcome.eta, outcome.utilities[0]))
    return ResultRow((value, *outcome.d_star, outcome.eta, *outcome.utilities))


def _stackelberg_header(scenario: Scenario) -> list[str]:
    if scenario.sweep_variable == "N":
        return ["N", "tau1", "tau2", "r_star", "l_c_star", "u_mo", "eta",
                "d_per_client", "u_per_client"]
    n = scenario.system_fields["n_clients"]
    return (["tau_ratio", "tau1", "tau2", "r_star", "l_c_star", "u_mo", "eta"]
            + [f"d{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(n)])


def _stackelberg_point(scenario: Scenario, point, integer_r: bool = False):
    value, ratio = point
    n = value if scenario.sweep_variable == "N" else None
    params, clients = _build_population(scenario, n=n)
    if ratio is not None or scenario.sweep_variable == "tau_ratio":
        ratio = ratio if ratio is not None else value
        fields = {**scenario.system_fields, "tau1": ratio * params.tau2,
                  "n_clients": params.n_clients}
        params = SystemParams(**fields)
    problem = LeaderProblem(params, clients, scenario.cost_model)
    outcome = stackelberg_search(problem)
    if integer_r:
        outcome = round_r_to_integer(problem, outcome)
    induced = outcome.induced
    if scenario.sweep_variable == "N":
        return ResultRow((value, params.tau1, params.tau2, outcome.r_star,
                          outcome.l_c_star, outcome.u_mo, induced.eta,
                          induced.d_star[0], induced.utilities[0]))
    return ResultRow((value, params.tau1, params.tau2, outcome.r_star, outcome.l_c_star,
                      outcome.u_mo, induced.eta, *induced.d_star, *induced.utilities))


def _poa_header(scenario: Scenario) -> list[str]:
    return [scenario.sweep_variable, "poa", "welfare_opt", "welfare_ne",
            "eta_ne", "eta_opt"]


def _poa_point(scenario: Scenario, value):
    variable = scenario.sweep_variable
    params, clients = _build_population(scenario, n=value if variable == "N" else None)
    r = value if variable == "R" else scenario.game_r
    l_c = value if variable == "l_c" else scenario.game_l_c
    follower = FollowerProblem.from_model(params, clients, scenario.cost_model, float(r), l_c)
    report = price_of_anarchy(WelfareProblem.from_follower(follower), seed=scenario.seed)
    return ResultRow((value, report.poa, report.welfare_opt, report.welfare_ne,
                      float(report.d_ne.sum()), float(report.d_opt.sum())))


def _run_fit(scenario: Scenario):
    samples = read_samples_csv(scenario.fit_samples)
    report = fit_report(samples)
    header = ["model", "coef0", "coef1", "rmse", "n_samples"]
    rows = []
    if report.flops_slope is not None:
        rows.append(ResultRow(("flops_linear", report.flops_slope, report.flops_intercept,
                               report.rmse_flops, report.n_samples)))
    if report.params_scale is not None:
        rows.append(ResultRow(("params_exponential", report.params_scale, report.params_rate,
                               report.rmse_params, report.n_samples)))
    return header, rows


def _run_privacy(scenario: Scenario):
    table = (PrivacyTable.from_csv(scenario.privacy_table)
             if scenario.privacy_table else PrivacyTable.default())
    header = ["l_c", "sigma", "accuracy", "ssim"]
    rows = [ResultRow((rec.l_c, rec.sigma, rec.accuracy, rec.ssim)) for rec in table.records]
    return header, rows


def run_scenario(scenario: Scenario | str | Path, out=None, jobs: int = 1,
                 integer_r: bool = False) -> list[str]:
    """Execute a scenario and write its CSV to ``out`` (default stdout).

    Sweep points are independent and may be evaluated concurrently with
    ``jobs > 1``; rows are always emitted in sweep order.  Returns the
    emitted lines (without newlines).
    """
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    if scenario.mode == "fit":
        header, rows = _run_fit(scenario)
    elif scenario.mode == "privacy":
        header, rows = _run_privacy(scenario)
    else:
        if scenario.mode == "stackelberg":
            ratios = scenario.tau_ratios if scenario.tau_ratios is not None else (None,)
            points = [(value, ratio) for value in scenario.sweep_values for ratio in ratios]

            def point_fn(p):
                return _stackelberg_point(scenario, p, integer_r=integer_r)

            header = _stackelberg_header(scenario)
        else:
            points = list(scenario.sweep_values)
            mode_fn = {"ne": _ne_point, "poa": _poa_point}[scenario.mode]

            def point_fn(p):
                return mode_fn(scenario, p)

            header = {"ne": _ne_header, "poa": _poa_header}[scenario.mode](scenario)
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(point_fn, points))
        else:
            rows = [point_fn(p) for p in points]

    lines = [",".join(header)]
    lines.extend(",".join(_format(v) for v in row.values) for row in rows)
    stream = out if out is not None else sys.stdout
    for line in lines:
        stream.write(line + "\n")
    return lines


def bundled_scenario_dir() -> Path:
    return Path(str(resources.files("sflgame").joinpath("data", "scenarios")))


def scenario_dirs(extra_dirs=()) -> list[Path]:
    """Bundled directory, then ``SFLGAME_SCENARIO_DIR``, then explicit extras."""
    dirs = [bundled_scenario_dir()]
    env = os.environ.get(SCENARIO_DIR_ENV)
    if env:
        dirs.append(Path(env))
    dirs.extend(Path(d) for d in extra_dirs)
    for directory in dirs[1:]:
        if not directory.is_dir():
            raise ConfigError(f"scenario directory not found: {directory}")
    return dirs


def list_scenarios(extra_dirs=()) -> list[str]:
    """Names of every discoverable scenario, bundled ones first."""
    names = []
    for directory in scenario_dirs(extra_dirs):
        for path in sorted(directory.glob("*.toml")):
            if path.stem not in names:
                names.append(path.stem)
    return names


def resolve_scenario(name_or_path, extra_dirs=()) -> Path:
    """Interpret a CLI argument as a path or a discoverable scenario name."""
    direct = Path(name_or_path)
    if direct.is_file():
        return direct
    stem = str(name_or_path).removesuffix(".toml")
    for directory in reversed(scenario_dirs(extra_dirs)):  # extras override bundled
        candidate = directory / f"{stem}.toml"
        if candidate.is_file():
            return candidate
    raise ConfigError(f"no scenario named {name_or_path!r} "
                      f"(known: {', '.join(list_scenarios(extra_dirs))})")
