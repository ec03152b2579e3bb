"""Experiment configuration and the canned studies behind the command line.

Configs are INI-style text (sections of ``key = value`` lines). Every study
returns :class:`Table` objects; :func:`write_table` turns them into
whitespace-delimited column files whose header echoes the effective config.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from elastodg.constitutive import LAWS, get_law
from elastodg.diagnostics import (
    convergence_rates,
    error_norms,
    iteration_stats,
    mean_variation,
    total_variation,
)
from elastodg.errors import ConstitutiveViolation, InvalidArgument, NumericalError
from elastodg.limiters import KINDS, LimiterConfig
from elastodg.mesh import DGFunction, DGSpace, build_mesh, legendre_table
from elastodg.problems import PROBLEMS
from elastodg.rkdg import RKDGConfig, generate_reference, run_rkdg, sample_points
from elastodg.variational import FixedRatio, GDConfig, RateStudyRule, run_simulation

SOLVERS = ("variational", "rkdg-euler", "rkdg-rk3")
RULES = ("ratio", "rate-study")
PROBLEM_NAMES = tuple(PROBLEMS) + ("custom",)

# section -> keys, in the order they are echoed
SECTIONS = {
    "problem": ("problem", "law", "x_left", "x_right", "custom_u0", "custom_v0"),
    "discretization": ("N", "K", "T", "rule", "ratio", "c_rk", "mu"),
    "solver": ("solver", "limiter", "tvb_M", "characteristic"),
    "gd": (
        "lambda_init",
        "tol_I",
        "tol_u",
        "max_iter",
        "adaptive",
        "lambda_cap",
        "lambda_min",
        "c_roff",
        "warm_start",
        "u_traces",
    ),
    "study": ("tolerances", "capped_N", "capped_max_iter"),
    "reference": ("ref_N", "ref_K", "ref_cfl"),
    "output": ("out",),
}

# names usable in custom initial-data expressions
_EXPR_NAMES = {
    "x": None,
    "pi": np.pi,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "where": np.where,
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "smooth"
    law: str = "cubic"
    x_left: float = 0.0
    x_right: float = 8.0
    custom_u0: str = ""
    custom_v0: str = ""
    N: tuple = (80,)
    K: int = 1
    T: float = 0.25
    rule: str = "ratio"
    ratio: float = 1.0 / 12.0
    c_rk: float = 0.125
    mu: float = 1.0
    solver: str = "variational"
    limiter: str = "none"
    tvb_M: float = 0.0
    characteristic: bool = True
    lambda_init: float = 0.25
    tol_I: float = 1e-14
    tol_u: float = 1e-14
    max_iter: int = 250
    adaptive: bool = False
    lambda_cap: str = "none"
    lambda_min: float = 0.25
    c_roff: float = 1e-10
    warm_start: bool = False
    u_traces: str = "previous"
    tolerances: tuple = (1e-14, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4)
    capped_N: tuple = ()
    capped_max_iter: int = 10
    ref_N: int = 1280
    ref_K: int = 3
    ref_cfl: float = 0.05
    out: str = "results"

    def __post_init__(self):
        checks = [
            (self.problem in PROBLEM_NAMES, f"problem must be one of {PROBLEM_NAMES}"),
            (self.law in LAWS, f"law must be one of {tuple(LAWS)}"),
            (self.x_right > self.x_left, "x_right must exceed x_left"),
            (len(self.N) >= 1 and all(n >= 2 for n in self.N), "N entries must be >= 2"),
            (self.K >= 0, "K must be >= 0"),
            (self.T >= 0, "T must be non-negative"),
            (self.rule in RULES, f"rule must be one of {RULES}"),
            (self.ratio > 0 and self.c_rk > 0, "time-step constants must be positive"),
            (self.mu >= 0, "penalty mu must be non-negative"),
            (self.solver in SOLVERS, f"solver must be one of {SOLVERS}"),
            (self.limiter in KINDS, f"limiter must be one of {KINDS}"),
            (all(t > 0 for t in self.tolerances), "tolerances must be positive"),
            (self.ref_N >= 2 and self.ref_K >= 0 and self.ref_cfl > 0, "invalid reference settings"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidArgument(msg)
        if self.problem == "custom" and not (self.custom_u0 and self.custom_v0):
            raise InvalidArgument("custom problem needs custom_u0 and custom_v0 expressions")
        # surface GD / limiter validation early
        self.gd_config()
        self.limiter_config()

    # -- builders ---------------------------------------------------------

    def gd_config(self, **overrides) -> GDConfig:
        kw = dict(
            lambda_init=self.lambda_init,
            tol_I=self.tol_I,
            tol_u=self.tol_u,
            max_iter=self.max_iter,
            adaptive=self.adaptive,
            lambda_cap=self.lambda_cap,
            lambda_min=self.lambda_min,
            c_roff=self.c_roff,
            warm_start=self.warm_start,
            u_traces=self.u_traces,
        )
        kw.update(overrides)
        return GDConfig(**kw)

    def limiter_config(self) -> LimiterConfig:
        return LimiterConfig(self.limiter, self.tvb_M, self.characteristic)

    def time_rule(self):
        return FixedRatio(self.ratio) if self.rule == "ratio" else RateStudyRule(self.c_rk)

    def space(self, N: int, K: int | None = None) -> DGSpace:
        return DGSpace(build_mesh(self.x_left, self.x_right, N), self.K if K is None else K)

    def initial_data(self):
        if self.problem != "custom":
            return PROBLEMS[self.problem]
        return _expression(self.custom_u0), _expression(self.custom_v0)

    # -- serialization ----------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for section, keys in SECTIONS.items():
            cp[section] = {k: _fmt_value(getattr(self, k)) for k in keys}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def header_lines(self) -> list[str]:
        out = []
        for section, keys in SECTIONS.items():
            for k in keys:
                out.append(f"[{section}] {k} = {_fmt_value(getattr(self, k))}")
        return out


_TYPES = {f.name: f.default for f in fields(ExperimentConfig)}


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return " ".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_value(key: str, text: str):
    default = _TYPES[key]
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(text)
            return low in ("true", "yes", "1", "on")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return _parse_float(text)
        if isinstance(default, tuple):
            conv = int if key in ("N", "capped_N") else _parse_float
            return tuple(conv(t) for t in text.replace(",", " ").split())
        return text
    except ValueError:
        raise InvalidArgument(f"bad value for {key!r}: {text!r}") from None


def _parse_float(text: str) -> float:
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def parse_config(text: str = "", overrides: dict | None = None) -> ExperimentConfig:
    """Config from INI text plus already-typed ``overrides`` (flags win)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidArgument(f"malformed config: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise InvalidArgument(f"unknown config section [{section}]")
        for key, raw in cp[section].items():
            if key not in SECTIONS[section]:
                raise InvalidArgument(f"unknown key {key!r} in [{section}]")
            values[key] = _parse_value(key, raw)
    for key, val in (overrides or {}).items():
        if key not in _TYPES:
            raise InvalidArgument(f"unknown setting {key!r}")
        if val is not None:
            values[key] = tuple(val) if isinstance(_TYPES[key], tuple) else val
    return ExperimentConfig(**values)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8") if path else ""
    return parse_config(text, overrides)


def _expression(src: str):
    code = compile(src, "<initial data>", "eval")
    bad = set(code.co_names) - set(_EXPR_NAMES)
    if bad:
        raise InvalidArgument(f"unsupported names in expression {src!r}: {sorted(bad)}")

    def f(x):
        ns = dict(_EXPR_NAMES, x=np.asarray(x, dtype=float))
        val = eval(code, {"__builtins__": {}}, ns)  # names vetted above
        return np.broadcast_to(np.asarray(val, dtype=float), np.shape(x)).copy()

    return f


# ---------------------------------------------------------------------------
# tables


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def column(self, name):
        j = self.columns.index(name)
        return [r[j] for r in self.rows]


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "undef"
    return f"{v:.6e}"


def format_table(table: Table, config: ExperimentConfig | None = None) -> str:
    lines = []
    if config is not None:
        lines += ["# " + h for h in config.header_lines()]
    lines += ["# " + n for n in table.notes]
    widths = [max(len(c), 13) for c in table.columns]
    lines.append(" ".join(c.rjust(w) for c, w in zip(table.columns, widths)))
    for row in table.rows:
        lines.append(" ".join(_cell(v).rjust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def write_table(table: Table, directory, config: ExperimentConfig | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{table.name}.dat"
    path.write_text(format_table(table, config), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# single runs


@dataclass
class RunOutput:
    u0: DGFunction
    v0: DGFunction
    u: DGFunction
    v: DGFunction
    steps: int
    reports: list


def solve(config: ExperimentConfig, N: int, solver: str | None = None, gd: GDConfig | None = None) -> RunOutput:
    """One simulation of ``config`` on ``N`` cells with the chosen solver."""
    from elastodg.limiters import apply_limiter
    from elastodg.mesh import project_l2

    solver = solver or config.solver
    law = get_law(config.law)
    space = config.space(N)
    f_u, f_v = config.initial_data()
    u0, v0 = project_l2(f_u, space), project_l2(f_v, space)
    lim = config.limiter_config()
    lim = None if lim.kind == "none" else lim
    if solver == "variational":
        if lim is not None:
            u0, v0 = apply_limiter(u0, v0, law, lim)
        res = run_simulation(
            u0, v0, config.T, config.time_rule(), gd or config.gd_config(), lim, law=law, mu=config.mu
        )
        return RunOutput(u0, v0, res.u, res.v, res.steps, res.reports)
    integ = "euler" if solver == "rkdg-euler" else "tvd_rk3"
    rk = RKDGConfig(integ, config.ratio, lim or LimiterConfig())
    u, v, steps = run_rkdg(u0, v0, config.T, rk, law=law, time_step=config.time_rule())
    return RunOutput(u0, v0, u, v, steps, [])


def cell_samples(f: DGFunction, per_cell: int | None = None):
    """``(x, values)`` at equispaced points of every cell, ends included.

    Cell ends are evaluated from inside the cell, so interface jumps appear
    as repeated abscissae.
    """
    n = per_cell or max(3, f.space.degree + 2)
    xi = np.linspace(-1.0, 1.0, n)
    mesh = f.space.mesh
    x = mesh.centers[:, None] + 0.5 * mesh.cell_lengths[:, None] * xi[None, :]
    vals = f.coeffs @ legendre_table(f.space.degree, xi)[0]
    return x.ravel(), vals.ravel()


def study_run(config: ExperimentConfig) -> tuple[list[Table], dict]:
    """Solution files at ``t = 0`` and ``t = T`` plus a run summary."""
    out = solve(config, config.N[0])
    tables = []
    for name, (u, v) in (("initial", (out.u0, out.v0)), ("final", (out.u, out.v))):
        x, uu = cell_samples(u)
        _, vv = cell_samples(v)
        tables.append(Table(name, ["x", "u", "v"], [list(r) for r in zip(x, uu, vv)]))
    summary = {
        "N": config.N[0],
        "steps": out.steps,
        "tv_u": total_variation(out.u),
        "tv_v": total_variation(out.v),
        "tv_u_means": mean_variation(out.u),
        "tv_v_means": mean_variation(out.v),
    }
    if out.reports:
        stats = iteration_stats(out.reports)
        summary.update(stats)
        objs = [r.objective for r in out.reports]
        summary["objective_first"] = objs[0]
        summary["objective_last"] = objs[-1]
        summary["final_lambda"] = out.reports[-1].final_lambda
    return tables, summary


# ---------------------------------------------------------------------------
# studies


def reference_for(config: ExperimentConfig, Ns) -> object:
    """RK3 fine-mesh reference sampled where the ``Ns`` meshes measure errors."""
    f_u, f_v = config.initial_data()
    pts = np.concatenate([sample_points(config.space(n)) for n in Ns])
    lim = config.limiter_config()
    return generate_reference(
        f_u,
        f_v,
        config.T,
        get_law(config.law),
        x_left=config.x_left,
        x_right=config.x_right,
        N=config.ref_N,
        K=config.ref_K,
        cfl=config.ref_cfl,
        points=pts,
        limiter=None if lim.kind == "none" else lim,
    )


RATE_COLUMNS = [
    "N",
    "l2_u",
    "rate_l2_u",
    "linf_u",
    "rate_linf_u",
    "l2_v",
    "rate_l2_v",
    "linf_v",
    "rate_linf_v",
    "steps",
    "avg_iter",
]


def study_rates(config: ExperimentConfig, reference=None) -> Table:
    """Errors and observed orders over the ``N`` list."""
    Ns = list(config.N)
    if len(Ns) < 2:
        raise InvalidArgument("a rate study needs at least two values of N")
    ref = reference or reference_for(config, sorted(set(Ns)))
    errs = []
    extra = []
    for n in Ns:
        out = solve(config, n)
        errs.append(error_norms(out.u, out.v, ref))
        avg = iteration_stats(out.reports)["avg_iterations"] if out.reports else None
        extra.append((out.steps, avg))
    rates = {
        key: convergence_rates(Ns, [getattr(e, key) for e in errs])
        for key in ("l2_u", "linf_u", "l2_v", "linf_v")
    }
    table = Table("rates", list(RATE_COLUMNS))
    undefined = 0
    for i, n in enumerate(Ns):
        row = [n]
        for key in ("l2_u", "linf_u", "l2_v", "linf_v"):
            r = rates[key][i]
            undefined += r is not None and math.isnan(r)
            row += [getattr(errs[i], key), r]
        row += list(extra[i])
        table.rows.append(row)
    if undefined:
        table.notes.append(f"undefined rates: {undefined} (repeated N or zero error)")
    return table


TV_COLUMNS = ["N", "opt_tv_u", "opt_tv_v", "euler_tv_u", "euler_tv_v", "rk3_tv_u", "rk3_tv_v"]


def study_compare_tv(config: ExperimentConfig) -> tuple[Table, Table]:
    """Variational vs forward-Euler DG vs RK3 DG; cell-mean and piecewise TV."""
    means = Table("tv", list(TV_COLUMNS), notes=["TV of cell means"])
    poly = Table("tv_polynomial", list(TV_COLUMNS), notes=["TV of the piecewise polynomials"])
    for n in config.N:
        row_m, row_p = [n], [n]
        for solver in SOLVERS:
            try:
                out = solve(config, n, solver)
            except (NumericalError, ConstitutiveViolation) as exc:
                if solver == "variational":
                    raise
                means.notes.append(f"N={n} {solver}: {exc}")
                row_m += [math.inf, math.inf]
                row_p += [math.inf, math.inf]
                continue
            row_m += [mean_variation(out.u), mean_variation(out.v)]
            row_p += [total_variation(out.u), total_variation(out.v)]
        means.rows.append(row_m)
        poly.rows.append(row_p)
    return means, poly


GD_COLUMNS = ["log10_c_I", "log10_c_u", "avg_iter", "max_iter", "capped_steps", "l2_u", "l2_v"]
CAPPED_COLUMNS = ["N", "adaptive", "l2_u", "l2_v", "last_dI", "last_du", "avg_iter"]


def study_gd(config: ExperimentConfig, reference=None) -> list[Table]:
    """Stopping-tolerance sweep on ``N[0]``; optional capped fixed/adaptive runs."""
    if not config.tolerances:
        raise InvalidArgument("gd-study needs at least one tolerance")
    Ns = sorted({config.N[0], *config.capped_N})
    ref = reference or reference_for(config, Ns)
    sweep = Table("gd_study", list(GD_COLUMNS), notes=[f"N = {config.N[0]}"])
    for tol in config.tolerances:
        out = solve(config, config.N[0], "variational", config.gd_config(tol_I=tol, tol_u=tol))
        e = error_norms(out.u, out.v, ref)
        lt = math.log10(tol)
        lt = int(round(lt)) if abs(lt - round(lt)) < 1e-9 else lt
        if out.reports:
            st = iteration_stats(out.reports)
            stats = [st["avg_iterations"], st["max_iterations"], st["capped_steps"]]
        else:
            stats = [None, None, None]
        sweep.rows.append([lt, lt, *stats, e.l2_u, e.l2_v])
    tables = [sweep]
    if config.capped_N:
        capped = Table("gd_capped", list(CAPPED_COLUMNS), notes=[f"c_i = {config.capped_max_iter}"])
        for n in config.capped_N:
            for adaptive in (False, True):
                gd = config.gd_config(max_iter=config.capped_max_iter, adaptive=adaptive)
                out = solve(config, n, "variational", gd)
                e = error_norms(out.u, out.v, ref)
                last = out.reports[-1] if out.reports else None
                capped.rows.append(
                    [
                        n,
                        adaptive,
                        e.l2_u,
                        e.l2_v,
                        abs(last.last_dI) if last else None,
                        last.last_du if last else None,
                        iteration_stats(out.reports)["avg_iterations"] if out.reports else None,
                    ]
                )
        tables.append(capped)
    return tables
