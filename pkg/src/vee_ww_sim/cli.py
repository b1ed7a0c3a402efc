"""Command-line front end.

Subcommands: weak-value, tau-curve, evolve, mc, compare. Configuration comes
from a JSON file (or a builtin preset name) plus flag overrides; every output
file embeds the fully resolved configuration so artifacts are self-describing.
Computation always runs in natural units gamma = 1; when the config provides
an SI block (omega, eta, delta) the outputs carry SI columns as well.

Exit codes: 0 success, 2 config error, 3 unphysical-region scalar request,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bath import FieldConstants, build_bath, evolve_kernel, evolve_modes, fit_decay_rate, gamma_from_dipole
from .errors import (
    ConfigError,
    EnvelopeViolation,
    NonFiniteAmplitude,
    OrthogonalPrePost,
    StepSizeTooLarge,
    UnphysicalRegion,
)
from .markov import (
    FORM_FULL_COT,
    FORM_SMALL_EPSILON,
    ModelParams,
    effective_rate,
    tau_curve,
)
from .qstate import postselect_state, sigma_z, symmetric_state, weak_value
from .trajectory import RngSpec, sample_conditional_arrivals, sample_scattering_times

_HALF_PI = math.pi / 2

_BUILTIN_CONFIGS = {
    "fig2": {
        "params": {"delta_over_gamma": 0.1, "form": FORM_SMALL_EPSILON},
        "grid": {"min": 0.11, "max": _HALF_PI, "count": 200, "spacing": "log"},
    },
    "fig3": {
        "params": {"delta_over_gamma": 0.01, "form": FORM_SMALL_EPSILON},
        "grid": {"min": 0.011, "max": _HALF_PI, "count": 200, "spacing": "log"},
    },
}

_FORM_ALIASES = {
    "cot": FORM_FULL_COT,
    "full-cot": FORM_FULL_COT,
    "small": FORM_SMALL_EPSILON,
    "small-epsilon": FORM_SMALL_EPSILON,
}

_TOP_KEYS = {"mode", "params", "si", "grid", "bath", "mc", "out", "plot"}
_PARAM_KEYS = {"delta_over_gamma", "epsilon", "form", "strict"}
_SI_KEYS = {"omega", "eta", "delta", "constants"}
_BATH_KEYS = {"cutoff_over_gamma", "n_modes", "dt_gamma", "t_end_gamma", "postselect", "engine"}
_MC_KEYS = {"n", "seed", "stream", "workers", "model"}

_DEFAULT_OUT = {
    "weak-value": "weak_value.json",
    "tau-curve": "tau_curve.csv",
    "evolve": "evolve.csv",
    "mc": "mc_samples.csv",
    "compare": "compare.csv",
}


def _check_keys(block: dict, allowed: set, what: str):
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")


def _load_user_config(name_or_path: str | None) -> dict:
    if not name_or_path:
        return {}
    if name_or_path in _BUILTIN_CONFIGS:
        return copy.deepcopy(_BUILTIN_CONFIGS[name_or_path])
    try:
        text = Path(name_or_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {name_or_path!r}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {name_or_path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = _load_user_config(args.config)
    _check_keys(cfg, _TOP_KEYS, "config")
    if cfg.get("mode") not in (None, args.mode):
        raise ConfigError(f"config mode {cfg.get('mode')!r} does not match subcommand {args.mode!r}")
    cfg["mode"] = args.mode

    params = dict(cfg.get("params") or {})
    _check_keys(params, _PARAM_KEYS, "params")
    if args.delta_over_gamma is not None:
        params["delta_over_gamma"] = args.delta_over_gamma
    if args.epsilon is not None:
        params["epsilon"] = args.epsilon
    if args.form is not None:
        params["form"] = args.form
    form = params.get("form", FORM_FULL_COT if args.mode == "compare" else FORM_SMALL_EPSILON)
    if form not in _FORM_ALIASES:
        raise ConfigError(f"unknown form {form!r}")
    params["form"] = _FORM_ALIASES[form]
    params.setdefault("strict", True)
    cfg["params"] = params

    if "si" in cfg:
        _check_keys(cfg["si"] or {}, _SI_KEYS, "si")
        if "delta_over_gamma" in params:
            raise ConfigError("the si block and params.delta_over_gamma are mutually exclusive")
    else:
        params.setdefault("delta_over_gamma", 0.1)

    if args.out is not None:
        cfg["out"] = args.out
    cfg.setdefault("out", _DEFAULT_OUT[args.mode])

    if args.mode in ("evolve", "compare"):
        bath = dict(cfg.get("bath") or {})
        _check_keys(bath, _BATH_KEYS, "bath")
        small = args.mode == "compare"
        bath.setdefault("cutoff_over_gamma", 25.0 if small else 50.0)
        bath.setdefault("n_modes", 1024 if small else 4096)
        bath.setdefault("dt_gamma", 0.1 / float(bath["cutoff_over_gamma"]))
        bath.setdefault("t_end_gamma", 3.0)
        bath.setdefault("postselect", True)
        bath.setdefault("engine", "modes")
        if bath["engine"] not in ("modes", "kernel"):
            raise ConfigError(f"unknown engine {bath['engine']!r}")
        cfg["bath"] = bath

    if args.mode in ("mc", "compare"):
        mc = dict(cfg.get("mc") or {})
        _check_keys(mc, _MC_KEYS, "mc")
        mc.setdefault("n", 20_000 if args.mode == "compare" else 100_000)
        mc.setdefault("seed", 42)
        mc.setdefault("stream", 0)
        mc.setdefault("workers", 1)
        mc.setdefault("model", "scattering")
        if args.seed is not None:
            mc["seed"] = args.seed
        if args.n is not None:
            mc["n"] = args.n
        if mc["model"] not in ("scattering", "conditional"):
            raise ConfigError(f"unknown mc model {mc['model']!r}")
        if int(mc["n"]) < 100:
            raise ConfigError("mc.n must be at least 100")
        cfg["mc"] = mc

    if getattr(args, "plot", None):
        cfg["plot"] = args.plot
    if cfg.get("plot") is not None and args.mode != "tau-curve":
        raise ConfigError("plot output is only available for tau-curve")
    return cfg


def _params_from(cfg: dict, need_epsilon: bool = True) -> tuple[ModelParams, float | None]:
    """Natural-unit ModelParams plus the SI gamma when an SI block is present."""
    p = cfg["params"]
    gamma_si = None
    if "si" in cfg:
        si = cfg["si"]
        try:
            consts = FieldConstants(**(si.get("constants") or {}))
            gamma_si = gamma_from_dipole(float(si["omega"]), float(si["eta"]), consts)
            ratio = float(si["delta"]) / gamma_si
        except KeyError as exc:
            raise ConfigError(f"si block is missing {exc}") from exc
        except TypeError as exc:
            raise ConfigError(f"bad si block: {exc}") from exc
    else:
        ratio = float(p["delta_over_gamma"])
    eps = p.get("epsilon")
    if eps is None:
        if need_epsilon:
            raise ConfigError("params.epsilon is required for this mode")
        eps = _HALF_PI  # placeholder; grid-driven modes never read it
    try:
        return ModelParams.natural(ratio, float(eps), strict=bool(p.get("strict", True))), gamma_si
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _config_line(cfg: dict) -> str:
    return "# config: " + json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _write_csv(path, columns, rows, cfg) -> Path:
    path = Path(path)
    lines = [_config_line(cfg), ",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))
    return path


def _write_json(path, obj) -> Path:
    path = Path(path)
    path.write_bytes((json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return path


def read_table(path):
    """Parse a CSV written by this tool: (config, column names, float rows)."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").split("\n") if ln]
    cfg = None
    if lines and lines[0].startswith("# config: "):
        cfg = json.loads(lines[0][len("# config: "):])
        lines = lines[1:]
    columns = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return cfg, columns, rows


def _write_svg(path, xs, ys, cfg) -> Path:
    """Minimal static polyline rendering of tau*Gamma vs epsilon."""
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        raise ValueError("no finite curve points to plot")
    xlo, xhi = min(p[0] for p in pts), max(p[0] for p in pts)
    yhi = min(max(p[1] for p in pts), 25.0)
    width, height = 640, 480
    ml, mr, mt, mb = 70, 20, 20, 50
    span_x = (xhi - xlo) or 1.0

    def sx(x):
        return ml + (x - xlo) / span_x * (width - ml - mr)

    def sy(y):
        return height - mb - min(y, yhi) / yhi * (height - mt - mb)

    points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
    comment = json.dumps(cfg, sort_keys=True).replace("--", "- -")
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">'
        f"<!-- config: {comment} -->"
        f'<rect width="{width}" height="{height}" fill="white"/>'
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" stroke="black"/>'
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="black"/>'
        f'<polyline points="{points}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>'
        f'<text x="{(ml + width - mr) / 2}" y="{height - 12}" text-anchor="middle" font-size="14">epsilon (rad)</text>'
        f'<text x="16" y="{(mt + height - mb) / 2}" font-size="14" '
        f'transform="rotate(-90 16 {(mt + height - mb) / 2})" text-anchor="middle">tau * Gamma</text>'
        f'<text x="{ml}" y="{height - mb + 16}" font-size="11" text-anchor="middle">{xlo:.3g}</text>'
        f'<text x="{width - mr}" y="{height - mb + 16}" font-size="11" text-anchor="middle">{xhi:.3g}</text>'
        f'<text x="{ml - 6}" y="{sy(yhi) + 4}" font-size="11" text-anchor="end">{yhi:.3g}</text>'
        f'<text x="{ml - 6}" y="{height - mb + 4}" font-size="11" text-anchor="end">0</text>'
        "</svg>"
    )
    path = Path(path)
    path.write_bytes(svg.encode("utf-8"))
    return path


def _resolve_grid(cfg: dict, default_min: float) -> list[float]:
    grid = cfg.get("grid")
    if grid is None:
        grid = {"min": default_min, "max": _HALF_PI, "count": 200, "spacing": "log"}
    if "values" in grid:
        values = [float(v) for v in grid["values"]]
        if not values:
            raise ConfigError("grid.values must not be empty")
        cfg["grid"] = {"values": values}
        return values
    _check_keys(grid, {"min", "max", "count", "spacing"}, "grid")
    try:
        lo, hi, count = float(grid["min"]), float(grid["max"]), int(grid["count"])
    except KeyError as exc:
        raise ConfigError(f"grid is missing {exc}") from exc
    spacing = grid.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError(f"unknown grid spacing {spacing!r}")
    if count < 1 or not hi >= lo:
        raise ConfigError("grid needs count >= 1 and max >= min")
    if spacing == "log" and not lo > 0:
        raise ConfigError("log spacing requires min > 0")
    cfg["grid"] = {"min": lo, "max": hi, "count": count, "spacing": spacing}
    if count == 1:
        return [lo]
    space = np.geomspace if spacing == "log" else np.linspace
    return [float(v) for v in space(lo, hi, count)]


def _run_weak_value(cfg: dict) -> list[Path]:
    params, _ = _params_from(cfg)
    result = weak_value(sigma_z(), symmetric_state(), postselect_state(params.epsilon))
    payload = {
        "epsilon": params.epsilon,
        "re": result.value.real,
        "im": result.value.imag,
        "overlap_re": result.overlap.real,
        "overlap_im": result.overlap.imag,
        "config": cfg,
    }
    return [_write_json(cfg["out"], payload)]


def _run_tau_curve(cfg: dict) -> list[Path]:
    params, gamma_si = _params_from(cfg, need_epsilon=False)
    ratio = params.ratio
    grid = _resolve_grid(cfg, default_min=min(1.1 * ratio, _HALF_PI))
    form = cfg["params"]["form"]

    def point(eps):
        return tau_curve(ratio, [eps], form)[0]

    with ThreadPoolExecutor(max_workers=min(8, len(grid))) as pool:
        rows = list(pool.map(point, grid))  # map preserves grid order

    columns = ["epsilon", "tau_gamma", "rate_over_gamma", "physical"]
    table = [[r.epsilon, r.tau_gamma, r.rate_over_gamma, r.physical] for r in rows]
    if gamma_si is not None:
        columns.append("tau_seconds")
        for row in table:
            row.append(row[1] / gamma_si)
    written = [_write_csv(cfg["out"], columns, table, cfg)]
    if cfg.get("plot"):
        written.append(_write_svg(cfg["plot"], [r.epsilon for r in rows],
                                  [r.tau_gamma for r in rows], cfg))
    return written


def _bath_from_config(bath_cfg: dict, gamma: float = 1.0):
    cutoff = float(bath_cfg["cutoff_over_gamma"]) * gamma
    # The carrier only sets the rotating frame; anything well above the cutoff works.
    return build_bath(gamma, omega=40.0 * cutoff, cutoff=cutoff, n_modes=int(bath_cfg["n_modes"]))


def _run_evolve(cfg: dict) -> list[Path]:
    params, gamma_si = _params_from(cfg, need_epsilon=bool(cfg["bath"]["postselect"]))
    bath_cfg = cfg["bath"]
    bath = _bath_from_config(bath_cfg)
    dt = float(bath_cfg["dt_gamma"])
    t_end = float(bath_cfg["t_end_gamma"])
    engine = evolve_modes if bath_cfg["engine"] == "modes" else evolve_kernel
    traj = engine(bath, params, t_end=t_end, dt=dt, postselect=bool(bath_cfg["postselect"]))
    columns = ["t", "alpha_re", "alpha_im", "survival"]
    rows = [[t, a.real, a.imag, s] for t, a, s in zip(traj.times, traj.alpha, traj.survival)]
    if gamma_si is not None:
        columns.append("t_seconds")
        for row in rows:
            row.append(row[0] / gamma_si)
    return [_write_csv(cfg["out"], columns, rows, cfg)]


def _summary_payload(summary, cfg: dict, gamma_si: float | None) -> dict:
    payload = {
        "n": summary.n,
        "mean": summary.mean,
        "stderr": summary.stderr,
        "bins": [float(e) for e in summary.bin_edges],
        "counts": [int(c) for c in summary.counts],
        "config": cfg,
    }
    if summary.acceptance_rate is not None:
        payload["acceptance_rate"] = summary.acceptance_rate
    if gamma_si is not None:
        payload["mean_seconds"] = summary.mean / gamma_si
        payload["stderr_seconds"] = summary.stderr / gamma_si
    return payload


def _run_mc(cfg: dict) -> list[Path]:
    params, gamma_si = _params_from(cfg)
    mc = cfg["mc"]
    rng = RngSpec(seed=int(mc["seed"]), stream=int(mc["stream"]))
    if mc["model"] == "scattering":
        summary, samples = sample_scattering_times(
            params, cfg["params"]["form"], int(mc["n"]), rng,
            workers=int(mc["workers"]), return_samples=True)
    else:
        summary, samples = sample_conditional_arrivals(
            params, int(mc["n"]), rng, workers=int(mc["workers"]), return_samples=True)
    out = Path(cfg["out"])
    csv_path = _write_csv(out, ["t_over_gamma_inv"], [[t * params.gamma] for t in samples], cfg)
    json_path = _write_json(out.with_name(out.stem + ".summary.json"),
                            _summary_payload(summary, cfg, gamma_si))
    return [csv_path, json_path]


def _run_compare(cfg: dict) -> list[Path]:
    params0, _ = _params_from(cfg, need_epsilon=False)
    ratio = params0.ratio
    if cfg.get("grid") is None:
        # compare is expensive per point; the default grid is deliberately small
        cfg["grid"] = {"values": [0.2, 0.3, 0.5]}
    grid = _resolve_grid(cfg, default_min=0.2)
    form = cfg["params"]["form"]
    bath_cfg = cfg["bath"]
    mc = cfg["mc"]
    bath = _bath_from_config(bath_cfg)
    dt = float(bath_cfg["dt_gamma"])

    def point(eps):
        p = ModelParams.natural(ratio, eps, strict=False)
        rate = effective_rate(p, form)
        if rate <= 0:
            return [eps, rate, math.nan, math.nan, math.nan, math.nan, False]
        t_end = min(3.0 / rate, 10.0 * 0.999)
        traj = evolve_modes(bath, p, t_end=t_end, dt=dt, postselect=True)
        fitted = fit_decay_rate(traj, 0.5 / rate, t_end)
        summary = sample_scattering_times(p, form, int(mc["n"]),
                                          RngSpec(int(mc["seed"]), int(mc["stream"])))
        mc_rate = 1.0 / summary.mean
        return [eps, rate, fitted, mc_rate,
                (fitted - rate) / rate, (mc_rate - rate) / rate, True]

    with ThreadPoolExecutor(max_workers=min(4, len(grid))) as pool:
        rows = list(pool.map(point, grid))  # ordered by grid index

    columns = ["epsilon", "rate_markov", "rate_bath_fit", "rate_mc", "dev_bath", "dev_mc", "physical"]
    return [_write_csv(cfg["out"], columns, rows, cfg)]


_RUNNERS = {
    "weak-value": _run_weak_value,
    "tau-curve": _run_tau_curve,
    "evolve": _run_evolve,
    "mc": _run_mc,
    "compare": _run_compare,
}

_MODE_HELP = {
    "weak-value": "weak value of sigma_z between the symmetric and rotated final states",
    "tau-curve": "mean scattering time vs post-selection angle (figure data)",
    "evolve": "first-principles bath integration of the amplitude",
    "mc": "Monte Carlo arrival-time samples and summary",
    "compare": "join closed-form rate, bath fit, and MC estimate per grid point",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vee-ww-sim",
        description="Post-selected decay of a V-type atom: weak values, decay curves, bath checks, arrival-time Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode, help_text in _MODE_HELP.items():
        sp = sub.add_parser(mode, help=help_text)
        sp.add_argument("--config", metavar="FILE_OR_NAME",
                        help="JSON config path or builtin preset (fig2, fig3)")
        sp.add_argument("--delta-over-gamma", type=float, dest="delta_over_gamma",
                        help="splitting over decay rate")
        sp.add_argument("--epsilon", type=float, help="post-selection angle in radians")
        sp.add_argument("--form", choices=sorted(_FORM_ALIASES),
                        help="effective-rate form (cot = full-cot, small = small-epsilon)")
        sp.add_argument("--out", help="primary output path")
        sp.add_argument("--seed", type=int, help="Monte Carlo seed override")
        sp.add_argument("--n", type=int, help="Monte Carlo sample count override")
        if mode == "tau-curve":
            sp.add_argument("--plot", metavar="SVG", help="also write a minimal SVG rendering")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        written = _RUNNERS[args.mode](_resolve_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OrthogonalPrePost, UnphysicalRegion) as exc:
        print(f"unphysical request: {exc}", file=sys.stderr)
        return 3
    except (StepSizeTooLarge, NonFiniteAmplitude, EnvelopeViolation, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0
