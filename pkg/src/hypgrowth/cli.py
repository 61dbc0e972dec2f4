"""Command line front end: config-driven, byte-reproducible experiment runs.

Config files are flat INI key-value sections.  Outputs go through a
temp-file-plus-rename so a crash never leaves a half-written CSV, and a
manifest records the sha256 of every file; running the same config twice
must produce identical bytes.  No output contains a timestamp.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .decay import (
    estimate_boundary_point_prob,
    estimate_gp,
    estimate_pc,
    estimate_thick_origin_tail,
    fit_decay,
    menshikov_recursion,
)
from .ends import end_boundary_survey, survey_to_csv
from .gadgets import (
    bk_pairs,
    corpus_events,
    gadget,
    gadget_names,
    gadget_to_json,
    primary_event,
    slab_gadget_names,
)
from .graphs import (
    EmbeddedGraph,
    GenerationCapError,
    GuardBandError,
    LatticeFamily,
    TilingFamily,
)
from .hypgeom import hyperbolic_distance
from .oracle import (
    CapExceededError,
    disjoint_occurrence,
    exact_prob,
    verify_bk,
    verify_russo,
    verify_russo_integral,
    verify_saus,
)

__all__ = ["ExperimentConfig", "main", "parse_config", "run", "validate"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAD_CONFIG = 2
EXIT_GUARD_BAND = 3
EXIT_CAP = 4

TASKS = (
    "gp-scan",
    "decay-fit",
    "thick-origin",
    "recursion",
    "oracle-verify",
    "ends-survey",
    "pc-estimate",
    "boundary-point",
)


class ConfigError(ValueError):
    """Raised for anything a run should refuse before computing."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    task: str
    seed: int
    trials: int
    out_dir: str
    p: float | None = None
    p_grid: tuple[float, ...] = ()
    family: str | None = None
    family_params: dict = field(default_factory=dict)
    graph_file: str | None = None
    options: dict = field(default_factory=dict)
    emit_gnuplot: bool = False

    def require_p(self) -> float:
        if self.p is None:
            raise ConfigError("task requires a single percolation density p")
        return self.p

    def opt(self, key: str, default=None):
        if key in self.options:
            return self.options[key]
        if default is None:
            raise ConfigError(f"task {self.task} requires option {key!r}")
        return default

    def opt_float(self, key: str, default=None) -> float:
        return float(self.opt(key, default))

    def opt_int(self, key: str, default=None) -> int:
        return int(self.opt(key, default))

    def opt_floats(self, key: str, default=None) -> tuple[float, ...]:
        raw = self.opt(key, default)
        if isinstance(raw, tuple):
            return raw
        return _parse_grid(str(raw), key)


def _parse_grid(text: str, key: str) -> tuple[float, ...]:
    """Comma list '0.1,0.2' or range 'start:stop:step', inclusive stop."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(x) for x in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + i * step for i in range(max(n, 0)))
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse {key} value {text!r}") from None


def parse_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    task = parser.get("task", "name", fallback=None)
    if task not in TASKS:
        raise ConfigError(
            f"task name must be one of {', '.join(TASKS)}; got {task!r}"
        )

    perc = parser["percolation"] if parser.has_section("percolation") else {}
    p = None
    p_grid: tuple[float, ...] = ()
    if "p" in perc:
        p = float(perc["p"])
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {p}")
    if "p_grid" in perc:
        p_grid = _parse_grid(perc["p_grid"], "p_grid")
        bad = [x for x in p_grid if not 0.0 <= x <= 1.0]
        if bad:
            raise ConfigError(f"p_grid values outside [0, 1]: {bad}")
    trials = int(perc.get("trials", "0"))
    seed = int(perc.get("seed", "0"))

    family = None
    params: dict = {}
    graph_file = None
    if parser.has_section("graph"):
        g = parser["graph"]
        if "file" in g:
            graph_file = g["file"]
            if not os.path.exists(graph_file):
                raise ConfigError(f"graph file not found: {graph_file}")
        elif "family" in g:
            family = g["family"]
            if family == "tiling":
                params = {"p": g.getint("p"), "q": g.getint("q")}
                if (params["p"] - 2) * (params["q"] - 2) <= 4:
                    raise ConfigError(
                        "tiling {%d, %d} is not hyperbolic" % (params["p"], params["q"])
                    )
            elif family == "lattice":
                params = {
                    "d": g.getint("d"),
                    "spacing": g.getfloat("spacing", fallback=1.0),
                }
            else:
                raise ConfigError(f"unknown graph family {family!r}")

    options = dict(parser["task"]) if parser.has_section("task") else {}
    options.pop("name", None)

    out = parser.get("output", "dir", fallback="out")
    emit_gnuplot = parser.getboolean("output", "gnuplot", fallback=False)

    return ExperimentConfig(
        task=task,
        seed=seed,
        trials=trials,
        out_dir=out,
        p=p,
        p_grid=p_grid,
        family=family,
        family_params=params,
        graph_file=graph_file,
        options=options,
        emit_gnuplot=emit_gnuplot,
    )


def _tiling_family(cfg: ExperimentConfig) -> TilingFamily:
    if cfg.family != "tiling":
        raise ConfigError(f"task {cfg.task} needs [graph] family = tiling")
    return TilingFamily(cfg.family_params["p"], cfg.family_params["q"])


def _lattice_family(cfg: ExperimentConfig) -> LatticeFamily:
    if cfg.family != "lattice":
        raise ConfigError(f"task {cfg.task} needs [graph] family = lattice")
    return LatticeFamily(cfg.family_params["d"], cfg.family_params["spacing"])


def _load_graph(cfg: ExperimentConfig) -> EmbeddedGraph:
    if cfg.graph_file is None:
        raise ConfigError(f"task {cfg.task} needs [graph] file = <path>")
    return EmbeddedGraph.load(cfg.graph_file)


# ---------------------------------------------------------------------------
# validation


def _guard_band_radius(cfg: ExperimentConfig) -> float:
    """Generated-region radius the run will request; 0 when no graph is
    generated.  Pure arithmetic, no graph construction."""
    if cfg.task in ("gp-scan", "decay-fit"):
        return max(cfg.opt_floats("r_grid"))
    if cfg.task == "thick-origin":
        return max(cfg.opt_floats("r_grid")) + cfg.opt_float("r0")
    if cfg.task == "ends-survey":
        fam = _tiling_family(cfg)
        deltas = cfg.opt_floats("deltas")
        return cfg.opt_float("r") + max(deltas) + 2.0 * fam.edge_length
    if cfg.task == "pc-estimate":
        return 2.0 * cfg.opt_float("size_threshold")
    if cfg.task == "boundary-point":
        x = cfg.opt_floats("x")
        n_max = cfg.opt_int("n_max")
        rho1 = cfg.opt_float("rho1", 1.0)
        if n_max == 0:
            return 0.0
        apex = np.append(np.asarray(x, dtype=float), rho1 * 2.0 ** (1 - n_max))
        o = np.zeros(len(x) + 1)
        o[-1] = 1.0
        return float(hyperbolic_distance(o, apex))
    return 0.0


def _resolved(cfg: ExperimentConfig) -> dict:
    out = {
        "task": cfg.task,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "out_dir": cfg.out_dir,
        "guard_band_radius": _guard_band_radius(cfg),
    }
    if cfg.p is not None:
        out["p"] = cfg.p
    if cfg.p_grid:
        out["p_grid"] = list(cfg.p_grid)
    if cfg.family:
        out["family"] = cfg.family
        out.update({f"family_{k}": v for k, v in cfg.family_params.items()})
    if cfg.graph_file:
        out["graph_file"] = cfg.graph_file
    for k in sorted(cfg.options):
        out[f"option_{k}"] = cfg.options[k]
    return out


def validate(cfg: ExperimentConfig) -> str:
    """Static validation; returns the resolved-parameter echo text."""
    _check_task_options(cfg)
    lines = [f"{k} = {v}" for k, v in _resolved(cfg).items()]
    return "\n".join(lines) + "\n"


def _check_task_options(cfg: ExperimentConfig) -> None:
    t = cfg.task
    if t in ("gp-scan", "decay-fit"):
        _tiling_family(cfg)
        cfg.require_p()
        grid = cfg.opt_floats("r_grid")
        if not grid or min(grid) <= 0:
            raise ConfigError("r_grid must be positive")
        if cfg.trials <= 0:
            raise ConfigError("trials must be positive")
    elif t == "thick-origin":
        _tiling_family(cfg)
        cfg.require_p()
        cfg.opt_float("r0")
        cfg.opt_floats("r_grid")
    elif t == "recursion":
        cfg.opt_float("p1")
        cfg.opt_float("r1")
        model = cfg.opt("model", "exponential")
        if model == "exponential":
            cfg.opt_float("alpha")
            cfg.opt_float("phi")
        elif model == "squaring":
            x1 = cfg.opt_float("x1")
            if not 0.0 < x1 < 1.0:
                raise ConfigError("x1 must lie strictly in (0, 1)")
        else:
            raise ConfigError(f"unknown recursion model {model!r}")
    elif t == "oracle-verify":
        pass
    elif t == "ends-survey":
        _tiling_family(cfg)
        cfg.require_p()
        deltas = cfg.opt_floats("deltas")
        if min(deltas) <= 0:
            raise ConfigError("deltas must be positive")
        cfg.opt_float("r")
        cfg.opt_int("k_max")
        if cfg.trials <= 0:
            raise ConfigError("trials must be positive")
    elif t == "pc-estimate":
        _lattice_family(cfg)
        if not cfg.p_grid:
            raise ConfigError("pc-estimate needs a p_grid")
        cfg.opt_float("size_threshold")
        if cfg.trials <= 0:
            raise ConfigError("trials must be positive")
    elif t == "boundary-point":
        if cfg.graph_file is None:
            raise ConfigError("boundary-point needs [graph] file = <path>")
        cfg.require_p()
        cfg.opt_floats("x")
        cfg.opt_int("n_max")
        if cfg.trials <= 0:
            raise ConfigError("trials must be positive")


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _csv(provenance: dict, header: list[str], rows: list[list]) -> str:
    lines = [
        "# graph={graph} seed={seed} trials={trials}".format(**provenance),
        ",".join(header),
    ]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(out_dir: str, files: dict[str, str], resolved: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    hashes = {}
    for name in sorted(files):
        _write_atomic(os.path.join(out_dir, name), files[name])
        hashes[name] = hashlib.sha256(files[name].encode("utf8")).hexdigest()
    manifest = json.dumps(
        {"config": resolved, "outputs": hashes}, indent=1, sort_keys=True
    )
    _write_atomic(os.path.join(out_dir, "manifest.json"), manifest + "\n")


def _pool_map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# tasks


def _cache_dir() -> str | None:
    return os.environ.get("HYPGROWTH_CACHE")


def _run_gp_scan(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    fam = _tiling_family(cfg)
    curve = estimate_gp(
        fam,
        cfg.require_p(),
        cfg.opt_floats("r_grid"),
        trials=cfg.trials,
        seed=cfg.seed,
        hr_samples=cfg.opt_int("hr_samples", 32),
        delta=cfg.opt_float("delta", 2.0 ** -7),
        top=cfg.opt_float("top", 1.0),
        cache_dir=_cache_dir(),
    )
    ghash = hashlib.sha256(
        ",".join(curve.meta["graph_hashes"]).encode()
    ).hexdigest()
    prov = {"graph": ghash, "seed": cfg.seed, "trials": cfg.trials}
    rows = [
        [curve.p, float(r), float(e), float(c), int(a)]
        for r, e, c, a in zip(
            curve.r_grid, curve.estimates, curve.ci, curve.argmax_cell
        )
    ]
    files = {
        "gp_curve.csv": _csv(prov, ["p", "r", "estimate", "ci", "hr_id"], rows)
    }
    if cfg.emit_gnuplot:
        files["gp_curve.gp"] = (
            "set datafile separator ','\n"
            "set logscale y\n"
            "set xlabel 'r'\n"
            "set ylabel 'reach estimate'\n"
            "plot 'gp_curve.csv' using 2:3 with linespoints title 'g_p'\n"
        )
    if cfg.task == "decay-fit":
        fit = fit_decay(curve)
        files["decay_fit.csv"] = _csv(
            prov,
            ["psi", "r_squared", "alpha", "log_intercept", "n_points"],
            [[fit.psi, fit.r_squared, fit.alpha, fit.log_intercept, fit.n_points]],
        )
    return files


def _run_thick_origin(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    fam = _tiling_family(cfg)
    report = estimate_thick_origin_tail(
        fam,
        cfg.require_p(),
        cfg.opt_float("r0"),
        cfg.opt_floats("r_grid"),
        trials=cfg.trials,
        seed=cfg.seed,
        hr_samples=cfg.opt_int("hr_samples", 8),
        delta=cfg.opt_float("delta", 2.0 ** -6),
        cache_dir=_cache_dir(),
    )
    curve = report.curve
    ghash = hashlib.sha256(
        ",".join(curve.meta.get("graph_hashes", [])).encode()
    ).hexdigest()
    prov = {"graph": ghash, "seed": cfg.seed, "trials": cfg.trials}
    rows = [
        [curve.p, report.r0, float(r), float(e), float(c)]
        for r, e, c in zip(curve.r_grid, curve.estimates, curve.ci)
    ]
    summary = [
        [
            report.alpha,
            report.phi_rate,
            report.reduction_violations,
            report.fit.r_squared if report.fit else float("nan"),
        ]
    ]
    return {
        "thick_tail.csv": _csv(
            prov, ["p", "r0", "r", "estimate", "ci"], rows
        ),
        "thick_summary.csv": _csv(
            prov,
            ["alpha", "phi_rate", "reduction_violations", "fit_r_squared"],
            summary,
        ),
    }


def _squaring_eval(x1: float):
    state = {"g": None}

    def g_eval(p: float, r: float) -> float:
        state["g"] = x1 if state["g"] is None else state["g"] ** 2
        return state["g"]

    return g_eval


def _run_recursion(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    p1 = cfg.opt_float("p1")
    r1 = cfg.opt_float("r1")
    model = cfg.opt("model", "exponential")
    if model == "squaring":
        g_eval = _squaring_eval(cfg.opt_float("x1"))
    else:
        alpha = cfg.opt_float("alpha")
        phi = cfg.opt_float("phi")

        def g_eval(p: float, r: float) -> float:
            return alpha * math.exp(-phi * r)

    trace = menshikov_recursion(
        p1,
        r1,
        g_eval,
        p_floor=cfg.opt_float("p_floor", 0.0),
        max_steps=cfg.opt_int("max_steps", 10000),
        a=cfg.opt_float("a", 0.0),
    )
    prov = {"graph": "none", "seed": cfg.seed, "trials": 0}
    rows = [
        [i + 1, p_i, r_i, g_i] for i, (p_i, r_i, g_i) in enumerate(trace.steps)
    ]
    return {"recursion.csv": _csv(prov, ["i", "p_i", "r_i", "g_i"], rows)}


def _bk_margin(G, A, B) -> Fraction:
    po = exact_prob(G, disjoint_occurrence(G, A, B))
    pa = exact_prob(G, A)
    pb = exact_prob(G, B)
    grid = [Fraction(j, 100) for j in range(1, 100)]
    return min(pa(x) * pb(x) - po(x) for x in grid)


def _run_oracle_verify(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    corpus_hash = hashlib.sha256(
        "|".join(gadget_to_json(gadget(n)) for n in gadget_names()).encode()
    ).hexdigest()
    prov = {"graph": corpus_hash, "seed": cfg.seed, "trials": 0}
    rows: list[list] = []

    def russo_row(item):
        name, ev = item
        rep = verify_russo(gadget(name), ev)
        return ["russo", f"{name}:{ev.label}", "ok" if rep.ok else "fail", 0.0]

    rows.extend(_pool_map(russo_row, corpus_events(), threads))

    n_pairs = cfg.opt_int("bk_pairs", 100)

    def bk_row(item):
        i, (name, A, B) = item
        G = gadget(name)
        rep = verify_bk(G, A, B)
        margin = float(_bk_margin(G, A, B))
        return ["bk", f"{name}:pair{i}", "ok" if rep.ok else "fail", margin]

    rows.extend(
        _pool_map(bk_row, enumerate(bk_pairs(count=n_pairs)), threads)
    )

    grid = [Fraction(j, 10) for j in range(1, 10)]

    def saus_row(name):
        G = gadget(name)
        rs = sorted({float(s) for s in G.proj_scores(G.seed) if s > 0})
        rep = verify_saus(G, rs, grid)
        return ["saus", name, "ok" if rep.ok else "fail", 0.0]

    rows.extend(_pool_map(saus_row, slab_gadget_names(), threads))

    pairs = ((0.1, 0.3), (0.2, 0.4), (0.3, 0.6))

    def integral_rows(name):
        G = gadget(name)
        out = []
        for alpha, beta in pairs:
            rep = verify_russo_integral(G, alpha, beta, event=primary_event(G))
            margin = rep.bound + rep.quad_error + 1e-9 - rep.f_alpha
            out.append(
                [
                    "russo-integral",
                    f"{name}:a{alpha:g}b{beta:g}",
                    "ok" if rep.ok else "fail",
                    float(margin),
                ]
            )
        return out

    for chunk in _pool_map(integral_rows, gadget_names(), threads):
        rows.extend(chunk)

    return {
        "checks.csv": _csv(prov, ["check", "instance", "status", "margin"], rows)
    }


def _run_ends_survey(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    fam = _tiling_family(cfg)
    survey = end_boundary_survey(
        fam,
        cfg.require_p(),
        cfg.opt_floats("deltas"),
        r=cfg.opt_float("r"),
        k_max=cfg.opt_int("k_max"),
        trials=cfg.trials,
        seed=cfg.seed,
        fit_trials=cfg.opt_int("fit_trials", 4096),
        fit_hr_samples=cfg.opt_int("fit_hr_samples", 8),
        cache_dir=_cache_dir(),
    )
    return {"survey.csv": survey_to_csv(survey)}


def _run_pc_estimate(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    fam = _lattice_family(cfg)
    report = estimate_pc(
        fam,
        cfg.p_grid,
        size_threshold=cfg.opt_float("size_threshold"),
        trials=cfg.trials,
        seed=cfg.seed,
    )
    prov = {"graph": fam.label(), "seed": cfg.seed, "trials": cfg.trials}
    rows = [
        [float(p), float(fs), float(fl)]
        for p, fs, fl in zip(report.p_grid, report.freq_small, report.freq_large)
    ]
    summary = [
        [
            report.crossing_small,
            report.crossing_large,
            report.interval[0],
            report.interval[1],
            report.estimate,
        ]
    ]
    return {
        "pc.csv": _csv(prov, ["p", "crossing_small", "crossing_large"], rows),
        "pc_summary.csv": _csv(
            prov,
            ["crossing_small", "crossing_large", "lo", "hi", "estimate"],
            summary,
        ),
    }


def _run_boundary_point(cfg: ExperimentConfig, threads: int) -> dict[str, str]:
    graph = _load_graph(cfg)
    report = estimate_boundary_point_prob(
        graph,
        cfg.require_p(),
        cfg.opt_floats("x"),
        n_max=cfg.opt_int("n_max"),
        trials=cfg.trials,
        seed=cfg.seed,
        rho1=cfg.opt_float("rho1", 1.0),
    )
    prov = {"graph": graph.content_hash(), "seed": cfg.seed, "trials": cfg.trials}
    rows = [
        [n + 1, float(rad), float(f), float(c)]
        for n, (rad, f, c) in enumerate(zip(report.radii, report.freq, report.ci))
    ]
    return {
        "boundary.csv": _csv(prov, ["n", "radius", "frequency", "ci"], rows)
    }


_RUNNERS = {
    "gp-scan": _run_gp_scan,
    "decay-fit": _run_gp_scan,
    "thick-origin": _run_thick_origin,
    "recursion": _run_recursion,
    "oracle-verify": _run_oracle_verify,
    "ends-survey": _run_ends_survey,
    "pc-estimate": _run_pc_estimate,
    "boundary-point": _run_boundary_point,
}


def run(cfg: ExperimentConfig, threads: int) -> None:
    _check_task_options(cfg)
    files = _RUNNERS[cfg.task](cfg, threads)
    _emit(cfg.out_dir, files, _resolved(cfg))


# ---------------------------------------------------------------------------
# entry point


def _list_gadgets() -> str:
    lines = []
    for name in gadget_names():
        g = gadget(name)
        lines.append(
            f"{name:18s} vertices={g.n_vertices:3d} edges={g.n_edges:3d} "
            f"units={g.n_units:3d}"
        )
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hypgrowth",
        description="percolation experiments on hyperbolic slab graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a configured experiment")
    val_p = sub.add_parser("validate", help="check a config without computing")
    for p_ in (run_p, val_p):
        p_.add_argument("--config", required=True, help="INI config path")
        p_.add_argument("--seed", type=int, default=None, help="master seed override")
        p_.add_argument("--out", default=None, help="output directory override")
        p_.add_argument(
            "--threads",
            type=int,
            default=os.cpu_count() or 1,
            help="worker pool size; outputs do not depend on it",
        )
    sub.add_parser("list-gadgets", help="print the bundled gadget corpus")

    args = parser.parse_args(argv)
    if args.command == "list-gadgets":
        sys.stdout.write(_list_gadgets())
        return EXIT_OK

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.command == "validate":
            sys.stdout.write(validate(cfg))
            return EXIT_OK
        run(cfg, max(1, args.threads))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (GuardBandError, GenerationCapError) as exc:
        print(f"guard band: {exc}", file=sys.stderr)
        return EXIT_GUARD_BAND
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
