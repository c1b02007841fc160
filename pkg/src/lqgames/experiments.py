"""Experiment runner behind the CLI: load a config, run the selected solvers
against the GARE oracle, and write per-solver artifacts.

Each solver produces four files in the output directory: <name>.csv (the
iteration trace), <name>.json (the run summary, including the oracle gap),
and three SVG plots rendered purely from those two artifacts: cost vs t with
the oracle value as a horizontal rule, gradient-mapping norm vs t on a log
scale, and the constraint margin min-eig(Q - L^T Rv L) vs t. An experiment-
level summary.json aggregates the per-solver summaries.

Reruns with the same config and seeds are byte-identical: no timestamps or
timing data reach the artifacts, float formatting is repr-based, and every
solver is deterministic given its seed.

LQGAME_THREADS caps how many solvers run concurrently (default: cpu count).
"""

import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, game as game_mod, inner_loop, modelfree, outer_loop, svgplot
from .errors import ConfigError, LqGamesError
from .policy import PolicyPair
from .trace import OuterTrace, TraceRow

SOLVER_KINDS = ("nested", "ag", "gda", "modelfree-inner", "modelfree-outer")

_NAME_RE = re.compile(r"[^A-Za-z0-9_.-]+")


@dataclass
class ExperimentConfig:
    game: str = "case1"
    solvers: list = field(default_factory=list)
    zeta: float | None = None
    seed: int = 0
    out: str = "lqgames_out"

    @classmethod
    def from_dict(cls, d, require_solvers=True):
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        known = {"game", "solvers", "zeta", "seed", "out"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(
            game=d.get("game", "case1"),
            solvers=list(d.get("solvers", [])),
            zeta=d.get("zeta"),
            seed=int(d.get("seed", 0)),
            out=d.get("out", "lqgames_out"),
        )
        if cfg.game not in ("case1", "case2") and not os.path.exists(cfg.game):
            raise ConfigError(f"game file not found: {cfg.game}")
        if require_solvers and not cfg.solvers:
            raise ConfigError("config lists no solvers")
        seen = set()
        for spec in cfg.solvers:
            if not isinstance(spec, dict) or "solver" not in spec:
                raise ConfigError("each solver entry must be an object with a 'solver' key")
            if spec["solver"] not in SOLVER_KINDS:
                raise ConfigError(f"unknown solver kind {spec['solver']!r}; "
                                  f"expected one of {SOLVER_KINDS}")
            name = solver_name(spec)
            if name in seen:
                raise ConfigError(f"duplicate solver name {name!r}")
            seen.add(name)
        return cfg

    @classmethod
    def load(cls, path, require_solvers=True):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
        return cls.from_dict(d, require_solvers=require_solvers)


def solver_name(spec):
    base = spec.get("name")
    if not base:
        tag = spec.get("variant") or spec.get("flavor") or ""
        base = f"{spec['solver']}-{tag}" if tag else spec["solver"]
    return _NAME_RE.sub("-", str(base))


def load_game(source):
    if source == "case1":
        return game_mod.case1()
    if source == "case2":
        return game_mod.case2()
    return game_mod.LqGame.load(source)


def max_workers():
    raw = os.environ.get("LQGAME_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"LQGAME_THREADS must be an integer, got {raw!r}") from None
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def _zeros_L(game):
    return np.zeros((game.m2, game.d))


def _parse_gain(value, rows, cols, name):
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.shape != (rows, cols):
        raise ConfigError(f"{name} must have shape {(rows, cols)}, got {arr.shape}")
    return arr


def _default_pi0(game):
    # a stabilizing start: best response to L = 0 (A itself may be unstable)
    K0 = inner_loop.solve_inner_riccati(game, _zeros_L(game)).K
    return PolicyPair(K=K0, L=_zeros_L(game))


def _run_nested(game, spec, omega, seed):
    inner_spec = dict(spec.get("inner", {}))
    icfg = inner_loop.InnerConfig(
        method=inner_spec.get("method", inner_loop.RICCATI),
        alpha=inner_spec.get("alpha"),
        tol=float(inner_spec.get("tol", 1e-8)),
        max_iter=int(inner_spec.get("max_iter", 100_000)))
    cfg = outer_loop.OuterConfig(
        variant=spec.get("variant", outer_loop.GAUSS_NEWTON_NG),
        eta=spec.get("eta"),
        tol=float(spec.get("tol", 1e-6)),
        max_iter=int(spec.get("max_iter", 10_000)),
        inner=icfg,
        projection=spec.get("projection", outer_loop.PROJECTION_OFF))
    L0 = _parse_gain(spec.get("L0"), game.m2, game.d, "L0")
    if L0 is None:
        L0 = _zeros_L(game)
    _, trace = outer_loop.solve_nested(game, L0, cfg, omega)
    return trace


def _run_baseline(game, spec, seed):
    family = baselines.AG if spec["solver"] == "ag" else baselines.GDA
    cfg = baselines.BaselineConfig(
        family=family,
        flavor=spec.get("flavor", inner_loop.GAUSS_NEWTON),
        eta=float(spec.get("eta", 0.05)),
        inner_iters=int(spec.get("inner_iters", 5)),
        max_outer=int(spec.get("max_outer", 10_000)),
        tol=float(spec.get("tol", 1e-6)),
        inner_alpha=spec.get("inner_alpha"),
        inner_tol=float(spec.get("inner_tol", 0.0)))
    K0 = _parse_gain(spec.get("K0"), game.m1, game.d, "K0")
    L0 = _parse_gain(spec.get("L0"), game.m2, game.d, "L0")
    if K0 is None and L0 is None:
        pi0 = _default_pi0(game)
    else:
        if L0 is None:
            L0 = _zeros_L(game)
        if K0 is None:
            K0 = inner_loop.solve_inner_riccati(game, L0).K
        pi0 = PolicyPair(K=K0, L=L0)
    run = baselines.run_ag if family == baselines.AG else baselines.run_gda
    _, trace = run(game, pi0, cfg)
    return trace


def _estimator_cfg(spec, seed):
    return modelfree.EstimatorConfig(
        m=int(spec.get("m", 1000)),
        R=int(spec.get("R", 100)),
        r=float(spec.get("r", 0.05)),
        seed=int(spec.get("seed", seed)),
        x0_dist=spec.get("x0_dist", modelfree.X0_GAUSSIAN))


def _run_modelfree_inner(game, spec, seed):
    cfg = _estimator_cfg(spec, seed)
    L = _parse_gain(spec.get("L"), game.m2, game.d, "L")
    if L is None:
        L = _zeros_L(game)
    K0 = _parse_gain(spec.get("K0"), game.m1, game.d, "K0")
    if K0 is None:
        K0 = inner_loop.solve_inner_riccati(game, L).K
    steps = int(spec.get("steps", 20))
    alpha = spec.get("alpha", 0.05)
    flavor = spec.get("flavor", inner_loop.NATURAL_PG)
    trace = OuterTrace(meta={"variant": f"modelfree-inner-{flavor}"})
    qt = game.Q - L.T @ game.Rv @ L
    lam = float(np.linalg.eigvalsh(0.5 * (qt + qt.T))[0])

    def record(j, K, grad, Sigma, extras):
        acl = game.A - game.B @ K - game.C @ L
        trace.append(TraceRow(
            t=j, cost=float(extras.get("cost_mean", math.nan)),
            grad_map_norm=0.5 * float(np.linalg.norm(grad, "fro")),
            grad_norm=float(np.linalg.norm(grad, "fro")),
            lambda_min_qtilde=lam,
            rho=float(np.abs(np.linalg.eigvals(acl)).max()),
            proj_active=False, K=K.copy()))

    modelfree.inner_ng_modelfree(game, L, K0, cfg, steps, alpha, flavor=flavor,
                                 tol=spec.get("tol"), record=record)
    trace.converged = True
    return trace


def _run_modelfree_outer(game, spec, omega, seed):
    cfg = _estimator_cfg(spec, seed)
    L0 = _parse_gain(spec.get("L0"), game.m2, game.d, "L0")
    if L0 is None:
        L0 = _zeros_L(game)
    use_omega = omega if spec.get("projection") == outer_loop.PROJECTION_WHITENED_SV_CLIP else None
    _, trace = modelfree.outer_ng_modelfree(
        game, L0, cfg,
        T=int(spec.get("T", 20)),
        eta=float(spec.get("eta", 0.05)),
        flavor=spec.get("flavor", outer_loop.NG),
        omega=use_omega,
        inner_steps=int(spec.get("inner_steps", 10)),
        inner_alpha=float(spec.get("inner_alpha", 0.05)),
        inner_flavor=spec.get("inner_flavor", inner_loop.NATURAL_PG))
    trace.converged = True
    return trace


def run_solver(game, spec, omega, seed):
    kind = spec["solver"]
    if kind == "nested":
        return _run_nested(game, spec, omega, seed)
    if kind in ("ag", "gda"):
        return _run_baseline(game, spec, seed)
    if kind == "modelfree-inner":
        return _run_modelfree_inner(game, spec, seed)
    return _run_modelfree_outer(game, spec, omega, seed)


def _write_plots(out_dir, name):
    """Render the three standard plots from the CSV + JSON already on disk."""
    trace = OuterTrace.read_csv(os.path.join(out_dir, f"{name}.csv"))
    with open(os.path.join(out_dir, f"{name}.json")) as fh:
        summary = json.load(fh)
    ts = [r.t for r in trace.rows]
    oracle_value = summary.get("oracle_value")
    svgplot.line_plot(
        os.path.join(out_dir, f"{name}_cost.svg"),
        [(name, ts, [r.cost for r in trace.rows])],
        title="Expected cost per outer iteration", xlabel="iteration t",
        ylabel="cost", hline=oracle_value, hline_label="oracle value")
    svgplot.line_plot(
        os.path.join(out_dir, f"{name}_gradmap.svg"),
        [(name, ts, [r.grad_map_norm for r in trace.rows])],
        title="Gradient-mapping norm", xlabel="iteration t",
        ylabel="mapping norm", logy=True)
    zeta = summary.get("zeta")
    svgplot.line_plot(
        os.path.join(out_dir, f"{name}_qtilde.svg"),
        [(name, ts, [r.lambda_min_qtilde for r in trace.rows])],
        title="Constraint margin along the run", xlabel="iteration t",
        ylabel="min eig(Q - L' Rv L)", hline=zeta,
        hline_label="zeta" if zeta is not None else None)


def run_experiment(cfg, out_dir=None, seed=None):
    """Run every solver in cfg and write artifacts. Returns the aggregate
    summary dict; solver errors are recorded there rather than raised."""
    out_dir = out_dir or cfg.out
    base_seed = cfg.seed if seed is None else int(seed)
    gm = load_game(cfg.game)
    nash = game_mod.solve_gare(gm)
    report = game_mod.check_assumptions(gm, nash)
    omega = outer_loop.OmegaSet.for_game(gm, zeta=cfg.zeta, nash=nash)
    os.makedirs(out_dir, exist_ok=True)

    nu = float(np.linalg.eigvalsh(outer_loop.w_matrix(gm, nash.Pstar))[0])

    def one(spec):
        name = solver_name(spec)
        try:
            trace = run_solver(gm, spec, omega, base_seed)
            trace.meta.setdefault("zeta", float(omega.zeta))
            trace.meta.setdefault("nu", nu)
            trace.write_csv(os.path.join(out_dir, f"{name}.csv"))
            trace.write_summary(os.path.join(out_dir, f"{name}.json"),
                                oracle_value=nash.value)
            _write_plots(out_dir, name)
            return name, trace.summary(oracle_value=nash.value)
        except (LqGamesError, np.linalg.LinAlgError, ValueError) as e:
            return name, {"error": f"{type(e).__name__}: {e}", "converged": False}

    workers = min(max_workers(), max(1, len(cfg.solvers)))
    if workers > 1 and len(cfg.solvers) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, cfg.solvers))
    else:
        results = [one(spec) for spec in cfg.solvers]

    solvers = {name: summ for name, summ in results}
    failing = [name for name, summ in results if not summ.get("converged")]
    aggregate = {
        "game": cfg.game,
        "zeta": float(omega.zeta),
        "oracle": {
            "value": float(nash.value),
            "iterations": int(nash.iterations),
            "ql_margin": float(report.ql_margin),
            "rv_margin": float(report.rv_margin),
        },
        "solvers": solvers,
        "failing": failing,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(aggregate, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return aggregate


def oracle_report(cfg):
    """Machine-readable GARE oracle output for cfg's game."""
    gm = load_game(cfg.game)
    nash = game_mod.solve_gare(gm)
    report = game_mod.check_assumptions(gm, nash)
    return {
        "P": nash.Pstar.tolist(),
        "K": nash.Kstar.tolist(),
        "L": nash.Lstar.tolist(),
        "value": float(nash.value),
        "iterations": int(nash.iterations),
        "residual": float(nash.residual),
        "ql_margin": float(report.ql_margin),
        "rv_margin": float(report.rv_margin),
        "assumption_part_i": bool(report.part_i_holds),
        "assumption_part_ii": bool(report.part_ii_holds),
    }
