"""Alternating-gradient (AG) and gradient-descent-ascent (GDA) baselines.

AG runs a fixed number of inner K-updates per outer step, then one L-ascent
step of the matching flavor evaluated at the resulting (K_T, L_t). GDA
updates both gains simultaneously from one shared evaluation of (K_t, L_t).
Neither method projects; stability is asserted at every sub-step and a
violation aborts with the step index.

Flavors reuse the inner-loop update arithmetic for the K-side. The L-side
ascends along gradL (PG), 2F (NaturalPG), or 2 (Rv - C^T P C)^{-1} F
(GaussNewton); the Gauss-Newton preconditioner must be positive definite.
"""

from dataclasses import dataclass

import numpy as np

from . import inner_loop, linalg, policy
from .errors import DefinitenessError, UnstableError
from .trace import OuterTrace, TraceRow

AG = "AG"
GDA = "GDA"
FAMILIES = (AG, GDA)

FLAVORS = (inner_loop.PG, inner_loop.NATURAL_PG, inner_loop.GAUSS_NEWTON)


@dataclass(frozen=True)
class BaselineConfig:
    """eta is the L-ascent stepsize. inner_alpha is the K stepsize: None means
    the flavor default for AG (PG 1e-3, NaturalPG adaptive, GaussNewton 1/2)
    and eta itself for GDA, whose listing uses one stepsize for both players.
    inner_tol > 0 lets AG leave the inner loop early once ||gradK|| drops
    below it (used to recover the fully nested method)."""

    family: str = GDA
    flavor: str = inner_loop.GAUSS_NEWTON
    eta: float = 0.05
    inner_iters: int = 5
    max_outer: int = 10_000
    tol: float = 1e-6
    inner_alpha: float | None = None
    inner_tol: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}; expected one of {FLAVORS}")
        if self.eta <= 0.0 or self.tol <= 0.0:
            raise ValueError("eta and tol must be positive")
        if self.inner_iters < 1 or self.max_outer < 1:
            raise ValueError("inner_iters and max_outer must be >= 1")
        if self.inner_alpha is not None and self.inner_alpha <= 0.0:
            raise ValueError("inner_alpha must be positive")
        if self.inner_tol < 0.0:
            raise ValueError("inner_tol must be >= 0")


def _l_direction(game, ev, flavor):
    """Ascent direction for the maximizer; L + eta*direction is the update."""
    if flavor == inner_loop.PG:
        return ev.gradL
    if flavor == inner_loop.NATURAL_PG:
        return 2.0 * ev.F
    H = game.Rv - game.C.T @ ev.P @ game.C
    H = 0.5 * (H + H.T)
    if linalg.min_eigenvalue_sym(H) <= 0.0:
        raise DefinitenessError(
            "Rv - C^T P C is not positive definite; the Gauss-Newton "
            "L-ascent direction is undefined here")
    return 2.0 * np.linalg.solve(H, ev.F)


def _evaluate_at(game, K, L, where):
    try:
        return policy.evaluate(game, policy.PolicyPair(K=K, L=L))
    except UnstableError as e:
        raise UnstableError(f"stability lost at {where} (rho = {e.rho:.6f})",
                            rho=e.rho) from e


def _trace_row(game, ev, t, L, K, map_norm):
    Qt = game.Q - L.T @ game.Rv @ L
    return TraceRow(
        t=t, cost=ev.cost, grad_map_norm=map_norm,
        grad_norm=float(np.linalg.norm(ev.gradL, "fro")),
        lambda_min_qtilde=linalg.min_eigenvalue_sym(0.5 * (Qt + Qt.T)),
        rho=ev.rho, proj_active=False, K=K.copy(), L=L.copy(),
        grad_k_norm=float(np.linalg.norm(ev.gradK, "fro")))


def run_ag(game, pi0, cfg):
    """Alternating gradient from a stabilizing pair."""
    if cfg.family != AG:
        raise ValueError("run_ag requires cfg.family == AG")
    pi0.check_dims(game)
    icfg = inner_loop.InnerConfig(method=cfg.flavor, alpha=cfg.inner_alpha)
    K = np.array(pi0.K, dtype=float)
    L = np.array(pi0.L, dtype=float)
    trace = OuterTrace(meta={"family": AG, "flavor": cfg.flavor,
                             "mu": float(linalg.min_eigenvalue_sym(game.Sigma0))})
    for t in range(cfg.max_outer + 1):
        for j in range(cfg.inner_iters):
            ev = _evaluate_at(game, K, L, f"outer step {t}, inner step {j}")
            if cfg.inner_tol > 0.0 and np.linalg.norm(ev.gradK, "fro") <= cfg.inner_tol:
                break
            K = inner_loop._step_from_eval(game, K, ev, icfg)
        ev = _evaluate_at(game, K, L, f"outer step {t}, after inner loop")
        D = _l_direction(game, ev, cfg.flavor)
        map_norm = 0.5 * float(np.linalg.norm(D, "fro"))
        trace.append(_trace_row(game, ev, t, L, K, map_norm))
        if map_norm <= cfg.tol:
            trace.converged = True
            break
        if t < cfg.max_outer:
            L = L + cfg.eta * D
    return policy.PolicyPair(K=K, L=trace.rows[-1].L), trace


def run_gda(game, pi0, cfg):
    """Simultaneous descent-ascent: both updates use the same evaluation."""
    if cfg.family != GDA:
        raise ValueError("run_gda requires cfg.family == GDA")
    pi0.check_dims(game)
    alpha = cfg.inner_alpha if cfg.inner_alpha is not None else cfg.eta
    icfg = inner_loop.InnerConfig(method=cfg.flavor, alpha=alpha)
    K = np.array(pi0.K, dtype=float)
    L = np.array(pi0.L, dtype=float)
    trace = OuterTrace(meta={"family": GDA, "flavor": cfg.flavor,
                             "mu": float(linalg.min_eigenvalue_sym(game.Sigma0))})
    for t in range(cfg.max_outer + 1):
        ev = _evaluate_at(game, K, L, f"step {t}")
        D = _l_direction(game, ev, cfg.flavor)
        map_norm = 0.5 * float(np.linalg.norm(D, "fro"))
        trace.append(_trace_row(game, ev, t, L, K, map_norm))
        gk = float(np.linalg.norm(ev.gradK, "fro"))
        gl = float(np.linalg.norm(ev.gradL, "fro"))
        if max(gk, gl) <= cfg.tol:
            trace.converged = True
            break
        if t < cfg.max_outer:
            K = inner_loop._step_from_eval(game, K, ev, icfg)
            L = L + cfg.eta * D
    return policy.PolicyPair(K=trace.rows[-1].K, L=trace.rows[-1].L), trace
