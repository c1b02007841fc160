"""Projected nested-gradient outer loop over the maximizer's gain L.

The maximin objective after inner minimization is Ct(L) = C(K(L), L) with
K(L) the inner best response. Its gradient is the L-gradient of C evaluated
at (K(L), L). Three update directions are supported, each followed by an
optional projection onto Omega = {L : Q - L^T Rv L >= zeta I}:

    NG:            L' = Proj[L + eta * gradL]            (gradL = 2 F Sigma)
    NaturalNG:     L' = Proj[L + eta * 2F]               (gradL Sigma^{-1})
    GaussNewtonNG: L' = Proj[L + eta * 2 W_L^{-1} F]

with W_L = Rv - C^T [P - P B (Ru + B^T P B)^{-1} B^T P] C. The gradient
mapping (L' - L)/(2 eta) measures constrained stationarity; its norm is the
stopping quantity.

Projection is Off by default. The WhitenedSvClip mode whitens L by
Rv^{1/2} L (Q - zeta I)^{-1/2}, clips singular values to 1, and maps back;
this is the exact projection in the whitened Frobenius metric and a
surrogate for the weighted metrics of the three variants.
"""

from dataclasses import dataclass, field

import numpy as np

from . import inner_loop, linalg, policy
from .errors import ConvergenceError, DefinitenessError, UnstableError
from .trace import OuterTrace, TraceRow

NG = "NG"
NATURAL_NG = "NaturalNG"
GAUSS_NEWTON_NG = "GaussNewtonNG"
VARIANTS = (NG, NATURAL_NG, GAUSS_NEWTON_NG)

PROJECTION_OFF = "Off"
PROJECTION_WHITENED_SV_CLIP = "WhitenedSvClip"
PROJECTIONS = (PROJECTION_OFF, PROJECTION_WHITENED_SV_CLIP)

DEFAULT_ETA = {NG: 0.1, NATURAL_NG: 0.05, GAUSS_NEWTON_NG: None}

INTERIOR_SLACK = 1e-12


@dataclass(frozen=True)
class OmegaSet:
    """Omega = {L : Q - L^T Rv L >= zeta I}, stored as zeta and M = Q - zeta I."""

    zeta: float
    M: np.ndarray

    def __post_init__(self):
        if self.zeta <= 0.0:
            raise ValueError("zeta must be positive")
        M = linalg.symmetrize(self.M, name="M")
        if linalg.min_eigenvalue_sym(M) <= 0.0:
            raise DefinitenessError("Q - zeta*I must be positive definite; zeta too large")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @classmethod
    def for_game(cls, game, zeta=None, nash=None):
        """Build Omega for a game. Default zeta: half the minimum eigenvalue of
        Q - L*^T Rv L* when a Nash solution is supplied and that margin is
        positive, else half the minimum eigenvalue of Q."""
        if zeta is None:
            margin = None
            if nash is not None:
                Qt = game.Q - nash.Lstar.T @ game.Rv @ nash.Lstar
                margin = linalg.min_eigenvalue_sym(0.5 * (Qt + Qt.T))
            if margin is not None and margin > 0.0:
                zeta = 0.5 * margin
            else:
                zeta = 0.5 * linalg.min_eigenvalue_sym(game.Q)
        else:
            zeta = float(zeta)
            if nash is not None:
                Qt = game.Q - nash.Lstar.T @ game.Rv @ nash.Lstar
                margin = linalg.min_eigenvalue_sym(0.5 * (Qt + Qt.T))
                if margin > 0.0 and zeta >= margin:
                    raise ValueError(
                        f"zeta={zeta:g} must stay below the equilibrium margin {margin:.6g} "
                        "or Omega excludes the Nash gain")
        return cls(zeta=zeta, M=game.Q - zeta * np.eye(game.d))

    def margin(self, L, game):
        """min eigenvalue of Q - L^T Rv L - zeta I; >= 0 means L is feasible."""
        S = self.M - L.T @ game.Rv @ L
        return linalg.min_eigenvalue_sym(0.5 * (S + S.T))


@dataclass(frozen=True)
class OuterConfig:
    variant: str = GAUSS_NEWTON_NG
    eta: float | None = None  # None: variant default (NG 0.1, NaturalNG 0.05, GN adaptive)
    tol: float = 1e-6
    max_iter: int = 10_000
    inner: inner_loop.InnerConfig = field(
        default_factory=lambda: inner_loop.InnerConfig(method=inner_loop.RICCATI, tol=1e-8))
    projection: str = PROJECTION_OFF

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown outer variant {self.variant!r}; expected one of {VARIANTS}")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"unknown projection mode {self.projection!r}; expected one of {PROJECTIONS}")
        if self.eta is not None and self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def w_matrix(game, P, require_pd=True):
    """W = Rv - C^T [P - P B (Ru + B^T P B)^{-1} B^T P] C for PSD P."""
    P = linalg.symmetrize(P, name="P")
    BtP = game.B.T @ P
    G = game.Ru + BtP @ game.B
    inner = P - BtP.T @ np.linalg.solve(G, BtP)
    W = game.Rv - game.C.T @ inner @ game.C
    W = 0.5 * (W + W.T)
    if require_pd and linalg.min_eigenvalue_sym(W) <= 0.0:
        raise DefinitenessError(
            "W_L is not positive definite; the Gauss-Newton outer direction is undefined here")
    return W


def nested_gradient(game, L, inner_res):
    """Gradient of the maximin objective at L: the L-gradient of C at (K(L), L)."""
    ev = policy.evaluate(game, policy.PolicyPair(K=inner_res.K, L=L))
    return ev.gradL


def project_omega(L, omega, game):
    """Projection onto Omega by whitened singular-value clipping.

    Feasible inputs (min-eig slack -1e-12) pass through unchanged, which also
    makes the operator idempotent: clipped outputs sit on the boundary and
    re-enter through the feasibility branch.
    """
    L = np.asarray(L, dtype=float)
    if omega.margin(L, game) >= -INTERIOR_SLACK:
        return L
    rv_h, rv_ih = linalg.sym_sqrt_and_inv_sqrt(game.Rv)
    m_h, m_ih = linalg.sym_sqrt_and_inv_sqrt(omega.M)
    U, s, V = linalg.svd(rv_h @ L @ m_ih)
    s = np.minimum(s, 1.0)
    return rv_ih @ (U * s) @ V.T @ m_h


def _direction(game, ev, cfg):
    """Ascent direction and effective stepsize for one outer update."""
    eta = cfg.eta
    if cfg.variant == NG:
        D = ev.gradL
        if eta is None:
            eta = DEFAULT_ETA[NG]
    elif cfg.variant == NATURAL_NG:
        D = 2.0 * ev.F
        if eta is None:
            eta = DEFAULT_ETA[NATURAL_NG]
    else:
        W = w_matrix(game, ev.P)
        D = 2.0 * np.linalg.solve(W, ev.F)
        if eta is None:
            eta = 1.0 / (2.0 * np.linalg.norm(W, 2))
    return D, eta


def _apply_outer_step(game, L, ev, cfg, omega):
    """Shared step arithmetic: returns (L', mapping, proj_active, eta)."""
    D, eta = _direction(game, ev, cfg)
    cand = L + eta * D
    proj_active = False
    if cfg.projection == PROJECTION_WHITENED_SV_CLIP:
        if omega is None:
            raise ValueError("projection WhitenedSvClip requires an OmegaSet")
        proj_active = omega.margin(cand, game) < -INTERIOR_SLACK
        Lp = project_omega(cand, omega, game) if proj_active else cand
    else:
        Lp = cand
    mapping = (Lp - L) / (2.0 * eta)
    return Lp, mapping, proj_active, eta


def outer_step(game, L, inner_res, cfg, omega=None):
    """One projected outer update of L from a valid inner result at L."""
    L = linalg.as_matrix(L, rows=game.m2, cols=game.d, name="L")
    ev = policy.evaluate(game, policy.PolicyPair(K=inner_res.K, L=L))
    Lp, mapping, _, _ = _apply_outer_step(game, L, ev, cfg, omega)
    return Lp, mapping


def _solve_inner_warm(game, L, K_prev, P_prev, cfg_inner):
    """Inner solve with warm starts; falls back to a cold Riccati solve when a
    warm start is destabilized or fails to converge."""
    if cfg_inner.method == inner_loop.RICCATI:
        res = None
        if P_prev is not None:
            try:
                res = inner_loop.solve_inner_riccati(game, L, P0=P_prev)
            except (ConvergenceError, DefinitenessError):
                res = None
        if res is None or res.final_grad_norm > cfg_inner.tol:
            res = inner_loop.solve_inner_riccati(game, L)
        if res.final_grad_norm > cfg_inner.tol:
            raise ConvergenceError(
                f"inner Riccati solve left ||gradK|| = {res.final_grad_norm:.3e} "
                f"above the inner tolerance {cfg_inner.tol:g}",
                residual=res.final_grad_norm, iterations=res.iterations)
        return res
    K0 = K_prev
    if K0 is None or not linalg.is_stable(game.A - game.B @ K0 - game.C @ L):
        K0 = inner_loop.solve_inner_riccati(game, L).K
    return inner_loop.solve_inner(game, L, K0, cfg_inner)


def solve_nested(game, L0, cfg, omega=None):
    """Alternate inner best-response solves and projected outer steps until the
    gradient-mapping norm falls below cfg.tol.

    Returns the final (K(L_T), L_T) pair and the full per-iteration trace.
    """
    L = linalg.as_matrix(L0, rows=game.m2, cols=game.d, name="L0")
    if cfg.projection == PROJECTION_WHITENED_SV_CLIP:
        if omega is None:
            raise ValueError("projection WhitenedSvClip requires an OmegaSet")
        if omega.margin(L, game) < -1e-9:
            raise ValueError("L0 lies outside Omega")

    trace = OuterTrace(meta={
        "variant": cfg.variant,
        "projection": cfg.projection,
        "mu": float(linalg.min_eigenvalue_sym(game.Sigma0)),
    })
    K_prev = None
    P_prev = None
    for t in range(cfg.max_iter + 1):
        try:
            inner_res = _solve_inner_warm(game, L, K_prev, P_prev, cfg.inner)
            K_prev, P_prev = inner_res.K, inner_res.P
            ev = policy.evaluate(game, policy.PolicyPair(K=inner_res.K, L=L))
        except (ConvergenceError, DefinitenessError, UnstableError) as e:
            e.trace = trace  # partial progress travels with the failure
            raise
        Lp, mapping, proj_active, _ = _apply_outer_step(game, L, ev, cfg, omega)
        map_norm = float(np.linalg.norm(mapping, "fro"))
        Qt = game.Q - L.T @ game.Rv @ L
        trace.append(TraceRow(
            t=t, cost=ev.cost, grad_map_norm=map_norm,
            grad_norm=float(np.linalg.norm(ev.gradL, "fro")),
            lambda_min_qtilde=linalg.min_eigenvalue_sym(0.5 * (Qt + Qt.T)),
            rho=ev.rho, proj_active=proj_active,
            K=inner_res.K.copy(), L=L.copy()))
        if map_norm <= cfg.tol:
            trace.converged = True
            break
        L = Lp
    pair = policy.PolicyPair(K=K_prev, L=L if trace.converged else trace.rows[-1].L)
    return pair, trace
