"""Constrained weighted least-squares thrust allocation.

Maps a desired 6-axis body wrench to per-thruster forces by solving

    min_f  || W (B f - tau_d) ||^2  +  eps ||f||^2
    s.t.   f_min_i <= f_i <= f_max_i

with an exact primal active-set method.  The Tikhonov term (eps, default
1e-6) makes the problem strictly convex so the minimizer is unique and the
solver deterministic; as eps -> 0 the solution approaches the minimum-norm
weighted least-squares solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DOF = 6

AXIS_NAMES = ("surge", "sway", "heave", "roll", "pitch", "yaw")

DEFAULT_EPSILON = 1e-6
DEFAULT_MAX_ITER = 64


class AllocationError(ValueError):
    """Invalid allocation inputs (non-finite, bad shapes, bad bounds)."""


class ConditioningError(AllocationError):
    """Normal matrix too ill-conditioned for a reliable solve."""


class SolverFailure(RuntimeError):
    """Active-set iteration cap exceeded.

    Must not happen for valid convex inputs; carries the best iterate so a
    caller can degrade gracefully while flagging the bug.
    """

    def __init__(self, message: str, best_thrust: np.ndarray):
        super().__init__(message)
        self.best_thrust = best_thrust


@dataclass(frozen=True)
class Wrench:
    """Six-axis force/torque demand: forces in N, torques in N*m."""

    surge: float = 0.0
    sway: float = 0.0
    heave: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.surge, self.sway, self.heave, self.roll, self.pitch, self.yaw],
            dtype=float,
        )

    @staticmethod
    def from_array(a) -> "Wrench":
        a = np.asarray(a, dtype=float).reshape(DOF)
        return Wrench(*(float(x) for x in a))


@dataclass(frozen=True)
class AllocationResult:
    """Solution of one allocation instance.

    thrust     per-thruster forces, feasible w.r.t. the box bounds
    residual   B @ thrust - tau_d, one entry per controlled axis
    saturated  indices of thrusters pinned at a bound (within 1e-9)
    iterations active-set iterations used
    """

    thrust: np.ndarray
    residual: np.ndarray
    saturated: tuple[int, ...]
    iterations: int

    @property
    def saturated_set(self) -> tuple[int, ...]:
        return self.saturated

    @property
    def residual_wrench(self) -> Wrench:
        """Residual as a Wrench; toy instances with fewer axes are zero-padded."""
        r = np.zeros(DOF)
        r[: min(DOF, self.residual.shape[0])] = self.residual[:DOF]
        return Wrench.from_array(r)


def _validate(B, tau_d, weights, f_min=None, f_max=None):
    B = np.asarray(B, dtype=float)
    tau = np.asarray(tau_d, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if B.ndim != 2 or B.shape[0] != tau.shape[0] or w.shape[0] != B.shape[0]:
        raise AllocationError(
            f"shape mismatch: B {B.shape}, tau {tau.shape}, weights {w.shape}"
        )
    n = B.shape[1]
    for name, arr in (("B", B), ("tau_d", tau), ("weights", w)):
        if not np.all(np.isfinite(arr)):
            raise AllocationError(f"non-finite values in {name}")
    if np.any(w <= 0):
        raise AllocationError("axis weights must be strictly positive")
    if f_min is None:
        return B, tau, w, None, None
    lo = np.asarray(f_min, dtype=float).reshape(-1)
    hi = np.asarray(f_max, dtype=float).reshape(-1)
    if lo.shape[0] != n or hi.shape[0] != n:
        raise AllocationError(f"bounds must have length {n}")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise AllocationError("non-finite values in bounds")
    if np.any(lo > 0) or np.any(hi < 0):
        raise AllocationError("bounds must satisfy f_min <= 0 <= f_max")
    return B, tau, w, lo, hi


def objective(B, f, tau_d, weights, epsilon_reg=DEFAULT_EPSILON) -> float:
    """Regularized WLS objective value for a candidate thrust vector."""
    B = np.asarray(B, dtype=float)
    f = np.asarray(f, dtype=float)
    r = np.asarray(weights, dtype=float) * (B @ f - np.asarray(tau_d, dtype=float))
    return float(r @ r + epsilon_reg * (f @ f))


def unconstrained_wls(B, tau_d, weights, epsilon_reg=DEFAULT_EPSILON) -> np.ndarray:
    """Minimizer of the regularized WLS objective ignoring the box bounds.

    Solves the normal equations of the weighted, Tikhonov-regularized
    system.  With epsilon_reg == 0 falls back to the minimum-norm
    least-squares solution (pseudo-inverse).  Raises ConditioningError when
    the normal matrix condition estimate exceeds 1e12.
    """
    if epsilon_reg < 0:
        raise AllocationError("epsilon_reg must be >= 0")
    B, tau, w, _, _ = _validate(B, tau_d, weights)
    A = w[:, None] * B
    b = w * tau
    sv = np.linalg.svd(A, compute_uv=False)
    if epsilon_reg == 0.0:
        # minimum-norm solution; condition taken over the numeric range only
        nonzero = sv[sv > sv[0] * 1e-15] if sv.size and sv[0] > 0 else sv
        if nonzero.size and (sv[0] / nonzero[-1]) ** 2 > 1e12:
            raise ConditioningError("normal matrix condition estimate exceeds 1e12")
        f, *_ = np.linalg.lstsq(A, b, rcond=None)
        return f
    cond = (sv[0] ** 2 + epsilon_reg) / (sv[-1] ** 2 + epsilon_reg) if sv.size else 1.0
    if cond > 1e12:
        raise ConditioningError(f"normal matrix condition ~{cond:.3g} exceeds 1e12")
    n = B.shape[1]
    G = A.T @ A + epsilon_reg * np.eye(n)
    return np.linalg.solve(G, A.T @ b)


def allocate(
    B,
    tau_d,
    weights,
    f_min,
    f_max,
    epsilon_reg: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
) -> AllocationResult:
    """Solve the box-constrained allocation problem exactly.

    Primal active-set iteration: solve the equality-reduced WLS system with
    bound-fixed variables, step to the first blocking bound when the free
    solution leaves the box, and release the bound with the most negative
    Lagrange multiplier once primal-feasible.  Strict convexity from the
    Tikhonov term guarantees finite termination; the cap (default 64) with
    deterministic lowest-index tie-breaking guards degenerate bounds.
    """
    B, tau, w, lo, hi = _validate(B, tau_d, weights, f_min, f_max)
    if epsilon_reg <= 0:
        raise AllocationError("epsilon_reg must be > 0 for the active-set solver")
    n = B.shape[1]
    A = w[:, None] * B
    b = w * tau
    AtA = A.T @ A + epsilon_reg * np.eye(n)
    Atb = A.T @ b

    grad_scale = max(1.0, float(np.max(np.abs(Atb))))
    kkt_tol = 1e-10 * grad_scale
    bound_tol = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))))

    f = np.zeros(n)  # feasible since f_min <= 0 <= f_max
    # working set: index -> bound value currently pinned
    at_lower = np.zeros(n, dtype=bool)
    at_upper = np.zeros(n, dtype=bool)

    iterations = 0
    for iterations in range(1, max_iter + 1):
        fixed = at_lower | at_upper
        free = ~fixed
        x = f.copy()
        x[at_lower] = lo[at_lower]
        x[at_upper] = hi[at_upper]
        if free.any():
            rhs = Atb[free] - AtA[np.ix_(free, fixed)] @ x[fixed]
            x[free] = np.linalg.solve(AtA[np.ix_(free, free)], rhs)

        below = free & (x < lo - bound_tol)
        above = free & (x > hi + bound_tol)
        if not below.any() and not above.any():
            f = np.clip(x, lo, hi)
            # multipliers: at a lower bound optimality needs grad >= 0,
            # at an upper bound grad <= 0
            g = 2.0 * (AtA @ f - Atb)
            mu = np.full(n, np.inf)
            mu[at_lower] = g[at_lower]
            mu[at_upper] = -g[at_upper]
            worst = int(np.argmin(mu))
            if mu[worst] >= -kkt_tol:
                break
            at_lower[worst] = False
            at_upper[worst] = False
            continue

        # step toward x until the first bound blocks
        d = x - f
        crossing_lo = d < 0
        crossing_hi = d > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            a_lo = np.where(crossing_lo, (lo - f) / d, np.inf)
            a_hi = np.where(crossing_hi, (hi - f) / d, np.inf)
        a = np.minimum(a_lo, a_hi)
        a[fixed] = np.inf
        alpha = min(1.0, float(np.min(a)))
        blocker = int(np.argmin(np.where(a <= alpha + 1e-15, np.arange(n), np.inf)))
        f = f + alpha * d
        if a_lo[blocker] <= a_hi[blocker]:
            f[blocker] = lo[blocker]
            at_lower[blocker] = True
        else:
            f[blocker] = hi[blocker]
            at_upper[blocker] = True
        f = np.clip(f, lo, hi)
    else:
        raise SolverFailure(
            f"active-set iteration cap {max_iter} exceeded", np.clip(f, lo, hi)
        )

    f = np.clip(f, lo, hi)
    sat = tuple(
        int(i) for i in range(n) if f[i] <= lo[i] + 1e-9 or f[i] >= hi[i] - 1e-9
    )
    return AllocationResult(thrust=f, residual=B @ f - tau, saturated=sat, iterations=iterations)


def projected_gradient_reference(
    B,
    tau_d,
    weights,
    f_min,
    f_max,
    epsilon_reg: float = DEFAULT_EPSILON,
    tol: float = 1e-12,
    max_iter: int = 500_000,
) -> np.ndarray:
    """Independent projected-gradient solver, used as a test oracle.

    Fixed step 1/L (L = largest eigenvalue of the quadratic term) with
    Nesterov momentum and gradient-based adaptive restart, so that badly
    conditioned instances still reach a tight fixed point.  Declares
    convergence only when a plain projected-gradient step moves the
    iterate by less than tol (scaled).  Deliberately kept free of any
    code shared with allocate() beyond the objective definition: no
    linear solves, only gradient steps and box projections.
    """
    B = np.asarray(B, dtype=float)
    tau = np.asarray(tau_d, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    lo = np.asarray(f_min, dtype=float).reshape(-1)
    hi = np.asarray(f_max, dtype=float).reshape(-1)
    A = w[:, None] * B
    b = w * tau
    n = B.shape[1]
    H = 2.0 * (A.T @ A + epsilon_reg * np.eye(n))
    c = -2.0 * (A.T @ b)
    L = float(np.linalg.eigvalsh(H)[-1])
    step = 1.0 / L
    scale = max(1.0, float(np.max(np.abs(hi - lo))))
    f = np.clip(np.zeros(n), lo, hi)
    y = f.copy()
    t = 1.0
    for _ in range(max_iter):
        g = H @ y + c
        f_next = np.clip(y - step * g, lo, hi)
        if np.max(np.abs(f_next - f)) < tol * scale:
            # momentum can stall transiently; accept only a true fixed point
            g2 = H @ f_next + c
            f_pg = np.clip(f_next - step * g2, lo, hi)
            if np.max(np.abs(f_pg - f_next)) < tol * scale:
                return f_pg
        if np.dot(y - f_next, f_next - f) > 0.0:
            # momentum points uphill: restart it
            t = 1.0
            y = f_next
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = f_next + ((t - 1.0) / t_next) * (f_next - f)
            t = t_next
        f = f_next
    return f
