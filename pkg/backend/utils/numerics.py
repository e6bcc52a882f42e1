"""Numerical kernels shared by the schedulers.

Principal-branch Lambert W, bracketed bisection, golden-section search, a dense
two-phase simplex LP solver and the projected-subgradient driver used by the
dual-decomposition solvers. Everything here is pure and works on floats or
small numpy arrays.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import BracketError, DomainError, NumericError

INV_E = math.exp(-1.0)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQUARE = (3.0 - math.sqrt(5.0)) / 2.0

# Open-interval clamps for T
CLAMP_LOW = 1e-9
CLAMP_HIGH = 1.0 - 1e-9

STEP_RULES = ('polyak', 'diminishing')


def lambert_w0(x):
    """Principal branch W0 of the Lambert W function for real x >= -1/e.

    Seeds with the branch-point series near -1/e, the Taylor series near 0 and
    the asymptotic log expansion for x > e, then refines with Halley's method.
    """
    x = float(x)
    if math.isnan(x):
        raise DomainError("lambert_w0 is undefined for NaN")
    if x == math.inf:
        return math.inf
    if x < -INV_E:
        # absorb rounding of -1/e computed elsewhere
        if x >= -INV_E - 1e-15:
            return -1.0
        raise DomainError(f"lambert_w0 needs x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0

    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 0.25:
        w = x - x * x + 1.5 * x ** 3
    elif x <= math.e:
        w = math.log1p(x) * 0.75
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            break
    return max(w, -1.0)


def _sign(value):
    if not math.isfinite(value):
        raise NumericError(f"non-finite function value {value!r}")
    return (value > 0.0) - (value < 0.0)


def bisect_root(f, lo, hi, tol=1e-12, max_iterations=400):
    """Midpoint bisection for a sign change of f on [lo, hi].

    Stops when the bracket is narrower than tol or cannot be split further in
    floating point.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    s_lo = _sign(float(f(lo)))
    if s_lo == 0:
        return lo
    s_hi = _sign(float(f(hi)))
    if s_hi == 0:
        return hi
    if s_lo == s_hi:
        raise BracketError(f"f does not change sign on [{lo!r}, {hi!r}]")

    for _ in range(max_iterations):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s_mid = _sign(float(f(mid)))
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def expand_bracket(f, lo, hi=1.0, cap=2.0 ** 60):
    """Double hi until f(lo) and f(hi) differ in sign; returns (lo, hi)."""
    s_lo = _sign(float(f(lo)))
    while _sign(float(f(hi))) == s_lo and s_lo != 0:
        if hi >= cap:
            raise BracketError(f"no sign change found below {cap:g}")
        hi *= 2.0
    return lo, hi


def golden_section_max(f, lo, hi, tol=1e-10):
    """Golden-section search for the maximum of a unimodal f on [lo, hi].

    Returns (x, f(x)) for the best point evaluated in the final bracket.
    """
    a, b = min(lo, hi), max(lo, hi)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    fc = f(c)
    fd = f(d)
    for _ in range(steps):
        if fc > fd:
            b, d, fd = d, c, fc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = INV_PHI * h
            d = a + INV_PHI * h
            fd = f(d)
    if fc > fd:
        return c, fc
    return d, fd


# ---------------------------------------------------------------------------
# Linear programming
# ---------------------------------------------------------------------------

RELATIONS = ('<=', '=', '>=')
PIVOT_TOL = 1e-9


@dataclass(frozen=True)
class Constraint:
    coefficients: Sequence[float]
    relation: str
    bound: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise DomainError(f"unknown relation {self.relation!r}")


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective @ x subject to constraints and per-variable bounds."""
    objective: np.ndarray
    constraints: List[Constraint] = field(default_factory=list)
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        width = len(self.objective)
        for row in self.constraints:
            if len(row.coefficients) != width:
                raise DomainError(
                    f"constraint width {len(row.coefficients)} != objective width {width}")
        for bounds in (self.lower, self.upper):
            if bounds is not None and len(bounds) != width:
                raise DomainError("variable bounds must match the objective width")

    @property
    def width(self):
        return len(self.objective)


@dataclass(frozen=True)
class LpSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    values: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    pivots: int = 0
    # phase-2 reduced costs of the standard-form columns, all >= -tol at optimum
    reduced_costs: Optional[np.ndarray] = None
    # shadow price of each constraint; NaN for equality rows
    duals: Optional[np.ndarray] = None

    @property
    def optimal(self):
        return self.status == 'optimal'


def _pivot(tableau, row, col):
    tableau[row, :] /= tableau[row, col]
    column = tableau[:, col].copy()
    column[row] = 0.0
    tableau -= np.outer(column, tableau[row, :])


def _entering(objective_row, tol):
    # Bland: lowest-index column with a negative reduced cost
    candidates = np.flatnonzero(objective_row[:-1] < -tol)
    return int(candidates[0]) if candidates.size else -1


def _leaving(tableau, col, basis, tol):
    column = tableau[:-1, col]
    rhs = tableau[:-1, -1]
    best_row, best_ratio = -1, math.inf
    for i in np.flatnonzero(column > tol):
        ratio = rhs[i] / column[i]
        if ratio < best_ratio - 1e-12 or (
                abs(ratio - best_ratio) <= 1e-12 and basis[i] < basis[best_row]):
            best_row, best_ratio = int(i), ratio
    return best_row


def _run_simplex(tableau, basis, max_pivots):
    pivots = 0
    while True:
        col = _entering(tableau[-1, :], PIVOT_TOL)
        if col < 0:
            return 'optimal', pivots
        row = _leaving(tableau, col, basis, PIVOT_TOL)
        if row < 0:
            return 'unbounded', pivots
        _pivot(tableau, row, col)
        basis[row] = col
        pivots += 1
        if pivots >= max_pivots:
            raise NumericError(f"simplex exceeded {max_pivots} pivots")


def solve_lp(problem, max_pivots=50_000):
    """Dense two-phase simplex with Bland's rule.

    Variables with a finite lower bound are shifted to zero, free variables are
    split into a difference of two nonnegative ones, and finite upper bounds
    become extra <= rows.
    """
    n = problem.width
    c = np.asarray(problem.objective, dtype=float)
    lower = np.zeros(n) if problem.lower is None else np.asarray(problem.lower, dtype=float)
    upper = np.full(n, math.inf) if problem.upper is None else np.asarray(problem.upper, dtype=float)

    # column map: x_j = lower_j + x'_j, or x_j = x+_j - x-_j when lower_j is -inf
    free = ~np.isfinite(lower)
    shift = np.where(free, 0.0, lower)
    expand = np.eye(n)
    if free.any():
        expand = np.hstack([expand, -np.eye(n)[:, free]])
    width = expand.shape[1]

    rows, rhs, relations = [], [], []
    for con in problem.constraints:
        a = np.asarray(con.coefficients, dtype=float)
        rows.append(a @ expand)
        rhs.append(float(con.bound) - float(a @ shift))
        relations.append(con.relation)
    for j in np.flatnonzero(np.isfinite(upper)):
        a = np.zeros(n)
        a[j] = 1.0
        rows.append(a @ expand)
        rhs.append(float(upper[j] - shift[j]))
        relations.append('<=')
    cost = c @ expand

    m = len(rows)
    A = np.array(rows, dtype=float).reshape(m, width)
    b = np.array(rhs, dtype=float)
    flipped = np.zeros(m, dtype=bool)
    for i in range(m):
        if b[i] < 0 or (b[i] == 0 and relations[i] == '>='):
            A[i] *= -1.0
            b[i] *= -1.0
            flipped[i] = True
            relations[i] = {'<=': '>=', '>=': '<=', '=': '='}[relations[i]]

    n_slack = sum(1 for r in relations if r != '=')
    n_art = sum(1 for r in relations if r != '<=')
    total = width + n_slack + n_art
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, :width] = A
    tableau[:m, -1] = b
    basis = []
    s_col, a_col = width, width + n_slack
    artificial = []
    # (column, sign) of each row's slack; equality rows have none
    slacks = [None] * m
    for i, rel in enumerate(relations):
        if rel == '<=':
            tableau[i, s_col] = 1.0
            slacks[i] = (s_col, 1.0)
            basis.append(s_col)
            s_col += 1
        else:
            if rel == '>=':
                tableau[i, s_col] = -1.0
                slacks[i] = (s_col, -1.0)
                s_col += 1
            tableau[i, a_col] = 1.0
            basis.append(a_col)
            artificial.append(a_col)
            a_col += 1

    pivots = 0
    if artificial:
        # phase 1: maximize -sum(artificials)
        tableau[-1, artificial] = 1.0
        for i, j in enumerate(basis):
            if j in artificial:
                tableau[-1, :] -= tableau[i, :]
        status, p1 = _run_simplex(tableau, basis, max_pivots)
        pivots += p1
        if tableau[-1, -1] < -1e-8:
            logging.debug(f"LP infeasible after phase 1 ({pivots} pivots)")
            return LpSolution(status='infeasible', pivots=pivots)

        first_art = width + n_slack
        keep = np.ones(m, dtype=bool)
        for i, j in enumerate(basis):
            if j >= first_art:
                candidates = np.flatnonzero(np.abs(tableau[i, :first_art]) > PIVOT_TOL)
                if candidates.size:
                    _pivot(tableau, i, int(candidates[0]))
                    basis[i] = int(candidates[0])
                    pivots += 1
                else:
                    keep[i] = False  # redundant row
        tableau = np.vstack([tableau[:-1][keep], tableau[-1:]])
        basis = [j for j, k in zip(basis, keep) if k]
        tableau = np.hstack([tableau[:, :first_art], tableau[:, -1:]])

    # phase 2
    tableau[-1, :] = 0.0
    tableau[-1, :width] = -cost
    for i, j in enumerate(basis):
        if tableau[-1, j] != 0.0:
            tableau[-1, :] -= tableau[-1, j] * tableau[i, :]
    status, p2 = _run_simplex(tableau, basis, max_pivots)
    pivots += p2
    if status == 'unbounded':
        return LpSolution(status='unbounded', pivots=pivots)

    z = np.zeros(tableau.shape[1] - 1)
    for i, j in enumerate(basis):
        z[j] = tableau[i, -1]
    z = np.maximum(z, 0.0)
    values = shift + expand @ z[:width]
    values = np.clip(values, lower, upper)

    # d(objective)/d(bound) per constraint, read off the slack columns
    duals = np.full(len(problem.constraints), np.nan)
    for i in range(len(problem.constraints)):
        if slacks[i] is not None:
            col, sign = slacks[i]
            y = tableau[-1, col] / sign
            duals[i] = -y if flipped[i] else y
    return LpSolution(
        status='optimal',
        values=values,
        objective_value=float(c @ values),
        pivots=pivots,
        reduced_costs=tableau[-1, :-1].copy(),
        duals=duals,
    )


# ---------------------------------------------------------------------------
# Projected subgradient driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubgradientConfig:
    """Step rule for the multiplier updates.

    'polyak' steps by (dual - ln best primal) / |subgradient|^2; 'diminishing'
    uses step_scale/sqrt(t), with step_scale=None picking a scale from the
    first evaluation. Either way the loop stops once the best objective moves
    by less than ``tolerance`` over ``window`` iterations.
    """
    step_scale: Optional[float] = None
    step_rule: str = 'polyak'
    max_iterations: int = 100_000
    tolerance: float = 1e-8
    window: int = 50
    gap_tolerance: float = 1e-7
    clamp_low: float = CLAMP_LOW
    clamp_high: float = CLAMP_HIGH

    def __post_init__(self):
        if self.step_scale is not None and not self.step_scale > 0:
            raise DomainError("step_scale must be positive")
        if self.step_rule not in STEP_RULES:
            raise DomainError(f"unknown step_rule {self.step_rule!r}; choose from {STEP_RULES}")
        if self.max_iterations < 1 or self.window < 1:
            raise DomainError("max_iterations and window must be >= 1")
        if not 0.0 < self.clamp_low < self.clamp_high < 1.0:
            raise DomainError("clamps must satisfy 0 < low < high < 1")


@dataclass(frozen=True)
class SubgradientResult:
    multipliers: np.ndarray
    objective: float
    iterations: int
    converged: bool
    dual_bound: float
    best_multipliers: np.ndarray
    history: Tuple[float, ...] = ()


def projected_subgradient(evaluate, config, dimension, target=None):
    """Minimize the dual of  max ln(R) s.t. g_n >= R  over multipliers >= 0.

    ``evaluate(lam)`` returns ``(objective, slacks)``: the primal-feasible
    objective recovered at the inner maximizer and the constraint slacks
    g_n - R with R = 1/sum(lam). The dual value is then
    -ln(sum(lam)) + lam @ slacks, an upper bound on ln of the optimum. The
    loop stops when the duality gap closes or when the best objective changes
    by less than ``config.tolerance`` over ``config.window`` iterations.

    ``target`` is an optional lower bound on the optimum, e.g. a feasible value
    found another way; Polyak steps aim at the larger of it and the best
    objective seen so far.
    """
    if dimension < 1:
        raise DomainError("dimension must be >= 1")
    if target is not None and not target > 0.0:
        raise DomainError(f"target must be > 0, got {target}")

    def checked(lam):
        objective, slacks = evaluate(lam)
        slacks = np.asarray(slacks, dtype=float)
        if not math.isfinite(objective) or not np.all(np.isfinite(slacks)):
            raise NumericError(f"non-finite evaluation at multipliers {lam}")
        return float(objective), slacks

    def dual_value(lam, slacks):
        return -math.log(lam.sum()) + float(lam @ slacks)

    lam = np.full(dimension, 1.0 / dimension)
    objective, slacks = checked(lam)
    scale = config.step_scale
    if scale is None:
        peak = float(np.max(np.abs(slacks)))
        scale = 0.1 * lam.sum() / peak if peak > 1e-12 else 0.1
    dual = dual_value(lam, slacks)
    best, best_lam = objective, lam.copy()
    best_dual = dual
    history = [best]
    converged = False

    t = 0
    while t < config.max_iterations:
        t += 1
        step = scale / math.sqrt(t)
        norm = float(slacks @ slacks)
        level = max(best, target or 0.0)
        if config.step_rule == 'polyak' and level > 0.0 and norm > 0.0:
            gap = dual - math.log(level)
            if gap > 0.0:
                step = gap / norm
        candidate = np.maximum(lam - step * slacks, 0.0)
        if candidate.sum() <= 0.0:
            candidate = 0.5 * lam
        lam = candidate
        objective, slacks = checked(lam)
        if objective > best:
            best, best_lam = objective, lam.copy()
        dual = dual_value(lam, slacks)
        best_dual = min(best_dual, dual)
        history.append(best)

        if best > 0.0 and best_dual - math.log(best) <= config.gap_tolerance:
            converged = True
            break
        if t >= config.window and best - history[-1 - config.window] < config.tolerance:
            converged = True
            break
        if t % 1000 == 0:
            logging.debug(f"subgradient t={t} best={best:.10g} dual_bound={math.exp(best_dual):.10g}")

    if not converged:
        logging.warning(f"subgradient hit {t} iterations (best={best:.8g}, bound={math.exp(best_dual):.8g})")
    return SubgradientResult(
        multipliers=lam,
        objective=best,
        iterations=t,
        converged=converged,
        dual_bound=math.exp(best_dual),
        best_multipliers=best_lam,
        history=tuple(history),
    )
