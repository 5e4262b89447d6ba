"""Dense bounded-variable simplex solver and MPS export.

Desk-scale LP engine used by the schedulers: a two-phase primal simplex
on the system  A x - r = 0  with row activities r ranged by the row
bounds, artificial variables for phase 1, Dantzig pricing with a Bland
fallback against cycling, and an explicitly maintained basis inverse with
periodic refactorization. All pivoting rules break ties by lowest column
index, so solves are bit-reproducible.

Problems are stated in MAXIMIZE sense. Every variable needs at least one
finite bound (all scheduling variables here have a finite lower bound).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import SolverNumericsError, UnboundedProblem

INF = float("inf")

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2

_REFACTOR_EVERY = 100
_STALL_LIMIT = 300


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """Row/column container. Build with `add_variable` / `add_row`."""

    name: str = "lp"
    objective_offset: float = 0.0
    var_names: list = field(default_factory=list)
    var_lb: list = field(default_factory=list)
    var_ub: list = field(default_factory=list)
    var_obj: list = field(default_factory=list)
    integer_vars: list = field(default_factory=list)   # column indices, 0/1 vars
    row_names: list = field(default_factory=list)
    row_coeffs: list = field(default_factory=list)     # dict col -> coeff
    row_lb: list = field(default_factory=list)
    row_ub: list = field(default_factory=list)

    def add_variable(self, name, lb=0.0, ub=INF, obj=0.0, integer=False) -> int:
        j = len(self.var_names)
        self.var_names.append(name)
        self.var_lb.append(float(lb))
        self.var_ub.append(float(ub))
        self.var_obj.append(float(obj))
        if integer:
            self.integer_vars.append(j)
        return j

    def add_row(self, name, coeffs: dict, lb=-INF, ub=INF) -> int:
        i = len(self.row_names)
        self.row_names.append(name)
        self.row_coeffs.append(dict(coeffs))
        self.row_lb.append(float(lb))
        self.row_ub.append(float(ub))
        return i

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def dense(self):
        """(c, A, row_lb, row_ub, lb, ub) as numpy arrays."""
        n, m = self.n_vars, self.n_rows
        c = np.asarray(self.var_obj, dtype=float)
        A = np.zeros((m, n))
        for i, coeffs in enumerate(self.row_coeffs):
            for j, a in coeffs.items():
                A[i, j] = a
        return (c, A, np.asarray(self.row_lb, dtype=float),
                np.asarray(self.row_ub, dtype=float),
                np.asarray(self.var_lb, dtype=float),
                np.asarray(self.var_ub, dtype=float))


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float = float("nan")
    row_duals: np.ndarray | None = None      # d objective / d (row bound shift)
    reduced_costs: np.ndarray | None = None  # structural variables only
    var_status: np.ndarray | None = None     # _AT_LOWER/_AT_UPPER/_BASIC
    infeasible_rows: list = field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Working state of one simplex solve on M y = 0.

    Columns of M: [structural | row activities (-I) | artificials (+-e_i)].
    """

    def __init__(self, c, A, row_lb, row_ub, lb, ub, tol):
        m, n = A.shape
        self.m, self.n = m, n
        self.tol = tol
        ncols = n + 2 * m
        self.M = np.zeros((m, ncols))
        self.M[:, :n] = A
        self.M[:, n:n + m] = -np.eye(m)

        self.lb = np.concatenate([lb, row_lb, np.zeros(m)])
        self.ub = np.concatenate([ub, row_ub, np.full(m, INF)])

        # start: structural at a finite bound, activities clamped into range
        x = np.where(np.isfinite(self.lb[:n]), self.lb[:n],
                     self.ub[:n])
        if not np.all(np.isfinite(x)):
            raise ValueError("every variable needs at least one finite bound")
        activity = A @ x
        r = np.clip(activity, row_lb, row_ub)
        delta = activity - r
        sigma = np.where(delta > 0, -1.0, 1.0)
        self.M[:, n + m:] = np.diag(sigma)

        self.x = np.concatenate([x, r, np.abs(delta)])
        self.status = np.full(ncols, _AT_LOWER, dtype=np.int8)
        self.status[:n][~np.isfinite(self.lb[:n])] = _AT_UPPER
        at_upper_r = np.isclose(r, row_ub) & ~np.isclose(r, row_lb)
        self.status[n:n + m][at_upper_r] = _AT_UPPER
        self.basis = np.arange(n + m, ncols)
        self.status[self.basis] = _BASIC
        self.Binv = np.diag(sigma)  # inverse of diag(sigma) is itself

    # -- numerical housekeeping -------------------------------------------

    def refactorize(self):
        B = self.M[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise SolverNumericsError("singular basis") from exc
        # iterative refinement of the basic values against M y = 0
        for _ in range(2):
            resid = self.M @ self.x
            self.x[self.basis] -= self.Binv @ resid

    def prices(self, c):
        return c[self.basis] @ self.Binv

    # -- core loop ---------------------------------------------------------

    def run(self, c, maxiter):
        """Simplex iterations maximizing c @ y; returns True when optimal,
        raises UnboundedProblem when a ray is found."""
        tol = self.tol
        stall = 0
        use_bland = False
        movable = (self.ub - self.lb) > tol
        for it in range(maxiter):
            if it and it % _REFACTOR_EVERY == 0:
                self.refactorize()
            pi = self.prices(c)
            d = c - pi @ self.M
            nonbasic = self.status != _BASIC
            up_ok = nonbasic & movable & (self.status == _AT_LOWER) & (d > tol)
            dn_ok = nonbasic & movable & (self.status == _AT_UPPER) & (d < -tol)
            candidates = np.flatnonzero(up_ok | dn_ok)
            if candidates.size == 0:
                return True
            if use_bland:
                e = int(candidates[0])
            else:
                e = int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = 1.0 if self.status[e] == _AT_LOWER else -1.0

            w = self.Binv @ self.M[:, e]
            rate = -direction * w       # d x_B / d step
            step = self.ub[e] - self.lb[e]   # bound-flip distance
            leave_pos = -1
            leave_to = _AT_LOWER
            bx = self.x[self.basis]
            dec = rate < -tol
            inc = rate > tol
            with np.errstate(invalid="ignore"):
                lo_gap = np.where(dec, (bx - self.lb[self.basis]) / -rate, INF)
                hi_gap = np.where(inc, (self.ub[self.basis] - bx) / rate, INF)
            gaps = np.minimum(lo_gap, hi_gap)
            if gaps.size:
                k = int(np.argmin(gaps))
                # deterministic ties: lowest column index among near-minimal
                near = np.flatnonzero(gaps <= gaps[k] + 1e-12 * (1 + abs(gaps[k])))
                if near.size > 1:
                    k = int(near[np.argmin(self.basis[near])])
                if gaps[k] < step:
                    step = gaps[k]
                    leave_pos = k
                    leave_to = _AT_LOWER if lo_gap[k] <= hi_gap[k] else _AT_UPPER
            if not np.isfinite(step):
                raise UnboundedProblem(
                    f"improving ray through column {e}")

            step = max(step, 0.0)
            if step <= tol:
                stall += 1
                if stall > _STALL_LIMIT:
                    use_bland = True
            else:
                stall = 0
            # move
            self.x[self.basis] += step * rate
            self.x[e] += direction * step
            if leave_pos < 0:
                # bound flip, basis unchanged
                self.status[e] = _AT_UPPER if direction > 0 else _AT_LOWER
                self.x[e] = self.ub[e] if direction > 0 else self.lb[e]
                continue
            out = self.basis[leave_pos]
            self.status[out] = leave_to
            self.x[out] = self.lb[out] if leave_to == _AT_LOWER else self.ub[out]
            self.basis[leave_pos] = e
            self.status[e] = _BASIC
            # product-form update of Binv
            piv = w[leave_pos]
            if abs(piv) < 1e-11:
                self.refactorize()
                continue
            row = self.Binv[leave_pos] / piv
            self.Binv -= np.outer(w, row)
            self.Binv[leave_pos] = row
        raise SolverNumericsError(f"simplex iteration limit {maxiter} exceeded")


def solve_arrays(c, A, row_lb, row_ub, lb, ub, tol=1e-9,
                 row_names=None) -> LpSolution:
    """Two-phase solve of  max c.x  s.t. row_lb <= A x <= row_ub, lb <= x <= ub."""
    m, n = A.shape
    maxiter = 2000 + 60 * (m + n)
    tab = _Tableau(c, A, row_lb, row_ub, lb, ub, tol)

    scale = 1.0 + float(np.max(np.abs(tab.x))) if tab.x.size else 1.0
    if np.any(tab.x[n + m:] > tol):
        c1 = np.zeros(n + 2 * m)
        c1[n + m:] = -1.0
        tab.run(c1, maxiter)
        tab.refactorize()
        infeas = tab.x[n + m:]
        if infeas.sum() > 1e-7 * scale:
            bad = [int(i) for i in np.flatnonzero(infeas > 1e-7 * scale)]
            sol = LpSolution(LpStatus.INFEASIBLE, infeasible_rows=bad)
            return sol
    # pin artificials at zero for phase 2
    tab.ub[n + m:] = 0.0
    tab.x[n + m:] = 0.0

    c2 = np.zeros(n + 2 * m)
    c2[:n] = c
    try:
        tab.run(c2, maxiter)
    except UnboundedProblem:
        return LpSolution(LpStatus.UNBOUNDED)
    tab.refactorize()
    pi = tab.prices(c2)
    d = c2 - pi @ tab.M
    x = tab.x[:n].copy()
    # snap tiny bound violations left by floating point
    x = np.clip(x, np.where(np.isfinite(lb), lb, -INF),
                np.where(np.isfinite(ub), ub, INF))
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objective=float(c @ x),
        row_duals=pi.copy(),
        reduced_costs=d[:n].copy(),
        var_status=tab.status[:n].copy(),
    )


def solve_lp(lp: LinearProgram, tol=1e-9, lb_override=None,
             ub_override=None) -> LpSolution:
    """Solve a LinearProgram, ignoring integrality flags.

    `lb_override`/`ub_override` replace the variable bound arrays without
    touching the container (used for branch-and-bound nodes and for
    re-solves with fixed binaries)."""
    c, A, row_lb, row_ub, lb, ub = lp.dense()
    if lb_override is not None:
        lb = np.asarray(lb_override, dtype=float)
    if ub_override is not None:
        ub = np.asarray(ub_override, dtype=float)
    sol = solve_lp_cached(_DenseCache(lp, c, A, row_lb, row_ub), lb, ub, tol)
    return sol


class _DenseCache:
    """Holds the dense arrays of a LinearProgram so repeated solves with
    different bounds skip the assembly cost."""

    def __init__(self, lp, c=None, A=None, row_lb=None, row_ub=None):
        self.lp = lp
        if c is None:
            c, A, row_lb, row_ub, lb, ub = lp.dense()
            self.lb, self.ub = lb, ub
        else:
            self.lb = np.asarray(lp.var_lb, dtype=float)
            self.ub = np.asarray(lp.var_ub, dtype=float)
        self.c, self.A, self.row_lb, self.row_ub = c, A, row_lb, row_ub


def dense_cache(lp: LinearProgram) -> _DenseCache:
    return _DenseCache(lp)


def solve_lp_cached(cache: _DenseCache, lb, ub, tol=1e-9) -> LpSolution:
    sol = solve_arrays(cache.c, cache.A, cache.row_lb, cache.row_ub,
                       lb, ub, tol=tol)
    if sol.is_optimal:
        sol.objective += cache.lp.objective_offset
    if sol.status is LpStatus.INFEASIBLE and sol.infeasible_rows:
        sol.infeasible_rows = [cache.lp.row_names[i] for i in sol.infeasible_rows]
    return sol


# ---------------------------------------------------------------------------
# MPS export


def _mps_row_type(lb, ub):
    if lb == ub:
        return "E"
    if np.isfinite(ub):
        return "L"
    return "G"


def write_mps(lp: LinearProgram) -> str:
    """Render the model in fixed MPS text (OBJSENSE MAX, RANGES for ranged
    rows) for cross-checking against external solvers."""
    lines = [f"NAME          {lp.name}", "OBJSENSE", "    MAX", "ROWS",
             " N  OBJ"]
    rtypes = []
    for i, name in enumerate(lp.row_names):
        t = _mps_row_type(lp.row_lb[i], lp.row_ub[i])
        rtypes.append(t)
        lines.append(f" {t}  {name}")
    lines.append("COLUMNS")
    integer = set(lp.integer_vars)
    in_int_block = False
    col_rows = [[] for _ in range(lp.n_vars)]
    for i, coeffs in enumerate(lp.row_coeffs):
        for j, a in coeffs.items():
            col_rows[j].append((lp.row_names[i], a))
    marker = 0
    for j, vname in enumerate(lp.var_names):
        want_int = j in integer
        if want_int and not in_int_block:
            lines.append(f"    MARKER{marker}                 'MARKER'                 'INTORG'")
            marker += 1
            in_int_block = True
        elif not want_int and in_int_block:
            lines.append(f"    MARKER{marker}                 'MARKER'                 'INTEND'")
            marker += 1
            in_int_block = False
        entries = []
        if lp.var_obj[j] != 0.0:
            entries.append(("OBJ", lp.var_obj[j]))
        entries.extend(col_rows[j])
        for rname, a in entries:
            lines.append(f"    {vname:<10}{rname:<10}{a:.12g}")
    if in_int_block:
        lines.append(f"    MARKER{marker}                 'MARKER'                 'INTEND'")
    lines.append("RHS")
    for i, name in enumerate(lp.row_names):
        rhs = lp.row_ub[i] if rtypes[i] in ("L", "E") else lp.row_lb[i]
        if np.isfinite(rhs) and rhs != 0.0:
            lines.append(f"    RHS       {name:<10}{rhs:.12g}")
    ranged = [i for i in range(lp.n_rows)
              if rtypes[i] == "L" and np.isfinite(lp.row_lb[i])
              and lp.row_lb[i] != lp.row_ub[i]]
    if ranged:
        lines.append("RANGES")
        for i in ranged:
            span = lp.row_ub[i] - lp.row_lb[i]
            lines.append(f"    RNG       {lp.row_names[i]:<10}{span:.12g}")
    lines.append("BOUNDS")
    for j, vname in enumerate(lp.var_names):
        lo, hi = lp.var_lb[j], lp.var_ub[j]
        if j in integer and lo == 0.0 and hi == 1.0:
            lines.append(f" BV BND       {vname}")
            continue
        if lo == hi:
            lines.append(f" FX BND       {vname:<10}{lo:.12g}")
            continue
        if lo != 0.0:
            if np.isfinite(lo):
                lines.append(f" LO BND       {vname:<10}{lo:.12g}")
            else:
                lines.append(f" MI BND       {vname}")
        if np.isfinite(hi):
            lines.append(f" UP BND       {vname:<10}{hi:.12g}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
