"""Sparse convex QP solver: proximal augmented Lagrangian with semismooth Newton.

Solves ``min 1/2 x'Px + c'x  s.t.  Ax = b,  Gx <= h``.

Outer loop: multiplier updates ``y += rho (Ax - b)``, ``z = max(0, z + rho (Gx - h))``
with the penalty ``rho`` grown when primal feasibility stalls. Inner loop:
semismooth Newton on the proximal augmented Lagrangian, each step solving the
quasi-definite system

    [ P + sigma I   A'        G_act'   ] [dx]   [-grad]
    [ A             -I/rho    0        ] [ u] = [  0  ]
    [ G_act         0         -I/rho   ] [ w]   [  0  ]

with a sparse LU factorization that is reused while ``rho`` and the active
set stay the same. An exact line search handles the piecewise-quadratic
merit function. A final active-set polish brings the answer to rounding
precision.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITER = "max_iter"
STATUS_INFEASIBLE = "infeasible-ish"


class QpDimensionError(ValueError):
    pass


def _csc(M, shape) -> sp.csc_matrix:
    if M is None:
        return sp.csc_matrix(shape)
    M = sp.csc_matrix(M, dtype=np.float64)
    if M.shape != shape:
        raise QpDimensionError(f"matrix has shape {M.shape}, expected {shape}")
    return M


def _vec(v, n, what) -> np.ndarray:
    v = np.zeros(n) if v is None else np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape != (n,):
        raise QpDimensionError(f"{what} has length {v.size}, expected {n}")
    return v


class QpProblem:
    def __init__(self, P, c, A=None, b=None, G=None, h=None):
        c = np.asarray(c, dtype=np.float64).reshape(-1)
        n = c.size
        self.c = c
        self.P = _csc(P, (n, n))
        me = 0 if A is None else sp.csc_matrix(A).shape[0]
        mi = 0 if G is None else sp.csc_matrix(G).shape[0]
        self.A = _csc(A, (me, n))
        self.b = _vec(b, me, "b")
        self.G = _csc(G, (mi, n))
        self.h = _vec(h, mi, "h")
        asym = abs(self.P - self.P.T)
        if asym.nnz and asym.max() > 1e-12 * max(1.0, abs(self.P).max()):
            raise QpDimensionError("P must be symmetric")
        for name in ("c", "b", "h"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise QpDimensionError(f"{name} contains non-finite values")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def n_eq(self) -> int:
        return self.b.size

    @property
    def n_in(self) -> int:
        return self.h.size

    def objective(self, x) -> float:
        return float(0.5 * x @ (self.P @ x) + self.c @ x)


@dataclass
class QpSettings:
    eps_abs: float = 1e-8
    max_iter: int = 200
    rho: float = 1e-1
    rho_growth: float = 10.0
    rho_max: float = 1e7
    sigma: float = 1e-9
    max_newton: int = 50
    polish: bool = True
    warm_x: np.ndarray | None = None
    warm_y: np.ndarray | None = None
    warm_z: np.ndarray | None = None

    def __post_init__(self):
        if not (self.eps_abs > 0 and self.sigma > 0 and self.rho > 0):
            raise ValueError("tolerance, sigma and rho must be positive")
        if self.rho_growth <= 1 or self.rho_max < self.rho:
            raise ValueError("rho_growth must exceed 1 and rho_max must be >= rho")


@dataclass
class KktReport:
    stationarity: float
    primal_eq: float
    primal_in: float
    complementarity: float
    dual_sign: float

    def max(self) -> float:
        return max(self.stationarity, self.primal_eq, self.primal_in, self.complementarity, self.dual_sign)

    def as_dict(self) -> dict:
        return {
            "stationarity": self.stationarity, "primal_eq": self.primal_eq, "primal_in": self.primal_in,
            "complementarity": self.complementarity, "dual_sign": self.dual_sign,
        }


@dataclass
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    status: str
    iterations: int
    residuals: KktReport
    info: dict = field(default_factory=dict)


def _inf(v) -> float:
    return float(np.abs(v).max()) if np.size(v) else 0.0


def kkt_residuals(p: QpProblem, x, y=None, z=None) -> KktReport:
    """Recompute the KKT residuals (infinity norms) of a candidate point."""
    if isinstance(x, QpSolution):
        x, y, z = x.x, x.y, x.z
    x = np.asarray(x, dtype=np.float64)
    y = np.zeros(p.n_eq) if y is None else np.asarray(y, dtype=np.float64)
    z = np.zeros(p.n_in) if z is None else np.asarray(z, dtype=np.float64)
    gx = p.G @ x - p.h
    return KktReport(
        stationarity=_inf(p.P @ x + p.c + p.A.T @ y + p.G.T @ z),
        primal_eq=_inf(p.A @ x - p.b),
        primal_in=_inf(np.maximum(gx, 0.0)),
        complementarity=_inf(z * gx),
        dual_sign=_inf(np.minimum(z, 0.0)),
    )


class _Factor:
    """LU of the Newton system, keyed on (rho, active set)."""

    def __init__(self, p: QpProblem, sigma: float):
        self.p = p
        self.Ps = (p.P + sigma * sp.identity(p.n, format="csc")).tocsc()
        self.key = None
        self.lu = None
        self.count = 0

    def solve(self, rhs, rho: float, active: np.ndarray):
        key = (rho, active.tobytes())
        if key != self.key:
            Ga = self.p.G[active]
            ma = Ga.shape[0]
            K = sp.bmat(
                [
                    [self.Ps, self.p.A.T, Ga.T],
                    [self.p.A, -sp.identity(self.p.n_eq) / rho, None],
                    [Ga, None, -sp.identity(ma) / rho],
                ],
                format="csc",
            )
            self.lu = spla.splu(K, permc_spec="COLAMD")
            self.key = key
            self.count += 1
        full = np.zeros(self.lu.shape[0])
        full[: self.p.n] = rhs
        return self.lu.solve(full)[: self.p.n]


def _line_search(qa: float, qb: float, s: np.ndarray, e: np.ndarray, rho: float) -> float:
    """Minimize ``psi(t) = qa t + qb t^2/2 + rho/2 sum max(0, s + t e)^2`` over t >= 0."""
    # psi'(t) is non-decreasing piecewise linear; walk its breakpoints
    with np.errstate(divide="ignore", invalid="ignore"):
        bps = np.where(e != 0, -s / e, np.inf)
    cand = np.unique(bps[(bps > 0) & np.isfinite(bps)])
    lo = 0.0
    for hi in np.append(cand, np.inf):
        mid = lo + 1.0 if not np.isfinite(hi) else 0.5 * (lo + hi)
        on = (s + mid * e) > 0
        slope = qb + rho * np.sum(e[on] ** 2)
        const = qa + rho * np.sum(e[on] * s[on])
        if slope > 0:
            t = -const / slope
            if lo - 1e-15 <= t <= hi:
                return max(t, 0.0)
        if not np.isfinite(hi):
            break
        lo = hi
    return 1.0


def _polish_on(p: QpProblem, active: np.ndarray):
    """Equality-constrained solve with ``active`` inequalities held tight."""
    Ga = p.G[active]
    m = p.n_eq + Ga.shape[0]
    C = sp.vstack([p.A, Ga]).tocsc()
    d = np.concatenate([p.b, p.h[active]])
    delta = 1e-9
    K = sp.bmat([[p.P, C.T], [C, None]], format="csc")
    Kreg = (K + sp.block_diag([delta * sp.identity(p.n), -delta * sp.identity(m)])).tocsc()
    try:
        lu = spla.splu(Kreg, permc_spec="COLAMD")
    except RuntimeError:
        return None
    rhs = np.concatenate([-p.c, d])
    sol = lu.solve(rhs)
    for _ in range(10):
        r = rhs - K @ sol
        if _inf(r) < 1e-14 * max(1.0, _inf(rhs)):
            break
        sol = sol + lu.solve(r)
    if not np.all(np.isfinite(sol)):
        return None
    return sol[: p.n], sol[p.n: p.n + p.n_eq], sol[p.n + p.n_eq:]


def _polish(p: QpProblem, x, y, z, s: QpSettings, max_rounds: int = 10):
    """Solve the equality problem on the guessed active set.

    Degenerate constraints can enter the guess with a multiplier that comes
    out negative; those are dropped (and newly violated rows added) until the
    active set is self-consistent.
    """
    gx = p.G @ x - p.h
    active = (z > s.eps_abs) | (gx > -s.eps_abs)
    best, best_res = None, np.inf
    for _ in range(max_rounds):
        sol = _polish_on(p, active)
        if sol is None:
            break
        xp, yp, za = sol
        zp = np.zeros(p.n_in)
        zp[active] = za
        cand = (xp, yp, np.maximum(zp, 0.0))
        res = kkt_residuals(p, *cand).max()
        if res < best_res:
            best, best_res = cand, res
        nxt = active.copy()
        nxt[np.flatnonzero(active)[za < 0]] = False
        nxt |= (p.G @ xp - p.h) > s.eps_abs
        if res <= s.eps_abs or np.array_equal(nxt, active):
            break
        active = nxt
    return best


def solve(p: QpProblem, s: QpSettings | None = None) -> QpSolution:
    s = s or QpSettings()
    n = p.n
    x = _vec(s.warm_x, n, "warm_x").copy() if s.warm_x is not None else np.zeros(n)
    y = _vec(s.warm_y, p.n_eq, "warm_y").copy() if s.warm_y is not None else np.zeros(p.n_eq)
    z = np.maximum(_vec(s.warm_z, p.n_in, "warm_z"), 0.0) if s.warm_z is not None else np.zeros(p.n_in)
    rho = s.rho
    fac = _Factor(p, s.sigma)
    status = STATUS_MAX_ITER
    it = 0
    newton_total = 0
    prev_primal = np.inf
    stalled_at_cap = 0

    rep = kkt_residuals(p, x, y, z)
    if rep.max() <= s.eps_abs:
        return QpSolution(x, y, z, STATUS_OPTIMAL, 0, rep, {"rho": rho, "factorizations": 0, "newton": 0})

    for it in range(1, s.max_iter + 1):
        xk = x.copy()
        inner_tol = max(s.eps_abs * 0.1, min(1e-3, 0.1 * rep.max()))
        for _ in range(s.max_newton):
            ax = p.A @ x - p.b + y / rho
            gs = p.G @ x - p.h + z / rho
            act = gs > 0
            grad = p.P @ x + p.c + s.sigma * (x - xk) + rho * (p.A.T @ ax) + rho * (p.G.T @ np.maximum(gs, 0.0))
            if _inf(grad) <= inner_tol:
                break
            dx = fac.solve(-grad, rho, act)
            newton_total += 1
            Pd = p.P @ dx
            Ad = p.A @ dx
            qa = float(dx @ (p.P @ x + p.c + s.sigma * (x - xk)) + rho * (Ad @ ax))
            qb = float(dx @ Pd + s.sigma * dx @ dx + rho * (Ad @ Ad))
            t = _line_search(qa, qb, gs, p.G @ dx, rho)
            x = x + t * dx
        y = y + rho * (p.A @ x - p.b)
        z = np.maximum(0.0, z + rho * (p.G @ x - p.h))
        rep = kkt_residuals(p, x, y, z)
        if rep.max() <= s.eps_abs:
            status = STATUS_OPTIMAL
            break
        primal = max(rep.primal_eq, rep.primal_in)
        if primal > s.eps_abs and primal > 0.25 * prev_primal:
            if rho < s.rho_max:
                rho = min(rho * s.rho_growth, s.rho_max)
            else:
                stalled_at_cap += 1
        prev_primal = primal
        if stalled_at_cap >= 10:
            break

    if status != STATUS_OPTIMAL and s.polish:
        pol = _polish(p, x, y, z, s)
        if pol is not None:
            rp = kkt_residuals(p, *pol)
            if rp.max() < rep.max():
                x, y, z = pol
                rep = rp
                status = STATUS_OPTIMAL if rep.max() <= s.eps_abs else status
    elif status == STATUS_OPTIMAL and s.polish:
        pol = _polish(p, x, y, z, s)
        if pol is not None:
            rp = kkt_residuals(p, *pol)
            if rp.max() <= rep.max():
                x, y, z = pol
                rep = rp

    if status != STATUS_OPTIMAL:
        primal = max(rep.primal_eq, rep.primal_in)
        if primal > s.eps_abs and rho >= s.rho_max:
            status = STATUS_INFEASIBLE
    info = {"rho": rho, "factorizations": fac.count, "newton": newton_total}
    return QpSolution(x, y, z, status, it, rep, info)


# --- debug dump -----------------------------------------------------------

_SECTION = re.compile(r"^%%section (\w+)$", re.M)


def dump_problem(p: QpProblem, path) -> None:
    """Write the problem as a sequence of MatrixMarket blocks."""
    out = io.StringIO()
    out.write(f"%%qp-problem n={p.n} n_eq={p.n_eq} n_in={p.n_in}\n")
    for name in ("P", "c", "A", "b", "G", "h"):
        val = getattr(p, name)
        buf = io.BytesIO()
        mat = sp.coo_matrix(val) if sp.issparse(val) else np.asarray(val).reshape(-1, 1)
        scipy.io.mmwrite(buf, mat, precision=17)
        out.write(f"%%section {name}\n")
        out.write(buf.getvalue().decode())
    Path(path).write_text(out.getvalue())


def load_problem(path) -> QpProblem:
    text = Path(path).read_text()
    parts = _SECTION.split(text)
    blocks = {}
    for name, body in zip(parts[1::2], parts[2::2]):
        blocks[name] = scipy.io.mmread(io.BytesIO(body.lstrip("\n").encode()))
    vec = lambda k: np.asarray(blocks[k]).reshape(-1)  # noqa: E731
    return QpProblem(blocks["P"], vec("c"), blocks["A"], vec("b"), blocks["G"], vec("h"))
