"""Reduced quadratic program: minimize 0.5*s*|Rz + a + dv|^2 subject to Rz + a >= 0.

Sign convention: pre-stress factors ``delta`` are stored positive in
[1/2, 1] and the objective shift is ``d_vec = -d * delta``, so each spring
prefers to stretch by ``d * delta_l``.

Multipliers ``lambda_star`` follow the stationarity form
``R^T (Rz + a + d_vec - lambda) = 0``, i.e. the Lagrangian carries the same
prefactor ``s`` as the objective and ``lambda`` does not depend on ``s``.
``QpSolution.scaled_multipliers`` gives ``s * lambda``, the multipliers of
``F`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    BoundaryViolationError,
    CapError,
    DimensionError,
    GenericityError,
    MaxIterError,
    RankError,
    StartInfeasibleError,
)
from .rigidity import PartitionedSystem, rank_of

TOL_GENERIC = 1e-6
TOL_KKT = 1e-8
MAX_GENERIC_ATTEMPTS = 1000
BRUTE_FORCE_CAP = 20


# ---------------------------------------------------------------- pre-stress


@dataclass(frozen=True)
class PreStress:
    d: float
    delta: np.ndarray

    def __post_init__(self):
        if not self.d > 0:
            raise DimensionError(f"cutoff scale d must be positive, got {self.d}")
        delta = np.array(self.delta, dtype=float)
        if np.any(delta < 0.5) or np.any(delta > 1.0):
            raise DimensionError("pre-stress factors must lie in [1/2, 1]")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)

    @property
    def d_vec(self) -> np.ndarray:
        return -self.d * self.delta


def place_restrictions(R: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Restriction of R^T w to every interior place, shape (n_interior, 2)."""
    return (np.asarray(R).T @ np.asarray(w, float)).reshape(-1, 2)


def place_lines(R: np.ndarray) -> list[np.ndarray]:
    """Unit directions of the incident edges at every place, read off the rows of R."""
    R = np.asarray(R)
    lines = []
    for i in range(R.shape[1] // 2):
        block = R[:, 2 * i : 2 * i + 2]
        rows = block[np.linalg.norm(block, axis=1) > 0]
        lines.append(rows / np.linalg.norm(rows, axis=1, keepdims=True))
    return lines


def line_margin(v, directions, tol_generic: float = TOL_GENERIC) -> tuple[bool, float]:
    """Is ``v`` off every line ``s*q``? Returns (generic, Euclidean distance to the lines).

    The acceptance test is angular: |sin| of the angle to each line must
    exceed ``tol_generic``; a zero vector lies on every line.
    """
    v = np.asarray(v, dtype=float)
    nv = float(np.hypot(*v))
    if nv <= tol_generic:
        return False, nv
    dirs = np.asarray(directions, dtype=float).reshape(-1, 2)
    if len(dirs) == 0:
        return True, nv
    sines = np.abs(v[0] * dirs[:, 1] - v[1] * dirs[:, 0]) / nv
    return bool(sines.min() > tol_generic), float(nv * sines.min())


def genericity(R: np.ndarray, delta, tol_generic: float = TOL_GENERIC):
    """(ok, margin, per-place margins) for the restricted vectors of R^T delta."""
    vt = place_restrictions(R, delta)
    lines = place_lines(R)
    ok, margins = True, []
    for v, dirs in zip(vt, lines):
        g, m = line_margin(v, dirs, tol_generic)
        ok &= g
        margins.append(m)
    margin = float(min(margins)) if margins else float("inf")
    return ok, margin, margins


@dataclass(frozen=True)
class DeltaSample:
    delta: np.ndarray
    margin: float
    seed: int
    attempts: int


def select_generic_delta(R: np.ndarray, rng_seed: int, tol_generic: float = TOL_GENERIC) -> DeltaSample:
    """Sample delta uniformly in (1/2, 1)^E until R^T delta is off every incident line."""
    R = np.asarray(R, dtype=float)
    if R.shape[1] and rank_of(R) < R.shape[1]:
        raise RankError("R must have full column rank")
    rng = np.random.default_rng(rng_seed)
    for attempt in range(1, MAX_GENERIC_ATTEMPTS + 1):
        delta = rng.uniform(0.5, 1.0, size=R.shape[0])
        ok, margin, _ = genericity(R, delta, tol_generic)
        if ok:
            return DeltaSample(delta, margin, rng_seed, attempt)
    raise GenericityError(f"no generic pre-stress after {MAX_GENERIC_ATTEMPTS} draws")


# ---------------------------------------------------------------- problem


@dataclass(frozen=True)
class QpProblem:
    R: np.ndarray
    a: np.ndarray
    d_vec: np.ndarray
    scale: float
    d: float = 1.0
    delta: np.ndarray | None = None
    tol_override: float | None = None

    @property
    def n(self) -> int:
        return self.R.shape[1]

    @property
    def E(self) -> int:
        return self.R.shape[0]

    @property
    def live(self) -> np.ndarray:
        """Constraint rows that involve at least one interior place."""
        return np.flatnonzero(np.linalg.norm(self.R, axis=1) > 0)

    @property
    def tol_active(self) -> float:
        if self.tol_override is not None:
            return self.tol_override
        return 1e-8 * (self.d + float(np.max(np.abs(self.a), initial=0.0)))

    @property
    def ref(self) -> float:
        """Magnitude used to make KKT residuals dimensionless."""
        return max(1.0, float(np.max(np.abs(self.a), initial=0.0)) + float(np.max(np.abs(self.d_vec), initial=0.0)))

    def slack(self, z) -> np.ndarray:
        return self.R @ z + self.a

    def objective(self, z) -> float:
        r = self.R @ z + self.a + self.d_vec
        return 0.5 * self.scale * float(r @ r)


def assemble_qp(
    partition: PartitionedSystem,
    prestress: PreStress,
    scale: float | None = None,
    tol_active: float | None = None,
    check_boundary: bool = True,
) -> QpProblem:
    """Copy the blocks into a QpProblem; ``scale`` defaults to d**-3.

    Rows without interior entries carry no unknowns. With ``check_boundary``
    a negative value there raises BoundaryViolationError.
    """
    R, a = partition.R, partition.a
    dv = prestress.d_vec
    if a.shape != (R.shape[0],) or dv.shape != (R.shape[0],):
        raise DimensionError(f"R has {R.shape[0]} rows, a {a.shape}, d_vec {dv.shape}")
    qp = QpProblem(
        R=R,
        a=a,
        d_vec=dv,
        scale=prestress.d ** -3 if scale is None else float(scale),
        d=prestress.d,
        delta=prestress.delta,
        tol_override=tol_active,
    )
    if not check_boundary:
        return qp
    dead = np.setdiff1d(np.arange(qp.E), qp.live)
    bad = dead[qp.a[dead] < -qp.tol_active]
    if bad.size:
        edges = [partition.graph.edges[l].tolist() for l in bad]
        raise BoundaryViolationError(f"boundary motion compresses boundary contacts {edges}")
    return qp


# ---------------------------------------------------------------- KKT


@dataclass
class KktReport:
    stationarity: float
    primal: float
    complementarity: float
    dual: float
    tol: float
    ref: float

    @property
    def passed(self) -> bool:
        return max(self.stationarity, self.primal, self.complementarity, self.dual) <= self.tol

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.primal, self.complementarity, self.dual)


def verify_kkt(qp: QpProblem, z, lam, tol_kkt: float = TOL_KKT) -> KktReport:
    """Residuals of the four optimality conditions, relative to ``qp.ref``."""
    z = np.asarray(z, float)
    lam = np.asarray(lam, float)
    if z.shape != (qp.n,) or lam.shape != (qp.E,):
        raise DimensionError("z or lambda has the wrong length")
    s = qp.slack(z)
    ref = qp.ref
    stat = float(np.max(np.abs(qp.R.T @ (s + qp.d_vec - lam)), initial=0.0))
    primal = max(0.0, -float(np.min(s, initial=0.0)))
    comp = float(np.max(np.abs(lam * s), initial=0.0))
    dual = max(0.0, -float(np.min(lam, initial=0.0)))
    return KktReport(stat / ref, primal / ref, comp / ref**2, dual / ref, tol_kkt, ref)


# ---------------------------------------------------------------- solution


@dataclass
class QpSolution:
    z_star: np.ndarray | None
    lambda_star: np.ndarray | None
    active_set: tuple[int, ...]
    objective_value: float
    kkt: KktReport | None
    status: str  # optimal | infeasible | unconstrained-feasible
    scale: float = 1.0
    iterations: int = 0
    history: list[float] = field(default_factory=list)
    phase1_residual: float = 0.0
    certified_candidates: int = 0
    distinct_minimizers: int = 0

    @property
    def scaled_multipliers(self) -> np.ndarray | None:
        return None if self.lambda_star is None else self.scale * self.lambda_star


def _snap_active(qp: QpProblem, z, tol_active: float) -> tuple[int, ...]:
    s = qp.slack(z)
    live = qp.live
    return tuple(int(l) for l in live[np.abs(s[live]) <= tol_active])


def _finish(qp, z, lam, tol_active, tol_kkt, **kw) -> QpSolution:
    active = _snap_active(qp, z, tol_active)
    kkt = verify_kkt(qp, z, lam, tol_kkt)
    lam_max = float(np.max(lam, initial=0.0))
    status = "unconstrained-feasible" if lam_max <= tol_kkt * qp.ref else "optimal"
    return QpSolution(
        z_star=z,
        lambda_star=lam,
        active_set=active,
        objective_value=qp.objective(z),
        kkt=kkt,
        status=status,
        scale=qp.scale,
        **kw,
    )


class _Eqp:
    """Equality-constrained subproblems sharing R^T R and R^T (a + d_vec)."""

    def __init__(self, qp: QpProblem):
        self.qp = qp
        self.H = qp.R.T @ qp.R
        self.c = qp.R.T @ (qp.a + qp.d_vec)

    def solve(self, W: Sequence[int]):
        n = self.qp.n
        W = list(W)
        if not W:
            return np.linalg.solve(self.H, -self.c), np.zeros(0)
        A = self.qp.R[W]
        m = len(W)
        kkt = np.zeros((n + m, n + m))
        kkt[:n, :n] = self.H
        kkt[:n, n:] = A.T
        kkt[n:, :n] = A
        rhs = np.concatenate([-self.c, -self.qp.a[W]])
        sol = np.linalg.solve(kkt, rhs)
        return sol[:n], -sol[n:]


# ---------------------------------------------------------------- A1 / Phase 1


@dataclass
class A1Result:
    z_hat: np.ndarray
    min_slack: float
    holds: bool  # True when the unconstrained minimizer is infeasible


def check_a1_unconstrained(qp: QpProblem, tol_active: float | None = None) -> A1Result:
    tol = qp.tol_active if tol_active is None else tol_active
    if qp.n and rank_of(qp.R) < qp.n:
        raise RankError("normal equations are singular (R lacks full column rank)")
    z_hat = np.linalg.solve(qp.R.T @ qp.R, -qp.R.T @ (qp.a + qp.d_vec)) if qp.n else np.zeros(0)
    s = qp.slack(z_hat)
    ms = float(np.min(s, initial=np.inf))
    return A1Result(z_hat, ms, bool(ms < -tol))


@dataclass
class FeasibilityResult:
    z: np.ndarray
    feasible: bool
    residual: float  # penalty value sum(max(0, -(Rz+a))^2)
    iterations: int


def _penalty(qp, z) -> float:
    v = np.minimum(qp.slack(z)[qp.live], 0.0)
    return float(v @ v)


def _exact_line_search(s, t) -> float:
    """Minimize phi(alpha) = sum(min(0, s + alpha*t)^2) over alpha >= 0."""
    # derivative is piecewise linear and nondecreasing; walk the breakpoints
    bps = sorted({float(-si / ti) for si, ti in zip(s, t) if ti != 0 and -si / ti > 0})
    lo = 0.0
    for hi in bps + [np.inf]:
        mid = lo + 1.0 if hi == np.inf else 0.5 * (lo + hi)
        neg = (s + mid * t) < 0
        A = float(t[neg] @ t[neg])
        B = float(s[neg] @ t[neg])
        if A > 0:
            alpha = -B / A
            if alpha <= hi + 1e-15 * max(1.0, hi if np.isfinite(hi) else 1.0):
                return max(alpha, lo)
        elif B >= 0:
            return lo
        lo = hi
    return lo


def find_feasible_point(qp: QpProblem, tol_feas: float | None = None, max_iter: int = 500) -> FeasibilityResult:
    """Minimize the squared violation of the live constraints by a finite Newton iteration.

    Each step is the least-squares correction on the currently violated rows
    followed by an exact line search on the piecewise quadratic.
    """
    tol = 1e-8 * qp.ref if tol_feas is None else tol_feas
    R, a = qp.R[qp.live], qp.a[qp.live]
    z = np.zeros(qp.n)
    phi = _penalty(qp, z)
    it = 0
    while it < max_iter and phi > 0.0:
        it += 1
        s = R @ z + a
        V = np.flatnonzero(s < 0)
        p, *_ = np.linalg.lstsq(R[V], -s[V], rcond=None)
        if not np.any(p):
            break
        alpha = _exact_line_search(s, R @ p)
        z_new = z + alpha * p
        phi_new = _penalty(qp, z_new)
        if phi_new >= phi * (1 - 1e-14):
            if phi_new < phi:
                z, phi = z_new, phi_new
            break
        z, phi = z_new, phi_new
    return FeasibilityResult(z, phi <= tol**2, phi, it)


# ---------------------------------------------------------------- active set


def _independent_subset(R, candidates, tol=1e-10) -> list[int]:
    chosen: list[int] = []
    for l in candidates:
        trial = chosen + [int(l)]
        if np.linalg.matrix_rank(R[trial], tol=tol) == len(trial):
            chosen = trial
    return chosen


def _independent_of(R, W, l, tol=1e-10) -> bool:
    if not W:
        return True
    A = R[W].T
    coef, *_ = np.linalg.lstsq(A, R[l], rcond=None)
    return float(np.linalg.norm(A @ coef - R[l])) > tol * float(np.linalg.norm(R[l]))


def solve_active_set(
    qp: QpProblem,
    start,
    tol_active: float | None = None,
    max_iter: int | None = None,
    tol_kkt: float = TOL_KKT,
) -> QpSolution:
    """Primal active-set method from a feasible start, smallest-index tie-breaks."""
    tol_a = qp.tol_active if tol_active is None else tol_active
    max_iter = 50 * (qp.E + qp.n + 1) if max_iter is None else max_iter
    z = np.array(start, dtype=float)
    s = qp.slack(z)
    live = qp.live
    if np.any(s[live] < -tol_a):
        raise StartInfeasibleError(f"start violates constraints by {-s[live].min():.3g}")
    eqp = _Eqp(qp)
    W = _independent_subset(qp.R, [l for l in live if s[l] <= tol_a])
    history = [qp.objective(z)]
    lam_tol = tol_kkt * qp.ref
    lamW = np.zeros(0)
    for it in range(1, max_iter + 1):
        zW, lamW = eqp.solve(W)
        p = zW - z
        if np.linalg.norm(p) <= 1e-13 * (1.0 + np.linalg.norm(z)) * qp.ref:
            if not W or lamW.min() >= -lam_tol:
                z = zW
                lam = np.zeros(qp.E)
                lam[W] = lamW
                history.append(qp.objective(z))
                return _finish(qp, z, lam, tol_a, tol_kkt, iterations=it, history=history)
            worst = lamW.min()
            ties = [W[k] for k in range(len(W)) if lamW[k] <= worst + 1e-14 * abs(worst)]
            W.remove(min(ties))
            continue
        Rp = qp.R @ p
        s = qp.slack(z)
        alpha, block = 1.0, None
        thresh = 1e-12 * np.linalg.norm(p)
        inW = set(W)
        cands = []
        for l in live:
            if l in inW or Rp[l] >= -thresh:
                continue
            cands.append((max(s[l], 0.0) / (-Rp[l]), int(l)))
        cands.sort()
        for step, l in cands:
            if step >= alpha:
                break
            # a row dependent on W has R_l p = 0 in exact arithmetic; skip it
            if _independent_of(qp.R, W, l):
                alpha, block = step, l
                break
        z = z + alpha * p
        history.append(qp.objective(z))
        if block is not None:
            W.append(block)
    lam = np.zeros(qp.E)
    lam[W] = lamW if len(lamW) == len(W) else 0.0
    raise MaxIterError(
        f"active-set iteration did not terminate in {max_iter} steps",
        z=z,
        residuals=verify_kkt(qp, z, lam, tol_kkt),
    )


def solve_qp(qp: QpProblem, tol_kkt: float = TOL_KKT, max_iter: int | None = None) -> QpSolution:
    """A1 check, Phase 1, then the active-set solve."""
    tol_a = qp.tol_active
    a1 = check_a1_unconstrained(qp)
    if not a1.holds:
        lam = np.zeros(qp.E)
        return _finish(qp, a1.z_hat, lam, tol_a, tol_kkt, history=[qp.objective(a1.z_hat)])
    feas = find_feasible_point(qp)
    if not feas.feasible:
        return QpSolution(
            z_star=None,
            lambda_star=None,
            active_set=(),
            objective_value=float("nan"),
            kkt=None,
            status="infeasible",
            scale=qp.scale,
            phase1_residual=feas.residual,
        )
    sol = solve_active_set(qp, feas.z, max_iter=max_iter, tol_kkt=tol_kkt)
    sol.phase1_residual = feas.residual
    return sol


# ---------------------------------------------------------------- oracle


def brute_force_solve(qp: QpProblem, tol_kkt: float = TOL_KKT, cap: int = BRUTE_FORCE_CAP) -> QpSolution:
    """Enumerate candidate working sets and keep the KKT-certified solution."""
    live = [int(l) for l in qp.live]
    if len(live) > cap:
        raise CapError(f"{len(live)} constraints exceed the enumeration cap {cap}")
    tol_a = qp.tol_active
    lam_tol = tol_kkt * qp.ref
    eqp = _Eqp(qp)
    found = []
    for size in range(0, min(qp.n, len(live)) + 1):
        for W in combinations(live, size):
            W = list(W)
            if size and np.linalg.matrix_rank(qp.R[W], tol=1e-10) < size:
                continue
            z, lamW = eqp.solve(W)
            if np.any(qp.slack(z)[live] < -tol_a):
                continue
            if size and lamW.min() < -lam_tol:
                continue
            lam = np.zeros(qp.E)
            lam[W] = lamW
            found.append((z, lam))
    if not found:
        return QpSolution(None, None, (), float("nan"), None, "infeasible", scale=qp.scale)
    distinct: list[np.ndarray] = []
    for z, _ in found:
        if not any(np.linalg.norm(z - y) <= 1e-8 * qp.ref for y in distinct):
            distinct.append(z)
    z, lam = found[0]
    return _finish(
        qp,
        z,
        lam,
        tol_a,
        tol_kkt,
        certified_candidates=len(found),
        distinct_minimizers=len(distinct),
    )


# ---------------------------------------------------------------- d scan


@dataclass
class DScanRow:
    d: float
    status: str
    n_active: int
    theorem_ok: bool | None
    objective: float


@dataclass
class DScanTable:
    rows: list[DScanRow]
    d_star: float | None  # smallest sampled d from which the property holds at every larger sample

    @property
    def stabilized(self) -> bool:
        return self.d_star is not None


def scan_for_dstar(
    partition: PartitionedSystem,
    delta,
    d_values: Sequence[float],
    tol_collinear: float = 1e-6,
) -> DScanTable:
    from .analysis import full_displacement, classify_contacts, verify_theorem

    d_values = [float(d) for d in d_values]
    if any(b <= a for a, b in zip(d_values, d_values[1:])):
        raise ValueError("d_values must be strictly increasing")
    rows = []
    for d in d_values:
        qp = assemble_qp(partition, PreStress(d, delta))
        sol = solve_qp(qp)
        ok = None
        if sol.status == "optimal":
            U = full_displacement(partition, sol.z_star)
            states = classify_contacts(partition.graph, U, qp.tol_active)
            ok = verify_theorem(partition.graph, states, tol_collinear).holds
        rows.append(DScanRow(d, sol.status, len(sol.active_set), ok, sol.objective_value))
    d_star = None
    for row in reversed(rows):
        if row.theorem_ok:
            d_star = row.d
        else:
            break
    return DScanTable(rows, d_star)
