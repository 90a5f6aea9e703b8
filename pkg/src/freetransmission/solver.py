"""Discrete solutions of |Du + p|^beta(x,u,Du) F(D^2 u) = f with Dirichlet data.

The gradient factor is regularized to (|Du + p|^2 + eps^2)^(beta/2) and the
equation is relaxed by explicit pseudo-time stepping u <- u - tau R(u) through
a decreasing continuation schedule of eps values. The starting point is the
solution of the uniformly elliptic problem F(D^2 u) = f (beta = 0).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .degeneracy import DegeneracyLaw, classify_phase, constant_law, exponent_stack
from .elliptic import EllipticOperator, evaluate
from .grid import GridSpec, ScalarField

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"residual {residual:.3e} above tolerance after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class StepUnstable(RuntimeError):
    def __init__(self, residual: float, iterations: int, step: float):
        super().__init__(f"pseudo-time step {step:.3e} unstable: residual grew to {residual:.3e} "
                         f"after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations
        self.step = step


Boundary = Callable[[np.ndarray], np.ndarray]


@dataclass
class ProblemSpec:
    operator: EllipticOperator
    law: DegeneracyLaw
    rhs: ScalarField
    boundary: Boundary | ScalarField
    shift: np.ndarray | None = None
    reg_eps: float | None = None

    def __post_init__(self):
        g = self.grid
        if self.shift is None:
            self.shift = np.zeros(g.d)
        self.shift = np.asarray(self.shift, dtype=float).reshape(g.d)
        if self.reg_eps is None:
            self.reg_eps = g.h
        if self.reg_eps < 0:
            raise ValueError("reg_eps must be nonnegative")
        if not np.isfinite(self.rhs.values[g.mask]).all():
            raise ValueError("right-hand side must be finite")
        if not np.isfinite(self.boundary_values()[g.boundary_layer()]).all():
            raise ValueError("boundary data must be finite on the boundary layer")

    @property
    def grid(self) -> GridSpec:
        return self.rhs.grid

    def boundary_values(self) -> np.ndarray:
        if isinstance(self.boundary, ScalarField):
            return np.asarray(self.boundary.values, dtype=float)
        return np.broadcast_to(np.asarray(self.boundary(self.grid.coords()), dtype=float), self.grid.shape)


@dataclass
class SolveConfig:
    """Pseudo-time parameters.

    ``step`` fixes tau outright. Otherwise tau is recomputed every iteration as
    ``step_factor * h^2 / (2 d Lambda c_max)`` with c_max the largest current
    gradient factor, which keeps the explicit flow stable.
    """

    step: float | None = None
    step_factor: float = 0.9
    tol: float = 1e-3
    max_iters: int = 200_000
    continuation: tuple[float, ...] | None = None
    history_every: int = 100

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.step_factor <= 0:
            raise ValueError("step_factor must be positive")
        if self.continuation is not None and len(self.continuation) == 0:
            raise ValueError("continuation schedule must be nonempty")

    def schedule(self, target: float) -> tuple[float, ...]:
        if self.continuation is not None:
            sched = tuple(float(e) for e in self.continuation)
            if any(b > a for a, b in zip(sched, sched[1:])):
                raise ValueError("continuation schedule must be decreasing")
            return sched
        return (4 * target, 2 * target, target) if target > 0 else (0.0,)


@dataclass
class SolveResult:
    u: ScalarField
    iterations: int
    residual: float
    history: list[tuple[int, float]] = field(default_factory=list)
    schedule: tuple[float, ...] = ()

    def diagnostics(self) -> dict:
        return {"iterations": self.iterations, "final_residual": self.residual,
                "residual_history": [[int(k), float(r)] for k, r in self.history],
                "reg_eps_schedule": list(self.schedule)}


class _Discretization:
    """Slab stencils (nodes 1..n-2 along every axis) for one problem."""

    def __init__(self, spec: ProblemSpec):
        g = spec.grid
        self.grid = g
        self.d = g.d
        self.h = g.h
        self.inner = (slice(1, -1),) * g.d
        self.mask = np.asarray(g.mask)[self.inner]
        self.F = spec.operator
        self.law = spec.law
        self.p = spec.shift
        self.f = np.asarray(spec.rhs.values)[self.inner]
        coords = g.coords()[(slice(None),) + self.inner]
        self.betas = exponent_stack(spec.law, coords)
        self.single = spec.law.n_phases == 1
        self.lam_scale = 2 * self.d * spec.operator.Lam
        self.trace_only = spec.operator.kind == "negative_trace"

    def _nb(self, v, axis, step):
        idx = [slice(1, -1)] * self.d
        idx[axis] = slice(1 + step, v.shape[axis] - 1 + step)
        return v[tuple(idx)]

    def _nb2(self, v, ax1, s1, ax2, s2):
        idx = [slice(1, -1)] * self.d
        idx[ax1] = slice(1 + s1, v.shape[ax1] - 1 + s1)
        idx[ax2] = slice(1 + s2, v.shape[ax2] - 1 + s2)
        return v[tuple(idx)]

    def derivatives(self, v: np.ndarray, full_hessian: bool = True):
        """Central gradient, one-sided mean-square modulus of Du + p, Hessian (d, d, ...).

        Without ``full_hessian`` only the diagonal second differences are filled.
        """
        h, d = self.h, self.d
        c = v[self.inner]
        grad = np.empty((d,) + c.shape)
        msq = np.zeros(c.shape)
        H = np.zeros((d, d) + c.shape)
        for j in range(d):
            up, dn = self._nb(v, j, 1), self._nb(v, j, -1)
            grad[j] = (up - dn) / (2 * h)
            fwd = (up - c) / h + self.p[j]
            bwd = (c - dn) / h + self.p[j]
            msq += 0.5 * (fwd * fwd + bwd * bwd)
            H[j, j] = (up - 2 * c + dn) / h**2
            if not full_hessian:
                continue
            for k in range(j + 1, d):
                cross = (self._nb2(v, j, 1, k, 1) + self._nb2(v, j, -1, k, -1)
                         - self._nb2(v, j, 1, k, -1) - self._nb2(v, j, -1, k, 1)) / (4 * h**2)
                H[j, k] = H[k, j] = cross
        return grad, msq, H

    def operator_values(self, H: np.ndarray) -> np.ndarray:
        if self.trace_only:
            return -sum(H[j, j] for j in range(self.d))
        return evaluate(self.F, np.moveaxis(np.moveaxis(H, 0, -1), 0, -1), check=False)

    def beta(self, c: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.single:
            return self.betas[0]
        idx = classify_phase(self.law, c, np.moveaxis(grad, 0, -1))
        return np.take_along_axis(self.betas, idx[None], axis=0)[0]

    def residual(self, v: np.ndarray, eps: float, zero_beta: bool = False):
        """Residual on the slab (zero off the interior mask) and the gradient factor."""
        grad, msq, H = self.derivatives(v, full_hessian=not self.trace_only)
        Fv = self.operator_values(H)
        if zero_beta:
            coef = np.ones_like(Fv)
        else:
            beta = self.beta(v[self.inner], grad)
            if self.single and self.law.complement.kind == "constant":
                coef = (msq + eps * eps) ** (0.5 * float(self.law.complement.value))
            else:
                coef = (msq + eps * eps) ** (0.5 * beta)
        R = coef * Fv - self.f
        R[~self.mask] = 0.0
        return R, coef


def _with_boundary(spec: ProblemSpec, interior: np.ndarray | None = None) -> np.ndarray:
    g = spec.grid
    v = np.array(spec.boundary_values(), dtype=float)
    if interior is not None:
        v[g.mask] = interior[g.mask]
    return v


def residual(spec: ProblemSpec, u: ScalarField) -> ScalarField:
    """R = (|Du + p|^2 + eps^2)^(beta/2) F(D^2 u) - f at interior nodes, 0 elsewhere."""
    disc = _Discretization(spec)
    R, _ = disc.residual(np.asarray(u.values, dtype=float), spec.reg_eps)
    out = np.zeros(spec.grid.shape)
    out[disc.inner] = R
    return ScalarField(spec.grid, out)


def _laplace_direct(spec: ProblemSpec, rhs_scale: float = 1.0) -> np.ndarray:
    """Exact discrete solution of -c Delta u = f (c = 1) with the boundary data."""
    g = spec.grid
    v = _with_boundary(spec)
    m = np.asarray(g.mask)
    ids = -np.ones(g.shape, dtype=np.int64)
    nint = int(m.sum())
    ids[m] = np.arange(nint)
    rows, cols, vals = [], [], []
    b = np.asarray(spec.rhs.values)[m] * rhs_scale * g.h**2
    flat_idx = np.nonzero(m)
    diag_ids = ids[m]
    rows.append(diag_ids)
    cols.append(diag_ids)
    vals.append(np.full(nint, 2.0 * g.d))
    for j in range(g.d):
        for s in (1, -1):
            nb = tuple(fi + (s if a == j else 0) for a, fi in enumerate(flat_idx))
            nb_ids = ids[nb]
            inside = nb_ids >= 0
            rows.append(diag_ids[inside])
            cols.append(nb_ids[inside])
            vals.append(-np.ones(int(inside.sum())))
            b[~inside] += v[nb][~inside]
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nint, nint))
    v[m] = spla.spsolve(A.tocsc(), b)
    return v


def _relax(disc: _Discretization, v: np.ndarray, eps: float, config: SolveConfig, tol: float,
           zero_beta: bool, iters0: int, history: list) -> tuple[np.ndarray, int, float]:
    inner = disc.inner
    base = disc.h**2 / disc.lam_scale
    R, coef = disc.residual(v, eps, zero_beta)
    res = float(np.abs(R).max())
    best = res
    it = 0
    while res > tol:
        if iters0 + it >= config.max_iters:
            raise NonConvergence(res, iters0 + it)
        if config.step is not None:
            tau = config.step
        else:
            cmax = float(coef[disc.mask].max()) if disc.mask.any() else 1.0
            tau = config.step_factor * base / max(cmax, 1e-300)
        v[inner] -= tau * R
        it += 1
        R, coef = disc.residual(v, eps, zero_beta)
        res = float(np.abs(R).max())
        if not math.isfinite(res) or res > 10 * best:
            raise StepUnstable(res, iters0 + it, tau)
        best = min(best, res)
        if (iters0 + it) % config.history_every == 0:
            history.append((iters0 + it, res))
    return v, it, res


def solve(spec: ProblemSpec, config: SolveConfig | None = None) -> SolveResult:
    """Relax the regularized equation to sup|R| <= tol through the eps schedule."""
    config = config or SolveConfig()
    disc = _Discretization(spec)
    history: list[tuple[int, float]] = []
    iters = 0
    if spec.operator.kind == "negative_trace" and not spec.operator.reflected:
        v = _laplace_direct(spec)
    else:
        v = _laplace_direct(spec, rhs_scale=0.0)
        v, it, _ = _relax(disc, v, 0.0, config, config.tol, True, iters, history)
        iters += it
    sched = config.schedule(spec.reg_eps)
    res = math.nan
    for i, eps in enumerate(sched):
        last = i == len(sched) - 1
        tol = config.tol if last else 10 * config.tol
        v, it, res = _relax(disc, v, eps, config, tol, False, iters, history)
        iters += it
        log.debug("eps=%.3e: %d iterations, residual %.3e", eps, it, res)
    history.append((iters, res))
    return SolveResult(ScalarField(spec.grid, v), iters, res, history, sched)


def solve_homogeneous(operator: EllipticOperator, boundary: Boundary | ScalarField, grid: GridSpec,
                      config: SolveConfig | None = None) -> ScalarField:
    """F(D^2 h) = 0 with the given Dirichlet data."""
    spec = ProblemSpec(operator, constant_law(0.0), ScalarField(grid, np.zeros(grid.shape)), boundary)
    return solve(spec, config).u


@dataclass(frozen=True)
class ManufacturedSolution:
    beta: float
    d: int
    alpha: float
    rhs_value: float

    def u(self, x: np.ndarray) -> np.ndarray:
        r = np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=0))
        return r ** (1 + self.alpha)

    def f(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.asarray(x).shape[1:], self.rhs_value)


def manufactured_radial(beta: float, kind: str = "negative_trace", d: int = 2) -> ManufacturedSolution:
    """u = |x|^(1+alpha) with alpha = 1/(1+beta) and f = -(1+alpha)^(1+beta) (alpha+d-1).

    |Du|^beta (-Delta u) = f away from the origin; the power of |x| cancels
    because alpha (1 + beta) = 1.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if kind != "negative_trace":
        raise ValueError(f"manufactured solutions are only available for negative_trace (got {kind!r})")
    alpha = 1.0 / (1.0 + beta)
    return ManufacturedSolution(beta, d, alpha, -((1 + alpha) ** (1 + beta)) * (alpha + d - 1))


def manufactured_problem(beta: float, grid: GridSpec, reg_eps: float | None = None) -> tuple[ProblemSpec, ManufacturedSolution]:
    ms = manufactured_radial(beta, "negative_trace", grid.d)
    spec = ProblemSpec(EllipticOperator("negative_trace", d=grid.d), constant_law(beta),
                       ScalarField.from_function(grid, ms.f), ms.u, reg_eps=reg_eps)
    return spec, ms
