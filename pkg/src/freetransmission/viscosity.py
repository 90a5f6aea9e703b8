"""Discrete viscosity-inequality checks with touching quadratics.

A trial picks an interior node x0 and a quadratic
    phi(x) = u(x0) + q.(x - x0) + 1/2 (x - x0)^T Q (x - x0)
proposed around the discrete jet of u: Q = D^2_h u(x0) + R (from above) or
D^2_h u(x0) - R (from below) with R a random positive semidefinite matrix,
and q = D_h u(x0) +/- xi with |xi| <= h lambda_min(R) / 4. The trial counts only
if phi touches u on a window of nodes around x0, i.e. u - phi has its window
maximum (from above) or minimum (from below) at x0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .degeneracy import exponent_stack
from .elliptic import EllipticOperator, evaluate
from .grid import ScalarField, gradient, hessian
from .solver import ProblemSpec

# Tolerance constant in C (h + reg_eps). Obtained with calibrate_tolerance_constant
# on the beta = 0 manufactured problem (n = 65), then floored at 1.
DEFAULT_TOLERANCE_CONSTANT = 1.0

STRICTNESS = 1e-12


@dataclass(frozen=True)
class TouchingTest:
    center: tuple[int, ...]
    q: np.ndarray
    Q: np.ndarray
    side: str
    window: int


@dataclass
class EnvelopeReport:
    side: str
    trials: int
    touching: int
    tolerance: float
    tolerance_constant: float
    worst_margin: float
    violations: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"side": self.side, "trials": self.trials, "touching": self.touching,
                "tolerance": self.tolerance, "tolerance_constant": self.tolerance_constant,
                "worst_margin": self.worst_margin, "violations": self.violations}


@dataclass
class DivisionReport:
    trials: int
    touching_above: int
    touching_below: int
    above_extreme: float
    below_extreme: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.above_extreme <= self.tolerance and self.below_extreme >= -self.tolerance

    def to_dict(self) -> dict:
        return {"trials": self.trials, "touching_above": self.touching_above,
                "touching_below": self.touching_below, "above_extreme": self.above_extreme,
                "below_extreme": self.below_extreme, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class _Batch:
    nodes: np.ndarray      # (T, d) node indices
    q: np.ndarray          # (T, d)
    Q: np.ndarray          # (T, d, d)
    touching: np.ndarray   # (T,) bool

    def test(self, t: int, side: str, window: int) -> TouchingTest:
        return TouchingTest(tuple(int(i) for i in self.nodes[t]), self.q[t], self.Q[t], side, window)


def _propose(u: ScalarField, trials: int, seed: int, side: np.ndarray, window: int, spread: float,
             q_cap: float) -> _Batch:
    """Trial t draws its node from rng(seed, t) and its jet perturbation from
    rng(seed, node, t), so every trial is reproducible on its own.

    side[t] is +1 (touching from above) or -1 (from below).
    """
    g = u.grid
    d, h = g.d, g.h
    values = np.asarray(u.values, dtype=float)
    grad = np.moveaxis(gradient(u), 0, -1)
    hess = np.moveaxis(np.moveaxis(hessian(u), 0, -1), 0, -1)
    interior = np.argwhere(np.asarray(g.mask))
    flat = np.flatnonzero(np.asarray(g.mask))
    picks = np.empty(trials, dtype=int)
    raw = np.empty((trials, 2 + d + d * d + d))
    for t in range(trials):
        k = int(np.random.default_rng([seed, t]).integers(len(interior)))
        picks[t] = k
        rng = np.random.default_rng([seed, int(flat[k]), t])
        raw[t, :2 + d] = rng.random(2 + d)
        raw[t, 2 + d:] = rng.standard_normal(d * d + d)
    nodes = interior[picks]
    scale = np.exp(np.log(1e-3) + raw[:, 0] * (np.log(spread) - np.log(1e-3)))
    evals = scale[:, None] * raw[:, 2:2 + d]
    rot, _ = np.linalg.qr(raw[:, 2 + d:2 + d + d * d].reshape(trials, d, d))
    R = np.einsum("tik,tk,tjk->tij", rot, evals, rot)
    direction = raw[:, 2 + d + d * d:]
    direction = direction / np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    radius = raw[:, 1] ** (1.0 / d) * 0.25 * h * evals.min(axis=1)
    at = tuple(nodes.T)
    Q = hess[at] + side[:, None, None] * R
    Q = 0.5 * (Q + np.swapaxes(Q, -1, -2))
    # xi flips with the side so that (u, above) and (-u, below) see mirrored trials
    q = grad[at] + side[:, None] * direction * radius[:, None]

    ok = np.abs(np.linalg.eigvalsh(Q)).max(axis=1) <= q_cap
    offs = np.array(list(np.ndindex(*([2 * window + 1] * d)))) - window
    offs = offs[np.sum(offs**2, axis=1) <= window**2]
    idx = nodes[:, None, :] + offs[None, :, :]
    inside = np.all((idx >= 0) & (idx < g.n), axis=2)
    idx = np.clip(idx, 0, g.n - 1)
    dx = offs * h
    u0 = values[at]
    phi = u0[:, None] + np.einsum("kd,td->tk", dx, q) + 0.5 * np.einsum("ki,tij,kj->tk", dx, Q, dx)
    gap = (values[tuple(np.moveaxis(idx, 2, 0))] - phi) * side[:, None]
    gap = np.where(inside, gap, -np.inf)
    tol = STRICTNESS * (1.0 + np.abs(u0))
    with np.errstate(invalid="ignore"):
        touching = ok & np.all(np.isfinite(gap) | ~inside, axis=1) & np.all(gap <= tol[:, None], axis=1)
    return _Batch(nodes, q, Q, touching)


def _envelope(u: ScalarField, spec: ProblemSpec, trials: int, seed: int, side: str, window: int,
              tolerance_constant: float, mode: str, spread: float, q_cap: float,
              max_listed: int) -> EnvelopeReport:
    if mode not in ("phases", "bounds"):
        raise ValueError("mode must be 'phases' or 'bounds'")
    g = u.grid
    sign = np.full(trials, 1.0 if side == "above" else -1.0)
    batch = _propose(u, trials, seed, sign, window, spread, q_cap)
    fnorm = spec.rhs.sup()
    tol = tolerance_constant * (g.h + spec.reg_eps)
    sel = np.nonzero(batch.touching)[0]
    if sel.size == 0:
        return EnvelopeReport(side, trials, 0, tol, tolerance_constant, float("nan"), [])
    law = spec.law
    if mode == "phases":
        x0 = g.coords()[(slice(None),) + tuple(batch.nodes[sel].T)]
        betas = exponent_stack(law, x0)
    else:
        betas = np.array([[law.beta_m], [law.beta_M]]) * np.ones((1, sel.size))
    Fq = evaluate(spec.operator, batch.Q[sel])
    qn = np.linalg.norm(batch.q[sel] + spec.shift, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(betas == 0, 1.0, qn[None, :] ** betas) * Fq[None, :]
    if side == "above":
        margin = vals.min(axis=0) - fnorm
    else:
        margin = -fnorm - vals.max(axis=0)
    violations = []
    for j in np.nonzero(margin > tol)[0]:
        t = int(sel[j])
        entry = {"node": [int(i) for i in batch.nodes[t]], "margin": float(margin[j] - tol)}
        if len(violations) < max_listed:
            entry.update(q=batch.q[t].tolist(), Q=batch.Q[t].tolist())
        violations.append(entry)
    return EnvelopeReport(side, trials, int(sel.size), tol, tolerance_constant, float(margin.max()), violations)


def envelope_sub_check(u: ScalarField, spec: ProblemSpec, trials: int = 10_000, seed: int = 0,
                       window: int = 5, tolerance_constant: float = DEFAULT_TOLERANCE_CONSTANT,
                       mode: str = "phases", spread: float = 4.0, q_cap: float = 10.0,
                       max_listed: int = 50) -> EnvelopeReport:
    """Test min_i |q + p|^beta_i(x0) F(Q) <= ||f|| + C (h + eps) for phi touching from above.

    mode="bounds" replaces the phase exponents by the pair (beta_m, beta_M).
    worst_margin is the largest value of (envelope - ||f||) seen.
    """
    return _envelope(u, spec, trials, seed, "above", window, tolerance_constant, mode, spread, q_cap,
                     max_listed)


def envelope_super_check(u: ScalarField, spec: ProblemSpec, trials: int = 10_000, seed: int = 0,
                         window: int = 5, tolerance_constant: float = DEFAULT_TOLERANCE_CONSTANT,
                         mode: str = "phases", spread: float = 4.0, q_cap: float = 10.0,
                         max_listed: int = 50) -> EnvelopeReport:
    """Test max_i |q + p|^beta_i(x0) F(Q) >= -||f|| - C (h + eps) for phi touching from below."""
    return _envelope(u, spec, trials, seed, "below", window, tolerance_constant, mode, spread, q_cap,
                     max_listed)


def homogeneous_division_check(u: ScalarField, operator: EllipticOperator, trials: int = 10_000,
                               seed: int = 0, window: int = 5, tolerance: float | None = None,
                               spread: float = 4.0, q_cap: float = 10.0) -> DivisionReport:
    """Signed extremes of F(Q) over touching quadratics on both sides.

    Passes when touching from above never gives F(Q) > tol and touching from
    below never gives F(Q) < -tol, the discrete content of F(D^2 u) = 0.
    """
    g = u.grid
    tol = 10 * g.h if tolerance is None else tolerance
    sign = np.where(np.arange(trials) % 2 == 0, 1.0, -1.0)
    batch = _propose(u, trials, seed, sign, window, spread, q_cap)
    Fq = evaluate(operator, batch.Q)
    above = batch.touching & (sign > 0)
    below = batch.touching & (sign < 0)
    return DivisionReport(trials, int(above.sum()), int(below.sum()),
                          float(Fq[above].max()) if above.any() else float("-inf"),
                          float(Fq[below].min()) if below.any() else float("inf"), tol)


def calibrate_tolerance_constant(n: int = 65, trials: int = 2000, seed: int = 0) -> float:
    """Worst envelope margin on the solved beta = 0 manufactured problem, per unit (h + eps)."""
    from .solver import manufactured_problem, solve
    from .grid import make_grid

    g = make_grid(2, n)
    spec, _ = manufactured_problem(0.0, g)
    u = solve(spec).u
    margins = []
    for check in (envelope_sub_check, envelope_super_check):
        rep = check(u, spec, trials=trials, seed=seed, tolerance_constant=0.0)
        if rep.touching:
            margins.append(rep.worst_margin)
    return max(margins) / (g.h + spec.reg_eps) if margins else 0.0
