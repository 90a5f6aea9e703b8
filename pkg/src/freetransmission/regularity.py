"""Pointwise C^{1,alpha} certification by geometric iteration of affine fits.

Around a point x0 the engine fits affine maps l_k in the sup norm on the balls
B_{rho^k}(x0), compares the fit errors with rho^{k(1+alpha_k)}, and estimates
the exponent from the decay of those errors. A field is either a ScalarField
(grid mode) or a callable taking coordinates of shape (d, m) ("formula mode",
for radii far below any grid resolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Union

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import linprog

from .degeneracy import DegeneracyLaw, classify_phase, delta1_threshold, exponent_stack
from .elliptic import EllipticOperator
from .grid import GridSpec, ScalarField, gradient, make_grid

Field = Union[ScalarField, Callable[[np.ndarray], np.ndarray]]

FORMULA_SAMPLES = 33
SPHERE_SAMPLES = 64


class TooFewNodes(ValueError):
    pass


class RadiusUnderResolved(ValueError):
    pass


class DegenerateFit(ValueError):
    pass


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class AffineMap:
    """l(x) = a + b.(x - center); center defaults to the origin."""

    a: float
    b: np.ndarray
    center: np.ndarray | None = None

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        c = np.zeros_like(b) if self.center is None else np.asarray(self.center, dtype=float).reshape(b.shape)
        if not (math.isfinite(self.a) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("affine map entries must be finite")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "center", c)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at coordinates with the components in the first axis."""
        x = np.asarray(x, dtype=float)
        shift = self.center.reshape((-1,) + (1,) * (x.ndim - 1))
        return self.a + np.tensordot(self.b, x - shift, axes=(0, 0))

    @classmethod
    def zero(cls, d: int, center=None) -> "AffineMap":
        return cls(0.0, np.zeros(d), center)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b.tolist(), "center": self.center.tolist()}


@dataclass
class AffineFit:
    ell: AffineMap
    sup_err: float
    nodes: int
    ls_sup_err: float

    @property
    def ls_gap(self) -> float:
        return self.ls_sup_err - self.sup_err


@dataclass
class IterationRow:
    k: int
    radius: float
    alpha_k: float
    ell: AffineMap
    sup_err: float
    bound: float
    da: float
    db: float
    da_bound: float
    db_bound: float
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return self.sup_err <= self.bound + self.tolerance

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "ell"}
        out["ell"] = self.ell.to_dict()
        out["passed"] = self.passed
        return _plain(out)


@dataclass
class RegularityReport:
    point: tuple[float, ...]
    predicted_alpha: float
    predicted_alpha_active: float
    fitted_alpha: float | None
    r2: float | None
    K: float
    K_star: float
    coef_constant: float
    rows: list[IterationRow]
    theta: float
    theta_seminorm: float
    rho: float
    delta1: float | None
    rho_admissible: bool
    verdicts: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "rows"}
        out["point"] = list(self.point)
        out["rows"] = [r.to_dict() for r in self.rows]
        return _plain(out)


def _plain(obj):
    """Numpy scalars and arrays to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# normalization


@dataclass
class Normalized:
    u_bar: ScalarField
    f_bar: ScalarField
    K: float


def normalize(u: ScalarField, f: ScalarField, eps0: float) -> Normalized:
    """Scale u by K = min(1, 1/(|u| + |f|/eps0)) so that |u_bar| <= 1 and |f_bar| <= eps0.

    f_bar = K f. With u_bar = K u the true right side is K^{1+beta} f, which is
    bounded by K f because K <= 1.
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    total = u.sup() + f.sup() / eps0
    K = 1.0 if total <= 1.0 else 1.0 / total
    return Normalized(u * K, f * K, K)


# sampling and fitting


def _ball_samples(u: Field, x0: np.ndarray, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Points (m, d) in the closed ball B_r(x0) and the field values there."""
    if isinstance(u, ScalarField):
        g = u.grid
        sel = g.ball(x0, r, interior_only=False)
        pts = np.moveaxis(g.coords(), 0, -1)[sel]
        vals = u.values[sel]
        ok = np.isfinite(vals)
        return pts[ok], vals[ok]
    d = x0.size
    t = np.linspace(-1.0, 1.0, FORMULA_SAMPLES)
    lattice = np.stack(np.meshgrid(*([t] * d), indexing="ij"), axis=-1).reshape(-1, d)
    lattice = lattice[np.sum(lattice**2, axis=1) <= 1.0 + 1e-12]
    if d == 2:
        ang = np.linspace(0.0, 2 * np.pi, SPHERE_SAMPLES, endpoint=False)
        lattice = np.vstack([lattice, np.column_stack([np.cos(ang), np.sin(ang)])])
    pts = x0 + r * lattice
    vals = np.asarray(u(pts.T), dtype=float).reshape(-1)
    return pts, vals


def _min_nodes(d: int) -> int:
    return 3**d


_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


_FAR = 1e3


def _chebyshev_lp(y: np.ndarray, v: np.ndarray, a_off: float = 0.0,
                  b_off: np.ndarray | None = None) -> tuple[float, np.ndarray, float]:
    """Lexicographic minimax fit of v by a + b.y: min sup error t, then min |b + b_off|_1,
    then min |a + a_off|.

    v is expected at unit scale and y in the unit ball, so feasible a and b are
    O(1). An offset beyond _FAR then fixes the sign of b_j + b_off_j and its
    absolute value is linear; that case skips the slack rows, which would
    otherwise carry huge right-hand sides.
    """
    m, d = y.shape
    b_off = np.zeros(d) if b_off is None else np.asarray(b_off, dtype=float)
    near_b = np.abs(b_off) <= _FAR
    near_a = abs(a_off) <= _FAR
    # variables: a, b (d), t, |b| slack (d), |a| slack
    nv = 2 * d + 3
    ia, ib, it, isb, isa = 0, slice(1, 1 + d), 1 + d, slice(2 + d, 2 + 2 * d), 2 + 2 * d
    A = np.zeros((2 * m + 2 * d + 2, nv))
    A[:m, ia], A[:m, ib], A[:m, it] = -1.0, -y, -1.0
    A[m:2 * m, ia], A[m:2 * m, ib], A[m:2 * m, it] = 1.0, y, -1.0
    for j in range(d):
        A[2 * m + 2 * j, [1 + j, 2 + d + j]] = 1.0, -1.0
        A[2 * m + 2 * j + 1, [1 + j, 2 + d + j]] = -1.0, -1.0
    A[2 * m + 2 * d, [ia, isa]] = 1.0, -1.0
    A[2 * m + 2 * d + 1, [ia, isa]] = -1.0, -1.0
    boff = np.where(near_b, b_off, 0.0)
    aoff = a_off if near_a else 0.0
    rhs = np.concatenate([-v, v, np.ravel(np.column_stack([-boff, boff])), [-aoff, aoff]])
    bounds = [(None, None)] * (1 + d) + [(0, None)] * (d + 2)

    def run(c, extra_A=None, extra_b=None):
        AA, bb = A, rhs
        if extra_A is not None:
            AA, bb = np.vstack([A, extra_A]), np.concatenate([rhs, extra_b])
        res = linprog(c, A_ub=AA, b_ub=bb, bounds=bounds, method="highs", options=_LP_OPTIONS)
        if res.status != 0:
            raise RuntimeError(f"affine fit LP failed: {res.message}")
        return res.x

    def cap(c, x):
        val = float(c @ x)
        return val + 1e-9 * abs(val) + floor

    floor = 1e-14 * max(1.0, float(np.max(np.abs(v))))
    c_t = np.zeros(nv)
    c_t[it] = 1.0
    x = run(c_t)
    t_cap = cap(c_t, x)
    c_b = np.zeros(nv)
    c_b[isb] = np.where(near_b, 1.0, 0.0)
    c_b[ib] = np.where(near_b, 0.0, np.sign(b_off))
    x = run(c_b, c_t[None], [t_cap])
    c_a = np.zeros(nv)
    if near_a:
        c_a[isa] = 1.0
    else:
        c_a[ia] = np.sign(a_off)
    x = run(c_a, np.vstack([c_t, c_b]), [t_cap, cap(c_b, x)])
    return float(x[ia]) + 0.0, np.array(x[ib]) + 0.0, t_cap


def _chebyshev(y: np.ndarray, v: np.ndarray, start: int = 256, add: int = 256) -> tuple[float, np.ndarray, float]:
    """Exact minimax fit by constraint generation.

    The LP runs on a working set of samples. If its solution stays within the
    working tolerance on every sample it is optimal for the full set, since the
    full feasible region is contained in the working one.
    """
    m = len(v)
    # remove the least-squares plane and work at unit scale, so that the LP
    # tolerances are relative to the size of the non-affine part of v
    design = np.column_stack([np.ones(m), y])
    ls, *_ = np.linalg.lstsq(design, v, rcond=None)
    w = v - design @ ls
    scale = float(np.max(np.abs(w)))
    if scale <= 64 * np.finfo(float).eps * max(float(np.max(np.abs(v))), np.finfo(float).tiny):
        # v is affine to round-off; the plane is the minimax fit
        return float(ls[0]), ls[1:].copy(), scale
    w = w / scale
    a_off, b_off = ls[0] / scale, ls[1:] / scale
    if m <= start:
        work = np.arange(m)
    else:
        work = np.unique(np.concatenate([
            np.linspace(0, m - 1, start // 2).astype(int),
            np.argsort(w)[:start // 4], np.argsort(w)[-start // 4:],
        ]))
    while True:
        a, b, t_cap = _chebyshev_lp(y[work], w[work], a_off, b_off)
        res = np.abs(w - a - y @ b)
        bad = np.setdiff1d(np.nonzero(res > t_cap)[0], work)
        if bad.size == 0:
            # optimal up to the LP feasibility tolerance
            a_full = ls[0] + scale * a
            b_full = ls[1:] + scale * b
            return float(a_full), b_full, float(np.max(np.abs(v - a_full - y @ b_full)))
        bad = bad[np.argsort(res[bad])[::-1][:add]]
        work = np.union1d(work, bad)


def best_affine(u: Field, x0, r: float) -> AffineFit:
    """Sup-norm best affine fit of u on the nodes of B_r(x0)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if r <= 0:
        raise ValueError("radius must be positive")
    pts, vals = _ball_samples(u, x0, r)
    d = x0.size
    if len(vals) < _min_nodes(d):
        raise TooFewNodes(f"B_{r:g}({x0.tolist()}) holds {len(vals)} nodes, need at least {_min_nodes(d)}")
    # local scaled coordinates keep the LP well conditioned at small radii
    y = (pts - x0) / r
    a, bs, err = _chebyshev(y, vals)
    design = np.column_stack([np.ones(len(y)), y])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    ls_err = float(np.max(np.abs(vals - design @ coef)))
    return AffineFit(AffineMap(a, bs / r, x0), err, len(vals), ls_err)


# exponents


def _ball_lattice(x0: np.ndarray, r: float, grid: GridSpec | None) -> np.ndarray:
    """Sample points (d, m) of B_r(x0) for exponent minimization; always contains x0."""
    d = x0.size
    if grid is not None:
        sel = grid.ball(x0, r, interior_only=False)
        pts = grid.coords()[:, sel]
    else:
        t = np.linspace(-1.0, 1.0, FORMULA_SAMPLES)
        lat = np.stack(np.meshgrid(*([t] * d), indexing="ij")).reshape(d, -1)
        lat = lat[:, np.sum(lat**2, axis=0) <= 1.0 + 1e-12]
        pts = x0[:, None] + r * lat
    return np.concatenate([x0[:, None], pts], axis=1)


def alpha_sequence(law: DegeneracyLaw, x0, rho: float, alpha0: float, eta: float = 0.01,
                   kmax: int = 6, grid: GridSpec | None = None, k0: int = 1) -> list[float]:
    """alpha_k = min_i min(alpha0 - eta, min over B_{rho^k}(x0) of 1/(1 + beta_i)) for k = k0..kmax.

    The inner minimum runs over the nodes of ``grid`` when given, otherwise over a
    local lattice of the ball.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if not 0 < eta < alpha0:
        raise ValueError("eta must lie in (0, alpha0)")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    cap = alpha0 - eta
    out = []
    for k in range(k0, kmax + 1):
        pts = _ball_lattice(x0, rho**k, grid)
        bmax = float(np.max(exponent_stack(law, pts)))
        out.append(min(cap, 1.0 / (1.0 + bmax)))
    # balls are nested, so the minimum is monotone; enforce it against sampling noise
    return list(np.maximum.accumulate(out))


def predicted_pointwise(law: DegeneracyLaw, x0, alpha0: float, eta: float = 0.01,
                        phases=None) -> float:
    """min over phases i of {alpha0 - eta, 1/(1 + beta_i(x0))}; ``phases`` restricts i."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    betas = exponent_stack(law, x0.reshape(-1, 1))[:, 0]
    if phases is not None:
        idx = sorted(set(int(i) for i in phases))
        if not idx:
            raise ValueError("phases must not be empty")
        betas = betas[idx]
    return float(min(alpha0 - eta, float(np.min(1.0 / (1.0 + betas)))))


def active_phases(law: DegeneracyLaw, u: ScalarField, x0, radius: float | None = None) -> list[int]:
    """Phase indices taken by u on the nodes of B_radius(x0) (default radius 2h)."""
    g = u.grid
    radius = 2 * g.h if radius is None else radius
    sel = g.ball(x0, radius)
    if not sel.any():
        sel = np.zeros(g.shape, dtype=bool)
        sel[g.index_of(x0)] = True
    grad = np.moveaxis(gradient(u), 0, -1)[sel]
    labels = classify_phase(law, u.values[sel], grad)
    return sorted(set(int(i) for i in np.atleast_1d(labels)))


def predicted_local(beta_M: float, alpha0: float, eta: float = 0.01) -> float:
    if beta_M < 0:
        raise ValueError("beta_M must be nonnegative")
    return float(min(alpha0 - eta, 1.0 / (1.0 + beta_M)))


# iteration


def resolvable_kmax(u: Field, x0, rho: float, limit: int = 60) -> int:
    """Largest k with at least 3^d samples in B_{rho^k}(x0); ``limit`` in formula mode."""
    if not isinstance(u, ScalarField):
        return limit
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    k = 0
    while k < limit:
        pts, _ = _ball_samples(u, x0, rho ** (k + 1))
        if len(pts) < _min_nodes(x0.size):
            break
        k += 1
    return k


def iterate(u: Field, x0, rho: float, law: DegeneracyLaw, alpha0: float, eta: float = 0.01,
            K: float = 1.0, kmax: int | None = None, check_admissible: bool = True) -> list[IterationRow]:
    """Rows k = 1..kmax of the geometric iteration around x0.

    Row k compares sup|u - l_k| on B_{rho^k} with K rho^{k(1+alpha_k)} and the
    coefficient increments against K rho^{(k-1)(1+alpha_{k-1})} and
    K rho^{(k-1) alpha_{k-1}}; l_0 = 0.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    if check_admissible and law.modulus.kind != "zero":
        alpha = predicted_pointwise(law, x0, alpha0, eta)
        gap = 0.5 * (alpha0 - alpha)
        if gap <= 0:
            raise ValueError("exponent gap alpha0 - alpha must be positive")
        d1 = delta1_threshold(law.modulus, gap)
        if rho > d1:
            raise ValueError(f"rho = {rho:g} exceeds the admissible threshold {d1:.4g}")
    top = resolvable_kmax(u, x0, rho)
    if kmax is None:
        kmax = top
    kmax = min(kmax, top)
    if kmax < 3:
        raise RadiusUnderResolved(f"only {kmax} resolvable radii at x0 = {x0.tolist()} (need 3)")
    grid = u.grid if isinstance(u, ScalarField) else None
    alphas = alpha_sequence(law, x0, rho, alpha0, eta, kmax, grid=grid, k0=0)
    prev = AffineMap.zero(d, x0)
    rows = []
    for k in range(1, kmax + 1):
        fit = best_affine(u, x0, rho**k)
        ak = alphas[k]
        rows.append(IterationRow(
            k=k, radius=rho**k, alpha_k=ak, ell=fit.ell, sup_err=fit.sup_err,
            bound=K * rho ** (k * (1 + ak)),
            da=abs(fit.ell.a - prev.a), db=float(np.linalg.norm(fit.ell.b - prev.b)),
            da_bound=K * rho ** ((k - 1) * (1 + alphas[k - 1])),
            db_bound=K * rho ** ((k - 1) * alphas[k - 1]),
            tolerance=1e-12 * (1.0 + abs(fit.ell.a)),
        ))
        prev = fit.ell
    return rows


def minimal_constant(rows: list[IterationRow]) -> float:
    """K* = max_k sup_err_k / rho^{k(1+alpha_k)}, independent of the K the rows were built with."""
    return max(r.sup_err / r.radius ** (1 + r.alpha_k) for r in rows)


def coefficient_constant(rows: list[IterationRow]) -> float:
    """Smallest C with every increment within C times its unit bound."""
    out = 0.0
    for prev, r in zip([None] + rows[:-1], rows):
        if prev is None:
            ua, ub = 1.0, 1.0
        else:
            ua = prev.radius ** (1 + prev.alpha_k)
            ub = prev.radius ** prev.alpha_k
        out = max(out, r.da / ua, r.db / ub)
    return out


@dataclass
class ExponentEstimate:
    alpha_hat: float
    r2: float
    b_limit: np.ndarray
    slope: float
    used_rows: int


def estimate_exponent(u: Field, x0, rho: float = 0.5, kmax: int | None = None,
                      rows: list[IterationRow] | None = None) -> ExponentEstimate:
    """Fit ln sup_err_k = s k ln(rho) + c; alpha_hat = min(s - 1, 1)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if rows is None:
        top = resolvable_kmax(u, x0, rho)
        kmax = top if kmax is None else min(kmax, top)
        if kmax < 3:
            raise RadiusUnderResolved(f"only {kmax} resolvable radii at x0 = {x0.tolist()} (need 3)")
        fits = [best_affine(u, x0, rho**k) for k in range(1, kmax + 1)]
        errs = np.array([f.sup_err for f in fits])
        b_limit = fits[-1].ell.b
    else:
        errs = np.array([r.sup_err for r in rows])
        b_limit = rows[-1].ell.b
    k = np.arange(1, len(errs) + 1)
    if isinstance(u, ScalarField):
        unorm = u.sup()
    else:
        unorm = float(np.max(np.abs(_ball_samples(u, x0, rho)[1])))
    floor = 10 * np.finfo(float).eps * max(unorm, np.finfo(float).tiny)
    use = errs > floor
    if use.sum() < 3:
        raise DegenerateFit(f"only {int(use.sum())} fit errors above round-off")
    xs = k[use] * math.log(rho)
    ys = np.log(errs[use])
    slope, icpt = np.polyfit(xs, ys, 1)
    pred = slope * xs + icpt
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ys - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentEstimate(float(min(slope - 1.0, 1.0)), r2, np.asarray(b_limit), float(slope), int(use.sum()))


# rescaling


@dataclass
class Rescaled:
    v: ScalarField
    operator: EllipticOperator
    sup: float

    @property
    def within_unit(self) -> bool:
        return self.sup <= 1.0 + 1e-6


def rescale(u: ScalarField, ell: AffineMap, rho: float, k: int, alpha_k: float,
            operator: EllipticOperator, x0=None, n_out: int | None = None,
            bounds_held: bool = False, tolerance: float = 1e-2) -> Rescaled:
    """v_k(x) = (u - l_k)(x0 + rho^k x) / rho^{k(1+alpha_k)} on a fresh grid of B_1.

    Off-node values come from multilinear interpolation. The operator becomes
    M -> rho^{k(1-alpha_k)} F(rho^{k(alpha_k-1)} M), which is F itself for the
    1-homogeneous kinds.
    """
    g = u.grid
    d = g.d
    x0 = np.zeros(d) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    r = rho**k
    if int(g.ball(x0, r, interior_only=False).sum()) < 9**d:
        raise ResolutionError(f"B_{r:g} around {x0.tolist()} holds fewer than {9**d} nodes")
    out = g if n_out is None else make_grid(d, n_out)
    scale = rho ** (k * (1 + alpha_k))
    if k == 0 and np.allclose(x0, 0):
        vals = u.values
    else:
        pts = x0 + r * np.moveaxis(out.coords(), 0, -1)
        interp = RegularGridInterpolator((g.axis,) * d, u.values, method="linear",
                                         bounds_error=False, fill_value=np.nan)
        vals = interp(pts)
    phys = x0.reshape((d,) + (1,) * d) + r * out.coords()
    v = (vals - ell(phys)) / scale
    if not np.all(np.isfinite(v[out.mask])):
        raise ResolutionError("B_{rho^k}(x0) leaves the sampled cube")
    field_v = ScalarField(out, v)
    sup = field_v.sup()
    if bounds_held and sup > 1.0 + tolerance:
        raise ValueError(f"rescaled field has sup {sup:.4g} > 1 although the bound held at step {k}")
    op_k = operator.conjugated(rho ** (k * (alpha_k - 1)))
    return Rescaled(field_v, op_k, sup)


# Hölder seminorm


def holder_seminorm(u: ScalarField, theta: float, region: np.ndarray | None = None, seed: int = 0,
                    max_nodes: int = 10_000, chunk: int = 512) -> float:
    """max |u(x) - u(y)| / |x - y|^theta over node pairs of ``region`` (default: interior).

    Above ``max_nodes`` nodes a seeded subsample of that size is used.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    g = u.grid
    region = g.mask if region is None else np.asarray(region, dtype=bool)
    pts = np.moveaxis(g.coords(), 0, -1)[region]
    vals = u.values[region]
    if len(vals) > max_nodes:
        pick = np.sort(np.random.default_rng(seed).choice(len(vals), size=max_nodes, replace=False))
        pts, vals = pts[pick], vals[pick]
    best = 0.0
    for s in range(0, len(vals), chunk):
        p = pts[s:s + chunk]
        dist = np.sqrt(np.sum((p[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
        diff = np.abs(vals[s:s + chunk, None] - vals[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dist > 0, diff / dist**theta, 0.0)
        best = max(best, float(q.max(initial=0.0)))
    return best


# full certification


def certify(u: Field, x0, law: DegeneracyLaw, alpha0: float = 1.0, eta: float = 0.01, rho: float = 0.5,
            kmax: int | None = None, K: float = 1.0, coef_factor: float = 4.0,
            exponent_tol: float = 0.05, theta_radius: float = 0.25, seed: int = 0) -> RegularityReport:
    """Run the iteration at x0 and compare the recovered exponent with the prediction.

    For grid fields x0 is moved to the nearest node first, so that the balls
    are centred where the field is sampled.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if isinstance(u, ScalarField):
        x0 = u.grid.axis[list(u.grid.index_of(x0))]
    alpha = predicted_pointwise(law, x0, alpha0, eta)
    if isinstance(u, ScalarField):
        alpha_active = predicted_pointwise(law, x0, alpha0, eta, phases=active_phases(law, u, x0))
    else:
        alpha_active = alpha
    delta1 = None
    admissible = True
    if law.modulus.kind != "zero" and alpha0 - alpha > 0:
        try:
            delta1 = delta1_threshold(law.modulus, 0.5 * (alpha0 - alpha))
            admissible = rho <= delta1
        except ValueError:
            delta1, admissible = 0.0, False
    rows = iterate(u, x0, rho, law, alpha0, eta, K=K, kmax=kmax, check_admissible=False)
    k_star = minimal_constant(rows)
    c_coef = coefficient_constant(rows)
    note = ""
    try:
        est = estimate_exponent(u, x0, rho, rows=rows)
        alpha_hat, r2 = est.alpha_hat, est.r2
        match = abs(alpha_hat - alpha) <= exponent_tol
        at_least = alpha_hat >= alpha - exponent_tol
    except DegenerateFit:
        alpha_hat, r2, match, at_least = None, None, True, True
        note = "smooth/saturated"
    theta = 0.5 * (alpha + alpha0)
    if isinstance(u, ScalarField):
        seminorm = holder_seminorm(u, theta, u.grid.ball(x0, theta_radius), seed=seed)
    else:
        seminorm = float("nan")
    verdicts = {
        "iteration_bounds_hold": bool(all(r.passed for r in rows)),
        "coefficients_cauchy": bool(c_coef <= coef_factor * K + 1e-12),
        "exponent_match": bool(match),
        "exponent_at_least": bool(at_least),
    }
    return RegularityReport(tuple(float(v) for v in x0), alpha, alpha_active, alpha_hat, r2, K, k_star,
                            c_coef, rows, theta, seminorm, rho, delta1, admissible, verdicts, note)
