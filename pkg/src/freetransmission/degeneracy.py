"""Phase-dependent degeneracy exponents and modulus-of-continuity analysis.

A law holds an ordered list of phases G_1..G_N, each a rule on (u, Du) paired
with an exponent field beta_i(x), plus the exponent beta_0 of the complement
G_0. The first matching rule wins, so the phases always partition (u, Du).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

PHASE_KINDS = ("positive_set", "negative_set", "zero_set", "nondegenerate_set", "gradient_band", "complement")
EXPONENT_KINDS = ("constant", "gaussian_bump", "table")
MODULUS_KINDS = ("zero", "sqrt", "log_power", "table")

RHO_CAP = math.exp(-1.0)
RHO_FLOOR = 1e-300


class NoAdmissibleRadius(ValueError):
    """No ratio rho above the search floor satisfies the modulus condition."""


@dataclass(frozen=True)
class PhaseRule:
    kind: str
    tolerance: float = 0.0
    band: tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        if self.kind not in PHASE_KINDS:
            raise ValueError(f"unknown phase kind {self.kind!r}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")

    def contains(self, u_val, grad) -> np.ndarray:
        """grad has the vector components in its last axis."""
        u_val = np.asarray(u_val, dtype=float)
        gnorm = np.linalg.norm(np.asarray(grad, dtype=float), axis=-1)
        tol = self.tolerance
        if self.kind == "positive_set":
            return u_val > tol
        if self.kind == "negative_set":
            return u_val < -tol
        if self.kind == "zero_set":
            return np.abs(u_val) <= tol
        if self.kind == "nondegenerate_set":
            return ~((np.abs(u_val) <= tol) & (gnorm <= tol))
        if self.kind == "gradient_band":
            lo, hi = self.band
            return (gnorm >= lo) & (gnorm < hi)
        return np.ones(np.broadcast_shapes(u_val.shape, gnorm.shape), dtype=bool)


@dataclass(frozen=True)
class ExponentField:
    """beta(x): a constant, a gaussian bump A exp(-|x - c|^2 / (2 w^2)), or a table."""

    kind: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    width: float = 1.0
    center: tuple[float, ...] | None = None
    table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in EXPONENT_KINDS:
            raise ValueError(f"unknown exponent kind {self.kind!r}")
        if self.kind == "gaussian_bump" and self.width <= 0:
            raise ValueError("bump width must be positive")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table exponent needs a values array")
            t = np.asarray(self.table, dtype=float)
            d = t.ndim
            axis = np.linspace(-1.0, 1.0, t.shape[0])
            interp = RegularGridInterpolator([axis] * d, t, bounds_error=False, fill_value=None)
            object.__setattr__(self, "_interp", interp)

    def __call__(self, x) -> np.ndarray:
        """x has the coordinates in its FIRST axis, shape (d, ...)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape[1:], float(self.value))
        if self.kind == "gaussian_bump":
            c = np.zeros(x.shape[0]) if self.center is None else np.asarray(self.center, dtype=float)
            r2 = np.sum((x - c.reshape((-1,) + (1,) * (x.ndim - 1))) ** 2, axis=0)
            return self.amplitude * np.exp(-r2 / (2 * self.width**2))
        pts = np.moveaxis(x, 0, -1).reshape(-1, x.shape[0])
        return self._interp(pts).reshape(x.shape[1:])

    def bounds(self) -> tuple[float, float] | None:
        if self.kind == "constant":
            return self.value, self.value
        if self.kind == "gaussian_bump":
            return min(0.0, self.amplitude), max(0.0, self.amplitude)
        return None

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "gaussian_bump":
            cfg = {"kind": "gaussian_bump", "amplitude": self.amplitude, "width": self.width}
            if self.center is not None:
                cfg["center"] = list(self.center)
            return cfg
        return {"kind": "table", "values": np.asarray(self.table).tolist()}

    @classmethod
    def from_config(cls, cfg: dict) -> "ExponentField":
        kind = cfg.get("kind", "constant")
        if kind == "constant":
            return cls("constant", value=float(cfg.get("value", 0.0)))
        if kind == "gaussian_bump":
            center = cfg.get("center")
            return cls("gaussian_bump", amplitude=float(cfg["amplitude"]), width=float(cfg["width"]),
                       center=None if center is None else tuple(center))
        if kind == "table":
            return cls("table", table=np.asarray(cfg["values"], dtype=float))
        raise ValueError(f"unknown exponent kind {kind!r}")


def constant(value: float) -> ExponentField:
    return ExponentField("constant", value=value)


def gaussian_bump(amplitude: float, width: float, center=None) -> ExponentField:
    return ExponentField("gaussian_bump", amplitude=amplitude, width=width,
                         center=None if center is None else tuple(center))


@dataclass(frozen=True)
class ModulusSpec:
    kind: str = "zero"
    p: float = 2.0
    t_table: tuple[float, ...] = ()
    w_table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in MODULUS_KINDS:
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if self.kind == "log_power" and self.p <= 0:
            raise ValueError("log_power modulus needs p > 0")
        if self.kind == "table":
            t = np.asarray(self.t_table, dtype=float)
            w = np.asarray(self.w_table, dtype=float)
            if t.size < 2 or t.shape != w.shape or np.any(np.diff(t) <= 0) or np.any(t <= 0):
                raise ValueError("table modulus needs increasing positive t values and matching w values")
            if np.any(np.diff(w) < 0):
                raise ValueError("table modulus must be nondecreasing")

    def of_log(self, s) -> np.ndarray:
        """omega(t) evaluated at t = exp(-s), s > 0; stays finite where t underflows."""
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "sqrt":
            return np.exp(-0.5 * s)
        if self.kind == "log_power":
            return s ** (-self.p)
        logt = np.log(np.asarray(self.t_table, dtype=float))
        w = np.asarray(self.w_table, dtype=float)
        # log-linear interpolation, omega -> w[0] * t / t[0] below the table
        x = -s
        inside = np.interp(x, logt, w)
        below = w[0] * np.exp(x - logt[0])
        return np.where(x < logt[0], below, inside)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.of_log(-np.log(t))

    def analytic_limit(self) -> float | None:
        """lim_{t->0} ln(1/t) omega(t) where it is known in closed form."""
        if self.kind in ("zero", "sqrt"):
            return 0.0
        if self.kind == "log_power":
            if self.p > 1:
                return 0.0
            return 1.0 if self.p == 1 else math.inf
        return None

    def to_config(self) -> dict:
        cfg: dict = {"kind": self.kind}
        if self.kind == "log_power":
            cfg["p"] = self.p
        if self.kind == "table":
            cfg["t"] = list(self.t_table)
            cfg["omega"] = list(self.w_table)
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "ModulusSpec":
        kind = cfg.get("kind", "zero")
        if kind == "table":
            return cls("table", t_table=tuple(cfg["t"]), w_table=tuple(cfg["omega"]))
        return cls(kind, p=float(cfg.get("p", 2.0)))


@dataclass(frozen=True)
class Phase:
    rule: PhaseRule
    beta: ExponentField


@dataclass(frozen=True)
class DegeneracyLaw:
    """beta(x, u, Du) = sum_i beta_i(x) chi_{G_i(u, Du)}; index 0 is the complement."""

    phases: tuple[Phase, ...] = ()
    complement: ExponentField = field(default_factory=lambda: constant(0.0))
    beta_m: float = 0.0
    beta_M: float = 0.0
    modulus: ModulusSpec = field(default_factory=ModulusSpec)

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not (0 <= self.beta_m <= self.beta_M):
            raise ValueError(f"need 0 <= beta_m <= beta_M (got {self.beta_m}, {self.beta_M})")
        for f in self.exponent_fields():
            b = f.bounds()
            if b is not None and (b[0] < self.beta_m - 1e-12 or b[1] > self.beta_M + 1e-12):
                raise ValueError(f"exponent field {f} leaves [beta_m, beta_M] = [{self.beta_m}, {self.beta_M}]")

    @property
    def n_phases(self) -> int:
        return len(self.phases) + 1

    def exponent_fields(self) -> list[ExponentField]:
        return [self.complement] + [ph.beta for ph in self.phases]

    @property
    def a3_warning(self) -> bool:
        """True when beta_M >= 1, outside the stricter boundedness assumption."""
        return self.beta_M >= 1.0

    def to_config(self) -> dict:
        return {
            "phases": [{"phase": {"kind": ph.rule.kind, "tolerance": ph.rule.tolerance,
                                  **({"band": list(ph.rule.band)} if ph.rule.kind == "gradient_band" else {})},
                        "beta": ph.beta.to_config()} for ph in self.phases],
            "complement": self.complement.to_config(),
            "beta_m": self.beta_m,
            "beta_M": self.beta_M,
            "modulus": self.modulus.to_config(),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "DegeneracyLaw":
        phases = []
        for entry in cfg.get("phases", []):
            rule_cfg = entry["phase"]
            if rule_cfg["kind"] == "complement":
                raise ValueError("the complement phase is implicit; give its exponent under 'complement'")
            band = tuple(rule_cfg.get("band", (0.0, math.inf)))
            phases.append(Phase(PhaseRule(rule_cfg["kind"], float(rule_cfg.get("tolerance", 0.0)), band),
                                ExponentField.from_config(entry["beta"])))
        complement = ExponentField.from_config(cfg.get("complement", {"kind": "constant", "value": 0.0}))
        law = cls(tuple(phases), complement, float(cfg.get("beta_m", 0.0)), float(cfg.get("beta_M", 0.0)),
                  ModulusSpec.from_config(cfg.get("modulus", {"kind": "zero"})))
        if law.a3_warning:
            warnings.warn(f"beta_M = {law.beta_M} >= 1: outside the stricter exponent bound", stacklevel=2)
        return law


def single_phase_law(beta: ExponentField, beta_m: float | None = None, beta_M: float | None = None,
                     modulus: ModulusSpec | None = None) -> DegeneracyLaw:
    b = beta.bounds() or (0.0, 0.0)
    return DegeneracyLaw((), beta, b[0] if beta_m is None else beta_m, b[1] if beta_M is None else beta_M,
                         modulus or ModulusSpec())


def constant_law(beta: float) -> DegeneracyLaw:
    return single_phase_law(constant(beta))


def sign_law(beta_pos: float, beta_neg: float, beta_zero: float = 0.0, tolerance: float = 0.0) -> DegeneracyLaw:
    phases = (Phase(PhaseRule("positive_set", tolerance), constant(beta_pos)),
              Phase(PhaseRule("negative_set", tolerance), constant(beta_neg)))
    vals = (beta_pos, beta_neg, beta_zero)
    return DegeneracyLaw(phases, constant(beta_zero), min(vals), max(vals))


def classify_phase(law: DegeneracyLaw, u_val, grad) -> np.ndarray | int:
    """Index of the phase containing (u, Du); grad has components in its last axis."""
    u_val = np.asarray(u_val, dtype=float)
    grad = np.asarray(grad, dtype=float)
    shape = np.broadcast_shapes(u_val.shape, grad.shape[:-1])
    idx = np.zeros(shape, dtype=int)
    free = np.ones(shape, dtype=bool)
    for i, ph in enumerate(law.phases, start=1):
        hit = ph.rule.contains(u_val, grad) & free
        idx[hit] = i
        free &= ~hit
    return int(idx) if idx.ndim == 0 else idx


def exponent_stack(law: DegeneracyLaw, x) -> np.ndarray:
    """All beta_i(x), shape (N + 1, ...); x has coordinates in its first axis."""
    return np.stack([f(x) for f in law.exponent_fields()])


def beta_at(law: DegeneracyLaw, x, u_val, grad, check: bool = True) -> np.ndarray | float:
    """beta of the phase containing (u, Du) at x; x has coordinates in its first axis."""
    x = np.asarray(x, dtype=float)
    idx = np.asarray(classify_phase(law, u_val, grad))
    stack = exponent_stack(law, x)
    out = np.take_along_axis(stack, idx[None, ...], axis=0)[0] if stack.ndim > 1 else stack[idx]
    if check and (np.any(out < law.beta_m - 1e-12) or np.any(out > law.beta_M + 1e-12)):
        raise ValueError("exponent value outside [beta_m, beta_M]: malformed law")
    return float(out) if np.ndim(out) == 0 else out


# modulus analysis


@dataclass
class ModulusReport:
    passed: bool
    tail: list[float]
    t_min: float
    final_value: float
    analytic_limit: float | None


def modulus_condition_holds(omega: ModulusSpec, t_min: float = 1e-300, threshold: float = 1e-2,
                            tail_length: int = 20) -> ModulusReport:
    """ln(1/t) omega(t) on t = 2^-j down to t_min: pass iff the tail is
    nonincreasing and ends below the threshold."""
    if not (0 < t_min < RHO_CAP):
        raise ValueError("need 0 < t_min < 1/e")
    jmax = int(math.floor(math.log2(1.0 / t_min)))
    s = np.arange(2, jmax + 1) * math.log(2.0)
    prod = s * omega.of_log(s)
    tail = prod[-tail_length:]
    decreasing = bool(np.all(np.diff(tail) <= 1e-15 * np.maximum(1.0, np.abs(tail[:-1]))))
    final = float(prod[-1])
    return ModulusReport(decreasing and final < threshold, tail.tolist(), float(math.exp(-s[-1])),
                         final, omega.analytic_limit())


def modulus_sup(omega: ModulusSpec, rho: float, k_max: int = 10_000) -> float:
    """sup_{k >= 1} k ln(1/rho) omega(rho^k), with a closed-form tail beyond k_max."""
    L = -math.log(rho)
    k = np.arange(1, k_max + 1, dtype=float)
    vals = k * L * omega.of_log(k * L)
    best = float(vals.max())
    if omega.kind == "log_power" and omega.p < 1:
        return math.inf
    # for sqrt and log_power (p >= 1) k L omega(rho^k) is eventually nonincreasing,
    # so the value at k_max bounds the tail
    return max(best, float(vals[-1]))


def delta1_threshold(omega: ModulusSpec, eps: float, rel_tol: float = 1e-3, k_max: int = 10_000) -> float:
    """Largest rho < 1/e with k ln(1/rho) omega(rho^k) <= eps for every k >= 1.

    Bisection in log(rho); the returned value is on the admissible side.
    Raises NoAdmissibleRadius if even rho = 1e-300 fails.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if modulus_sup(omega, RHO_CAP, k_max) <= eps:
        return RHO_CAP
    if modulus_sup(omega, RHO_FLOOR, k_max) > eps:
        raise NoAdmissibleRadius(f"no admissible rho above {RHO_FLOOR:g} for eps={eps:g}")
    lo, hi = math.log(RHO_FLOOR), math.log(RHO_CAP)
    while hi - lo > math.log1p(rel_tol) * 0.5:
        mid = 0.5 * (lo + hi)
        if modulus_sup(omega, math.exp(mid), k_max) <= eps:
            lo = mid
        else:
            hi = mid
    return math.exp(lo)
