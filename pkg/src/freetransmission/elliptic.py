"""Uniformly (lambda, Lambda)-elliptic operators on symmetric matrices.

Sign convention: F is nonincreasing in the matrix order, F(M + N) <= F(M) for
N >= 0, so the Laplacian model is F(M) = -tr(M).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

KINDS = ("negative_trace", "pucci_minus", "pucci_plus", "bellman_pair")


def _eigvalsh(M: np.ndarray) -> np.ndarray:
    d = M.shape[-1]
    if d == 1:
        return M[..., 0, :]
    if d == 2:
        a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 1, 1]
        mean = 0.5 * (a + c)
        rad = np.hypot(0.5 * (a - c), b)
        return np.stack([mean - rad, mean + rad], axis=-1)
    return np.linalg.eigvalsh(M)


def pucci_minus(M: np.ndarray, lam: float, Lam: float) -> np.ndarray:
    e = _eigvalsh(M)
    return -(Lam * np.sum(np.clip(e, 0, None), axis=-1) + lam * np.sum(np.clip(e, None, 0), axis=-1))


def pucci_plus(M: np.ndarray, lam: float, Lam: float) -> np.ndarray:
    e = _eigvalsh(M)
    return -(lam * np.sum(np.clip(e, 0, None), axis=-1) + Lam * np.sum(np.clip(e, None, 0), axis=-1))


def _default_pair(d: int, lam: float, Lam: float) -> tuple[np.ndarray, np.ndarray]:
    diag = np.linspace(lam, Lam, d)
    if d == 1:
        return np.array([[lam]]), np.array([[Lam]])
    return np.diag(diag), np.diag(diag[::-1])


@dataclass(frozen=True)
class EllipticOperator:
    """An operator F together with its ellipticity constants and exponent alpha0.

    ``reflected`` turns F into M -> -F(-M) (this swaps the Pucci operators and
    turns a Bellman min into a max). ``scale`` s gives M -> F(s M) / s, the
    conjugation produced by blowing a solution up around a point.
    """

    kind: str = "negative_trace"
    lam: float = 1.0
    Lam: float = 1.0
    alpha0: float | None = None
    d: int = 2
    coefficients: tuple | None = None
    reflected: bool = False
    scale: float = 1.0
    _pair: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}; expected one of {KINDS}")
        if not (0 < self.lam <= self.Lam):
            raise ValueError(f"need 0 < lambda <= Lambda (got {self.lam}, {self.Lam})")
        if self.kind == "negative_trace" and not (self.lam <= 1.0 <= self.Lam):
            raise ValueError("negative_trace needs lambda <= 1 <= Lambda")
        if self.alpha0 is None:
            object.__setattr__(self, "alpha0", 1.0)
        if not (0 < self.alpha0 <= 1):
            raise ValueError(f"alpha0 must lie in (0, 1] (got {self.alpha0})")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        pair = None
        if self.kind == "bellman_pair":
            if self.coefficients is None:
                pair = _default_pair(self.d, self.lam, self.Lam)
            else:
                pair = tuple(np.asarray(A, dtype=float) for A in self.coefficients)
            for A in pair:
                if A.shape != (self.d, self.d) or not np.allclose(A, A.T):
                    raise ValueError("bellman_pair coefficients must be symmetric d x d matrices")
                ev = np.linalg.eigvalsh(A)
                if ev.min() < self.lam - 1e-12 or ev.max() > self.Lam + 1e-12:
                    raise ValueError("bellman_pair coefficient spectrum must lie in [lambda, Lambda]")
        object.__setattr__(self, "_pair", pair)

    @property
    def homogeneous(self) -> bool:
        # every implemented kind is positively 1-homogeneous
        return True

    def __call__(self, M) -> np.ndarray:
        return evaluate(self, M)

    def dual(self) -> "EllipticOperator":
        return replace(self, reflected=not self.reflected)

    def conjugated(self, s: float) -> "EllipticOperator":
        """M -> F(s M)/s composed with the current scale."""
        if self.homogeneous:
            return self
        return replace(self, scale=self.scale * s)

    def to_config(self) -> dict:
        return {"kind": self.kind, "lambda": self.lam, "Lambda": self.Lam, "alpha0": self.alpha0}

    @classmethod
    def from_config(cls, cfg: dict, d: int = 2) -> "EllipticOperator":
        kind = cfg.get("kind", "negative_trace")
        lam = float(cfg.get("lambda", 1.0))
        Lam = float(cfg.get("Lambda", 1.0 if kind == "negative_trace" else 2.0))
        coeffs = cfg.get("coefficients")
        if coeffs is not None:
            coeffs = tuple(np.asarray(c, dtype=float) for c in coeffs)
        return cls(kind=kind, lam=lam, Lam=Lam, alpha0=cfg.get("alpha0"), d=d, coefficients=coeffs)


def _raw(F: EllipticOperator, M: np.ndarray) -> np.ndarray:
    if F.kind == "negative_trace":
        return -np.trace(M, axis1=-2, axis2=-1)
    if F.kind == "pucci_minus":
        return pucci_minus(M, F.lam, F.Lam)
    if F.kind == "pucci_plus":
        return pucci_plus(M, F.lam, F.Lam)
    A1, A2 = F._pair
    v1 = -np.einsum("ij,...ji->...", A1, M)
    v2 = -np.einsum("ij,...ji->...", A2, M)
    return np.minimum(v1, v2)


def evaluate(F: EllipticOperator, M, check: bool = True) -> np.ndarray:
    """F(M) for a single matrix or a stack of shape (..., d, d)."""
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise ValueError("expected square matrices in the last two axes")
    if check and not np.allclose(M, np.swapaxes(M, -1, -2), rtol=1e-10, atol=1e-12, equal_nan=True):
        raise ValueError("matrix argument must be symmetric")
    s = F.scale
    if F.reflected:
        out = -_raw(F, -s * M) / s
    else:
        out = _raw(F, s * M) / s
    return out if out.ndim else float(out)


@dataclass
class EllipticityReport:
    passed: bool
    trials: int
    spectral_ratio_range: tuple[float, float]
    trace_ratio_range: tuple[float, float]
    upper_constant: float
    violation: dict | None = None


def random_symmetric(rng: np.random.Generator, d: int, size: int, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(scale=scale, size=(size, d, d))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def random_psd(rng: np.random.Generator, d: int, size: int, scale: float = 1.0) -> np.ndarray:
    """Q^T D Q with Q orthogonal and D >= 0."""
    Q, _ = np.linalg.qr(rng.normal(size=(size, d, d)))
    D = rng.uniform(0, scale, size=(size, d))
    return np.einsum("nki,nk,nkj->nij", Q, D, Q)


def check_ellipticity(F: EllipticOperator, trials: int = 1000, seed: int = 0,
                      N: np.ndarray | None = None) -> EllipticityReport:
    """Sample lambda |N| <= F(M) - F(M + N) <= d Lambda |N| with |N| the spectral norm.

    Trace-norm ratios are recorded too; every implemented operator keeps those
    inside [lambda, Lambda].
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    d = F.d
    M = random_symmetric(rng, d, trials, scale=3.0)
    if N is None:
        N = random_psd(rng, d, trials, scale=2.0)
    else:
        N = np.broadcast_to(np.asarray(N, dtype=float), (trials, d, d))
    diff = evaluate(F, M) - evaluate(F, M + N)
    ev = np.linalg.eigvalsh(N)
    spec = ev[:, -1]
    tr = ev.sum(axis=-1)
    upper = d * F.Lam
    tol = 1e-10 * (1 + np.abs(M).max(axis=(-2, -1)))
    ok = (diff >= F.lam * spec - tol) & (diff <= upper * spec + tol)
    nz = spec > 1e-14
    if nz.any():
        sr = diff[nz] / spec[nz]
        trr = diff[nz] / tr[nz]
        spec_range = (float(sr.min()), float(sr.max()))
        trace_range = (float(trr.min()), float(trr.max()))
    else:
        spec_range = trace_range = (0.0, 0.0)
    violation = None
    if not ok.all():
        i = int(np.argmin(ok))
        violation = {"M": M[i].tolist(), "N": N[i].tolist(), "difference": float(diff[i])}
    return EllipticityReport(bool(ok.all()), trials, spec_range, trace_range, upper, violation)
