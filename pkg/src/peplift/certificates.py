"""Dual multiplier certificates for unconstrained rate proofs, plus their
exact verification by coefficient matching.

A :class:`FuncCertificate` packages the nonnegative multipliers ``lam`` (with
the optimum row stored last), the square-term coefficients ``gamma`` and the
total weight ``r`` appearing in the objective-gap identity

    sum lam[i,j] Q_ij + ||x0 - xstar - sum gamma_i g_i||^2 / 2
        = r (f_star - f_n) + ||x0 - xstar||^2 / 2.

A :class:`GradCertificate` packages ``lam`` and ``r`` for the gradient-norm
identity  sum lam[i,j] Q_ij = -(r/2) ||g_n||^2 + f_0 - f_n.  Both are checked
instance-free: the two sides are expanded over the symbol basis and compared
coefficient by coefficient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import config
from .ledger import STAR, CocoExpander, GramLedger, ix_dist, ix_g
from .schedules import (
    SILVER_RATIO,
    StepsizeMatrix,
    cumulative,
    gsw_taus,
    silver_schedule,
    theta_sequence,
)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FuncCertificate:
    """Multipliers certifying an objective-gap rate.

    lam has shape (n+2, n+1): rows are iterate indices 0..n plus the optimum
    row last, columns are 0..n.  gamma has length n+1 and r > 0.
    """

    lam: np.ndarray
    gamma: np.ndarray
    r: float

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        gamma = np.array(self.gamma, dtype=float)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1] + 1:
            raise ValueError(f"lam must be (n+2, n+1), got {lam.shape}")
        if gamma.shape != (lam.shape[1],):
            raise ValueError(f"gamma length {gamma.shape} does not match lam {lam.shape}")
        object.__setattr__(self, "lam", _frozen(lam))
        object.__setattr__(self, "gamma", _frozen(gamma))

    @property
    def n(self) -> int:
        return self.lam.shape[1] - 1

    @property
    def lam_star(self) -> np.ndarray:
        """The optimum row of the multipliers."""
        return self.lam[-1]

    def invariant_residuals(self) -> dict[str, float]:
        """Max violations of nonnegativity, the row/column-sum identities and
        the coupling between the optimum row and gamma."""
        n = self.n
        lam, r = self.lam, self.r
        row = lam[: n + 1].sum(axis=1)  # over columns, iterate rows only
        col = lam.sum(axis=0)  # over all rows incl. optimum
        interior = np.max(np.abs(row[:n] - col[:n])) if n > 0 else 0.0
        return {
            "nonneg": max(0.0, float(-lam.min())),
            "interior_rows": float(interior),
            "last_row": abs(float(row[n] - col[n]) + r),
            "star_total": abs(float(lam[-1].sum()) - r),
            "star_equals_gamma": float(np.max(np.abs(lam[-1] - self.gamma))),
        }


@dataclass(frozen=True)
class GradCertificate:
    """Multipliers certifying a gradient-norm rate; lam is (n+1, n+1)."""

    lam: np.ndarray
    r: float

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise ValueError(f"lam must be square, got {lam.shape}")
        object.__setattr__(self, "lam", _frozen(lam))

    @property
    def n(self) -> int:
        return self.lam.shape[1] - 1

    def invariant_residuals(self) -> dict[str, float]:
        n = self.n
        lam, r = self.lam, self.r
        row = lam.sum(axis=1)
        col = lam.sum(axis=0)
        interior = np.max(np.abs(row[1:n] - col[1:n])) if n > 1 else 0.0
        return {
            "nonneg": max(0.0, float(-lam.min())),
            "first_row": abs(float(row[0] - col[0]) - 1.0),
            "interior_rows": float(interior),
            "last_row": abs(float(row[n] - col[n]) + 1.0),
            "last_cross_sum": abs(float(row[n] + col[n]) - r),
        }


# ---------------------------------------------------------------------------
# Aggregated multiplier matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultiplierAggregates:
    """The symmetrized (hat) and shifted (tilde) multiplier matrices.

    hat[i, j] = lam[i, j] + lam[j, i] off the diagonal and minus the full
    cross sum on it; tilde collects rows 1..n over columns 0..n-1 with the
    diagonal positions replaced by minus the column sums.
    """

    hat: np.ndarray
    tilde: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "hat", _frozen(self.hat))
        object.__setattr__(self, "tilde", _frozen(self.tilde))


def aggregates(cert: FuncCertificate | GradCertificate) -> MultiplierAggregates:
    lam = cert.lam
    n = cert.n
    col = lam.sum(axis=0)
    row = lam[: n + 1].sum(axis=1)
    hat = lam[:n, :n] + lam[:n, :n].T
    hat[np.diag_indices(n)] = -(col[:n] + row[:n])
    tilde = lam[1 : n + 1, :n].copy()
    for i in range(1, n):
        tilde[i - 1, i] = -col[i]
    return MultiplierAggregates(hat=hat, tilde=tilde)


def aggregate_identity_residual(H: StepsizeMatrix, cert: FuncCertificate | GradCertificate) -> float:
    """Residual of the quadratic-form consequence of a valid certificate:
    hat + Hc tilde + (Hc tilde)^T equals -gamma_head gamma_head^T for an
    objective certificate and zero for a gradient one (Hc cumulative)."""
    agg = aggregates(cert)
    hc = cumulative(H).entries
    m = agg.hat + hc @ agg.tilde + (hc @ agg.tilde).T
    if isinstance(cert, FuncCertificate):
        m = m + np.outer(cert.gamma[:-1], cert.gamma[:-1])
    return float(np.max(np.abs(m)))


# ---------------------------------------------------------------------------
# Certificate constructors
# ---------------------------------------------------------------------------


def silver_lambda_bar(k: int) -> np.ndarray:
    """Iterate-row multipliers for silver-stepsize GD, by recursive gluing.

    Each doubling pastes the previous block, its copy scaled by rho**2, a
    two-entry sparse correction, and a low-rank correction along the rows of
    the two glue indices.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    rho = SILVER_RATIO
    lam = np.zeros((2, 2))
    lam[0, 1] = rho
    lam[1, 0] = 1.0
    for kk in range(1, k):
        n = 2**kk - 1
        m = 2 * n + 1
        new = np.zeros((m + 1, m + 1))
        new[: n + 1, : n + 1] = lam
        new[n + 1 :, n + 1 :] = rho**2 * lam
        new[n, m] += rho
        new[m, n] += rho**kk
        pi = silver_schedule(kk)
        new[n, n + 1 : m] += rho * pi
        new[m, n + 1 : m] += rho * pi
        lam = new
    return lam


def silver_func_certificate(k: int) -> FuncCertificate:
    """Objective-gap certificate for GD with the silver stepsizes of order k."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    rho = SILVER_RATIO
    bar = silver_lambda_bar(k)
    star = np.concatenate([silver_schedule(k), [rho**k]])
    lam = np.vstack([bar, star])
    return FuncCertificate(lam=lam, gamma=star, r=2.0 * rho**k - 1.0)


def ogm_func_certificate(n: int) -> FuncCertificate:
    """Objective-gap certificate for the optimized gradient method."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    t = theta_sequence(n).values
    lam = np.zeros((n + 2, n + 1))
    for i in range(n):
        lam[i, i + 1] = 2.0 * t[i] ** 2
    lam[n + 1, :n] = 2.0 * t[:n]
    lam[n + 1, n] = t[n]
    gamma = np.concatenate([2.0 * t[:n], [t[n]]])
    return FuncCertificate(lam=lam, gamma=gamma, r=float(t[n] ** 2))


def gsw_grad_certificate(k: int) -> GradCertificate:
    """Gradient-norm certificate for GD with the bridge-augmented stepsizes.

    Reuses the silver iterate-row blocks, rescaled by tau_{k+1}/rho**(2k) at
    each doubling, with matching sparse and low-rank corrections.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    rho = SILVER_RATIO
    taus = gsw_taus(k)
    lam = np.zeros((2, 2))
    lam[0, 1] = 2.0
    lam[1, 0] = 1.0
    for kk in range(1, k):
        n = 2**kk - 1
        m = 2 * n + 1
        t = taus[kk]  # tau_{kk+1}
        scale = t / rho ** (2 * kk)
        new = np.zeros((m + 1, m + 1))
        new[: n + 1, : n + 1] = lam
        new[n + 1 :, n + 1 :] = scale * silver_lambda_bar(kk)
        new[n, m] += 0.5 * scale
        new[m, n] += t / (2.0 * rho**kk) - 1.0
        pi = silver_schedule(kk)
        new[n, n + 1 : m] += 0.5 * scale * pi
        new[m, n + 1 : m] += 0.5 * scale * pi
        lam = new
    return GradCertificate(lam=lam, r=float(taus[-1] - 1.0))


def ogmg_grad_certificate(n: int) -> GradCertificate:
    """Gradient-norm certificate for the gradient-norm optimized method."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    t = theta_sequence(n).values
    tn2 = t[n] ** 2
    lam = np.zeros((n + 1, n + 1))
    for i in range(n):
        lam[i, i + 1] = tn2 / (2.0 * t[n - i - 1] ** 2)
    for j in range(1, n):
        lam[n, j] = tn2 * (1.0 / (2.0 * t[n - j - 1] ** 2) - 1.0 / (2.0 * t[n - j] ** 2))
    lam[n, 0] = tn2 * (1.0 / (2.0 * t[n - 1] ** 2) - 1.0 / tn2)
    return GradCertificate(lam=lam, r=float(tn2 - 1.0))


# ---------------------------------------------------------------------------
# Identity verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    """Max-abs coefficient mismatch between the two sides of an identity."""

    quad_residual: float
    lin_f_residual: float
    lin_h_residual: float
    scale: float
    tol: float

    @property
    def max_residual(self) -> float:
        return max(self.quad_residual, self.lin_f_residual, self.lin_h_residual)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol * self.scale

    def to_dict(self) -> dict:
        return {
            "residuals": {
                "quad": self.quad_residual,
                "linF": self.lin_f_residual,
                "linH": self.lin_h_residual,
            },
            "scale": self.scale,
            "tol": self.tol,
            "pass": self.passed,
        }


def _report(lhs: GramLedger, rhs: GramLedger, tol: float | None) -> IdentityReport:
    quad, lf, lh = lhs.residual_vs(rhs)
    scale = max(lhs.max_abs(), rhs.max_abs(), 1.0)
    return IdentityReport(
        quad_residual=quad,
        lin_f_residual=lf,
        lin_h_residual=lh,
        scale=scale,
        tol=config.rel_tol() if tol is None else tol,
    )


def _iter_nonzero(lam: np.ndarray):
    rows, cols = np.nonzero(lam)
    for i, j in zip(rows.tolist(), cols.tolist()):
        yield i, j, lam[i, j]


def func_identity_ledgers(H: StepsizeMatrix, cert: FuncCertificate) -> tuple[GramLedger, GramLedger]:
    """Both sides of the objective-gap identity as ledgers."""
    n = cert.n
    if H.n != n:
        raise ValueError(f"stepsize matrix is {H.n}-step but certificate has n={n}")
    hcum = cumulative(H).entries
    expand = CocoExpander(hcum, composite=False, coupled_star=False)
    lhs = GramLedger(n)
    for i, j, w in _iter_nonzero(cert.lam):
        if i == j:
            continue
        expand.add_smooth_coco(lhs, w, STAR if i == n + 1 else i, j)
    square = np.zeros(lhs.quad.shape[0])
    square[ix_dist(n)] = 1.0
    for i in range(n + 1):
        square[ix_g(n, i)] -= cert.gamma[i]
    lhs.add_square(square, 0.5)

    rhs = GramLedger(n)
    rhs.add_f(STAR, cert.r)
    rhs.add_f(n, -cert.r)
    rhs.quad[ix_dist(n), ix_dist(n)] += 0.5
    return lhs, rhs


def verify_func_identity(H: StepsizeMatrix, cert: FuncCertificate, tol: float | None = None) -> IdentityReport:
    """Check the objective-gap identity for the plain method with H.

    Failure is reported, not raised: the report carries the residuals split
    by coefficient group and the pass flag at the requested tolerance.
    """
    lhs, rhs = func_identity_ledgers(H, cert)
    return _report(lhs, rhs, tol)


def grad_identity_ledgers(H: StepsizeMatrix, cert: GradCertificate) -> tuple[GramLedger, GramLedger]:
    """Both sides of the gradient-norm identity as ledgers."""
    n = cert.n
    if H.n != n:
        raise ValueError(f"stepsize matrix is {H.n}-step but certificate has n={n}")
    hcum = cumulative(H).entries
    expand = CocoExpander(hcum, composite=False, coupled_star=False)
    lhs = GramLedger(n)
    for i, j, w in _iter_nonzero(cert.lam):
        if i == j:
            continue
        expand.add_smooth_coco(lhs, w, i, j)

    rhs = GramLedger(n)
    rhs.add_f(0, 1.0)
    rhs.add_f(n, -1.0)
    rhs.quad[ix_g(n, n), ix_g(n, n)] -= 0.5 * cert.r
    return lhs, rhs


def verify_grad_identity(H: StepsizeMatrix, cert: GradCertificate, tol: float | None = None) -> IdentityReport:
    """Check the gradient-norm identity for the plain method with H."""
    lhs, rhs = grad_identity_ledgers(H, cert)
    return _report(lhs, rhs, tol)


# ---------------------------------------------------------------------------
# JSON snapshots
# ---------------------------------------------------------------------------


def certificate_to_dict(cert: FuncCertificate | GradCertificate) -> dict:
    if isinstance(cert, FuncCertificate):
        return {
            "metric": "func",
            "n": cert.n,
            "lam": cert.lam.tolist(),
            "gamma": cert.gamma.tolist(),
            "r": cert.r,
        }
    return {"metric": "grad", "n": cert.n, "lam": cert.lam.tolist(), "r": cert.r}


def certificate_from_dict(doc: dict) -> FuncCertificate | GradCertificate:
    if doc["metric"] == "func":
        return FuncCertificate(lam=np.asarray(doc["lam"]), gamma=np.asarray(doc["gamma"]), r=float(doc["r"]))
    if doc["metric"] == "grad":
        return GradCertificate(lam=np.asarray(doc["lam"]), r=float(doc["r"]))
    raise ValueError(f"unknown certificate metric {doc.get('metric')!r}")


def save_certificate(cert, path) -> None:
    from .reports import dumps17

    with open(path, "w") as fh:
        fh.write(dumps17(certificate_to_dict(cert)))


def load_certificate(path) -> FuncCertificate | GradCertificate:
    with open(path) as fh:
        return certificate_from_dict(json.load(fh))
