"""Named algorithm catalog: builders, default slack constants and the
closed-form rate constants each certificate family is known to achieve.

The certify/lift machinery is algorithm-agnostic; everything specific to the
four families (which metric they certify, which xi makes the slack matrix
checkably feasible, what the resulting constant simplifies to) lives here.
"""

from __future__ import annotations

import math

from .certificates import (
    FuncCertificate,
    GradCertificate,
    gsw_grad_certificate,
    ogm_func_certificate,
    ogmg_grad_certificate,
    silver_func_certificate,
)
from .schedules import (
    SILVER_RATIO,
    ScheduleSpec,
    StepsizeMatrix,
    gsw_taus,
    theta_sequence,
)

ALGORITHMS = ("silver", "gsw", "ogm", "ogmg")

# Which performance metric each family's certificate targets.
METRIC = {"silver": "func", "gsw": "grad", "ogm": "func", "ogmg": "grad"}

# Families sized by doubling order k (length 2**k - 1) vs. by step count n.
SIZED_BY_K = ("silver", "gsw")

ASYMPTOTIC = {
    "silver": "O(1/n^{log2(1+sqrt(2))})",
    "gsw": "O(1/n^{log2(1+sqrt(2))})",
    "ogm": "O(1/n^2)",
    "ogmg": "O(1/n^2)",
}


def check_pair(algo: str, metric: str) -> None:
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}; valid: {ALGORITHMS}")
    if metric not in ("func", "grad"):
        raise ValueError(f"unknown metric {metric!r}; valid: ('func', 'grad')")
    if METRIC[algo] != metric:
        raise ValueError(f"algorithm {algo!r} certifies the {METRIC[algo]!r} metric, not {metric!r}")


def schedule_for(algo: str, size: int) -> StepsizeMatrix:
    """Stepsize matrix for the family at the given size (k or n)."""
    if algo == "silver":
        return ScheduleSpec.silver(size).build()
    if algo == "gsw":
        return ScheduleSpec.gsw(size).build()
    if algo == "ogm":
        return ScheduleSpec.ogm(size).build()
    if algo == "ogmg":
        return ScheduleSpec.ogmg(size).build()
    raise ValueError(f"unknown algorithm {algo!r}")


def certificate_for(algo: str, size: int) -> FuncCertificate | GradCertificate:
    if algo == "silver":
        return silver_func_certificate(size)
    if algo == "gsw":
        return gsw_grad_certificate(size)
    if algo == "ogm":
        return ogm_func_certificate(size)
    if algo == "ogmg":
        return ogmg_grad_certificate(size)
    raise ValueError(f"unknown algorithm {algo!r}")


def default_xi(algo: str, size: int) -> float:
    """The slack constant under which feasibility is checkable by structure.

    silver: 1/sqrt(2).  ogm: (sqrt(5)-1)/4 for n >= 2, 1/3 for n = 1.
    gsw: 1 - tau_k / (sqrt(2) (tau_k - 1)), which equals the generic corner-
    zeroing choice for k >= 2 and keeps the certified constant at the closed
    form 2*sqrt(2)/tau_k for every k.  ogmg: the generic corner-zeroing
    choice 1 - (lam[n-1,n]+lam[n,n-1])/r.
    """
    if algo == "silver":
        return 1.0 / math.sqrt(2.0)
    if algo == "ogm":
        return (math.sqrt(5.0) - 1.0) / 4.0 if size >= 2 else 1.0 / 3.0
    if algo == "gsw":
        tau = float(gsw_taus(size)[-1])
        return 1.0 - tau / (math.sqrt(2.0) * (tau - 1.0))
    if algo == "ogmg":
        cert = ogmg_grad_certificate(size)
        n = cert.n
        return 1.0 - (cert.lam[n - 1, n] + cert.lam[n, n - 1]) / cert.r
    raise ValueError(f"unknown algorithm {algo!r}")


def named_rate(algo: str, size: int) -> float:
    """Closed-form constant of the composite rate for the family."""
    rho = SILVER_RATIO
    if algo == "silver":
        return rho / (math.sqrt(2.0) * (4.0 * rho**size - 2.0))
    if algo == "gsw":
        return 2.0 * math.sqrt(2.0) / float(gsw_taus(size)[-1])
    if algo == "ogm":
        tn2 = theta_sequence(size).values[-1] ** 2
        return (3.0 + math.sqrt(5.0)) / (8.0 * tn2) if size >= 2 else 1.0 / 6.0
    if algo == "ogmg":
        tn2 = theta_sequence(size).values[-1] ** 2
        return 2.0 * (math.sqrt(5.0) - 1.0) / tn2 if size >= 2 else 2.0 / 3.0
    raise ValueError(f"unknown algorithm {algo!r}")
