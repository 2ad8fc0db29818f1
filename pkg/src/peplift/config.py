"""Global numeric tolerances shared by the verifiers."""

import os

# Relative tolerance for identity residuals (coefficient matching).
DEFAULT_REL_TOL = 1e-9

# Entrywise nonnegativity slack for multiplier checks, relative to scale.
MU_TOL = 1e-10

# Eigenvalue slack for positive-semidefiniteness, relative to spectral norm.
PSD_TOL = 1e-9

# Laplacian / diagonal-dominance slack, relative to the largest entry.
LAPLACIAN_TOL = 1e-10


def rel_tol() -> float:
    """Relative residual tolerance; the PEPLIFT_TOL env var overrides it."""
    raw = os.environ.get("PEPLIFT_TOL")
    if raw is None:
        return DEFAULT_REL_TOL
    value = float(raw)
    if value <= 0.0:
        raise ValueError(f"PEPLIFT_TOL must be positive, got {raw!r}")
    return value
