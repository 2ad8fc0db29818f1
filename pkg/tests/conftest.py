import numpy as np
import pytest

from peplift.ledger import basis_dim, ix_dist, ix_g, ix_s, ix_s_star
from peplift.methods import ProxProblem, RunTrace


def basis_realization(trace: RunTrace, problem: ProxProblem):
    """Concrete (normalized) symbol values from a composite run.

    Returns (vectors, f_vals, h_vals) on the global basis layout, everything
    scaled to the unit-smoothness convention the identities are stated in.
    The optimum subgradient is taken as minus the smooth gradient there.
    """
    if problem.x_star is None:
        raise ValueError("needs a problem with a known minimizer")
    n = trace.n
    L = problem.smoothness
    vectors = np.zeros((basis_dim(n), problem.dim))
    vectors[ix_dist(n)] = trace.xs[0] - problem.x_star
    for i in range(n + 1):
        vectors[ix_g(n, i)] = trace.grads[i] / L
    for i in range(1, n + 1):
        vectors[ix_s(n, i)] = trace.subgrads[i - 1] / L
    vectors[ix_s_star(n)] = -problem.f_grad(problem.x_star) / L

    points = list(trace.xs) + [problem.x_star]
    f_vals = np.array([problem.f_value(x) for x in points]) / L
    h_vals = np.array([problem.h_value(x) for x in points]) / L
    return vectors, f_vals, h_vals


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240607)
