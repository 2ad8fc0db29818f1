"""Exact coefficient ledgers for the algebraic identities behind rate proofs.

Every identity we verify is linear in the function values {f_i}, {h_i} and
quadratic in the symbols

    [x0 - xstar, g_0..g_n, s_1..s_n, s_star]

where g_i is the smooth gradient at iterate i and s_i a subgradient of the
nonsmooth part.  A :class:`GramLedger` tracks the coefficient matrix of the
quadratic form plus the two linear forms, all as plain floats, so checking an
identity reduces to exact linear algebra: build both sides, subtract, and
look at the largest coefficient left over.

The basis ordering above is fixed globally.  Unconstrained identities simply
never touch the subgradient coordinates; the substitution at the optimum
(the optimal gradient is zero, or minus s_star in the composite setting) is
applied during construction, so it never appears as a basis element.
"""

from __future__ import annotations

import numpy as np

STAR = "*"

Index = int | str  # an iterate index 0..n or STAR


def basis_dim(n: int) -> int:
    return 2 * n + 3


def ix_dist(n: int) -> int:
    """Position of x0 - xstar."""
    return 0


def ix_g(n: int, i: int) -> int:
    """Position of gradient g_i, 0 <= i <= n."""
    return 1 + i


def ix_s(n: int, i: int) -> int:
    """Position of subgradient s_i, 1 <= i <= n."""
    return n + 2 + (i - 1)


def ix_s_star(n: int) -> int:
    return 2 * n + 2


def ix_val(n: int, i: Index) -> int:
    """Position of f_i (or h_i) in a linear form; STAR maps to the last slot."""
    return n + 1 if i is STAR or i == STAR else int(i)


class GramLedger:
    """Quadratic + linear form with exact add/scale arithmetic.

    The quadratic form is z^T quad z over the symbol basis (quad symmetric);
    lin_f and lin_h hold the coefficients of f_0..f_n, f_star and
    h_0..h_n, h_star.
    """

    __slots__ = ("n", "quad", "lin_f", "lin_h")

    def __init__(self, n: int):
        self.n = n
        d = basis_dim(n)
        self.quad = np.zeros((d, d))
        self.lin_f = np.zeros(n + 2)
        self.lin_h = np.zeros(n + 2)

    def copy(self) -> "GramLedger":
        out = GramLedger(self.n)
        out.quad = self.quad.copy()
        out.lin_f = self.lin_f.copy()
        out.lin_h = self.lin_h.copy()
        return out

    def add(self, other: "GramLedger", weight: float = 1.0) -> "GramLedger":
        self.quad += weight * other.quad
        self.lin_f += weight * other.lin_f
        self.lin_h += weight * other.lin_h
        return self

    def add_f(self, i: Index, weight: float) -> None:
        self.lin_f[ix_val(self.n, i)] += weight

    def add_h(self, i: Index, weight: float) -> None:
        self.lin_h[ix_val(self.n, i)] += weight

    def add_inner_basis(self, p: int, coeffs: np.ndarray, weight: float) -> None:
        """Add weight * <basis_p, sum_q coeffs[q] basis_q>."""
        half = 0.5 * weight
        self.quad[p, :] += half * coeffs
        self.quad[:, p] += half * coeffs

    def add_inner_sparse(self, a: list[tuple[int, float]], b: list[tuple[int, float]], weight: float) -> None:
        """Add weight * <sum a, sum b> where both sides are short index lists."""
        for p, ca in a:
            for q, cb in b:
                w = 0.5 * weight * ca * cb
                self.quad[p, q] += w
                self.quad[q, p] += w

    def add_square(self, coeffs: np.ndarray, weight: float) -> None:
        """Add weight * ||sum_q coeffs[q] basis_q||^2."""
        self.quad += weight * np.outer(coeffs, coeffs)

    def add_block(self, indices: np.ndarray, block: np.ndarray, weight: float) -> None:
        """Add weight * sum_{p,q} block[p,q] <basis_{indices[p]}, basis_{indices[q]}>."""
        sym = 0.5 * (block + block.T)
        self.quad[np.ix_(indices, indices)] += weight * sym

    def evaluate(self, vectors: np.ndarray, f_vals: np.ndarray, h_vals: np.ndarray) -> float:
        """Numeric value of the form on concrete data: vectors is a
        (basis_dim, space_dim) stack of realizations of the symbols."""
        gram = vectors @ vectors.T
        return float(np.sum(self.quad * gram) + self.lin_f @ f_vals + self.lin_h @ h_vals)

    def max_abs(self) -> float:
        return max(
            float(np.max(np.abs(self.quad))),
            float(np.max(np.abs(self.lin_f))),
            float(np.max(np.abs(self.lin_h))),
        )

    def residual_vs(self, other: "GramLedger") -> tuple[float, float, float]:
        """Max absolute coefficient mismatch: (quadratic, f-linear, h-linear)."""
        return (
            float(np.max(np.abs(self.quad - other.quad))),
            float(np.max(np.abs(self.lin_f - other.lin_f))),
            float(np.max(np.abs(self.lin_h - other.lin_h))),
        )


class CocoExpander:
    """Expands co-coercivity inequalities of one method run over the basis.

    Parameters
    ----------
    hcum : (n, n) array
        Cumulative stepsize entries; column i-1 holds the coefficients of the
        past gradient directions in x_0 - x_i.
    composite : bool
        If True the iterates follow the composite extension, so direction j
        is g_j + s_{j+1}; otherwise plain gradients.
    coupled_star : bool
        If True the gradient at the optimum is -s_star (composite optimality);
        otherwise it is zero (unconstrained optimality).
    """

    def __init__(self, hcum: np.ndarray, composite: bool, coupled_star: bool):
        self.hcum = np.asarray(hcum, dtype=float)
        self.n = self.hcum.shape[0]
        self.composite = composite
        self.coupled_star = coupled_star
        self._x_cache: dict[Index, np.ndarray] = {}

    def x_rel(self, i: Index) -> np.ndarray:
        """Coefficients of x_i - x_0 over the basis."""
        cached = self._x_cache.get(i)
        if cached is not None:
            return cached
        n = self.n
        c = np.zeros(basis_dim(n))
        if i == STAR:
            c[ix_dist(n)] = -1.0
        else:
            i = int(i)
            if not 0 <= i <= n:
                raise IndexError(f"iterate index {i} out of range 0..{n}")
            for l in range(i):
                w = self.hcum[l, i - 1]
                c[ix_g(n, l)] -= w
                if self.composite:
                    c[ix_s(n, l + 1)] -= w
        self._x_cache[i] = c
        return c

    def x_diff(self, i: Index, j: Index) -> np.ndarray:
        return self.x_rel(i) - self.x_rel(j)

    def grad_terms(self, i: Index) -> list[tuple[int, float]]:
        """Gradient at iterate i as a short list of (basis position, coeff)."""
        n = self.n
        if i == STAR:
            return [(ix_s_star(n), -1.0)] if self.coupled_star else []
        return [(ix_g(n, int(i)), 1.0)]

    def subgrad_terms(self, j: Index) -> list[tuple[int, float]]:
        n = self.n
        if j == STAR:
            return [(ix_s_star(n), 1.0)]
        j = int(j)
        if not 1 <= j <= n:
            raise IndexError(f"subgradient index {j} out of range 1..{n}")
        return [(ix_s(n, j), 1.0)]

    def add_smooth_coco(self, led: GramLedger, weight: float, i: Index, j: Index) -> None:
        """Accumulate weight * [f_i - f_j - <g_j, x_i - x_j> - ||g_i - g_j||^2 / 2]."""
        if i == j:
            raise ValueError("co-coercivity requires distinct indices")
        led.add_f(i, weight)
        led.add_f(j, -weight)
        diff = self.x_diff(i, j)
        gj = self.grad_terms(j)
        for p, c in gj:
            led.add_inner_basis(p, diff, -weight * c)
        gd = self.grad_terms(i) + [(p, -c) for p, c in gj]
        led.add_inner_sparse(gd, gd, -0.5 * weight)

    def add_nonsmooth_coco(self, led: GramLedger, weight: float, i: Index, j: Index) -> None:
        """Accumulate weight * [h_i - h_j - <s_j, x_i - x_j>]."""
        if i == j:
            raise ValueError("co-coercivity requires distinct indices")
        led.add_h(i, weight)
        led.add_h(j, -weight)
        diff = self.x_diff(i, j)
        for p, c in self.subgrad_terms(j):
            led.add_inner_basis(p, diff, -weight * c)


def cocoercivity_ledger(hcum: np.ndarray, i: Index, j: Index, mode: str) -> GramLedger:
    """Single co-coercivity inequality as a standalone ledger.

    mode 'unconstrained': smooth inequality along the plain method (optimal
    gradient substituted by zero); 'composite_f': smooth inequality along the
    composite extension (optimal gradient is -s_star); 'composite_h': the
    nonsmooth inequality along the composite extension.
    """
    hcum = np.asarray(hcum, dtype=float)
    led = GramLedger(hcum.shape[0])
    if mode == "unconstrained":
        CocoExpander(hcum, composite=False, coupled_star=False).add_smooth_coco(led, 1.0, i, j)
    elif mode == "composite_f":
        CocoExpander(hcum, composite=True, coupled_star=True).add_smooth_coco(led, 1.0, i, j)
    elif mode == "composite_h":
        CocoExpander(hcum, composite=True, coupled_star=True).add_nonsmooth_coco(led, 1.0, i, j)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return led
