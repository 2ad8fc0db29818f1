#!/usr/bin/env python3
"""Print the summary of certified composite rates for the four families,
next to their closed forms and asymptotic orders.

Usage: python scripts/rate_table.py
"""

from peplift import catalog
from peplift.lift import certified_rate, lift_func, lift_grad


def rows():
    for algo, sizes in (
        ("silver", [1, 2, 3, 4, 5, 6]),
        ("ogm", [1, 2, 4, 8, 16, 32, 64]),
        ("gsw", [1, 2, 3, 4, 5, 6]),
        ("ogmg", [1, 2, 4, 8, 16, 32, 64]),
    ):
        for size in sizes:
            H = catalog.schedule_for(algo, size)
            cert = catalog.certificate_for(algo, size)
            xi = catalog.default_xi(algo, size)
            if catalog.METRIC[algo] == "func":
                lifted = lift_func(H, cert, xi=xi)
            else:
                lifted = lift_grad(H, cert, xi=xi)
            yield algo, catalog.METRIC[algo], size, cert.n, certified_rate(lifted).constant, \
                catalog.named_rate(algo, size), catalog.ASYMPTOTIC[algo]


def main() -> None:
    header = f"{'algorithm':<8} {'metric':<6} {'size':>4} {'n':>3} {'certified':>14} {'closed form':>14}  asymptotic"
    print(header)
    print("-" * len(header))
    for algo, metric, size, n, rate, named, asym in rows():
        print(f"{algo:<8} {metric:<6} {size:>4} {n:>3} {rate:>14.8e} {named:>14.8e}  {asym}")


if __name__ == "__main__":
    main()
