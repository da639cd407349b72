"""
CONTRARIAN-CASCADES Golden-Section Search
One-dimensional bracketed maximization.
"""

import math
from typing import Callable, Tuple

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


def golden_section_max(
    objective: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-7
) -> Tuple[float, float]:
    """
    Maximize a unimodal function on [lo, hi] by golden-section search.

    Args:
        objective: 1d function to maximize
        lo: Lower end of the bracket
        hi: Upper end of the bracket
        tol: Stop once the bracket is narrower than this

    Returns:
        Tuple of (argmax, max value)
    """
    if hi < lo:
        raise ValueError(f"Empty bracket: [{lo}, {hi}]")

    a, b = float(lo), float(hi)
    dist = b - a
    if dist <= tol:
        x = 0.5 * (a + b)
        return x, objective(x)

    # Number of shrink steps needed to reach tol
    n = int(math.ceil(math.log(tol / dist) / math.log(INV_PHI)))

    c = a + INV_PHI_SQ * dist
    d = a + INV_PHI * dist
    yc = objective(c)
    yd = objective(d)

    for _ in range(n - 1):
        if yc > yd:
            b, d, yd = d, c, yc
            dist = INV_PHI * dist
            c = a + INV_PHI_SQ * dist
            yc = objective(c)
        else:
            a, c, yc = c, d, yd
            dist = INV_PHI * dist
            d = a + INV_PHI * dist
            yd = objective(d)

    if yc > yd:
        return c, yc
    return d, yd


if __name__ == "__main__":
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0)
    print(f"argmax={x:.8f} max={fx:.3e}")
