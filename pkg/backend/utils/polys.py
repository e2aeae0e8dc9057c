"""Dense complex polynomial helpers.

Coefficient arrays are ascending (index k holds the coefficient of x^k),
the numpy.polynomial.polynomial convention. Denominators are kept in
factored form as pole multisets ``((root, multiplicity), ...)``.
"""
from math import comb
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

Poles = tuple[tuple[complex, int], ...]


def as_poly(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
    if c.size == 0:
        c = np.zeros(1, dtype=complex)
    return c


def trim(coeffs, rel_tol: float = 0.0) -> np.ndarray:
    """Drop trailing coefficients that are zero, or tiny relative to the largest one."""
    c = as_poly(coeffs)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    cut = rel_tol * scale
    n = c.size
    while n > 1 and abs(c[n - 1]) <= cut:
        n -= 1
    return c[:n].copy()


def degree(coeffs) -> int:
    c = trim(coeffs)
    if c.size == 1 and c[0] == 0:
        return -1
    return c.size - 1


def monomial(k: int, scale: complex = 1.0) -> np.ndarray:
    c = np.zeros(k + 1, dtype=complex)
    c[k] = scale
    return c


def evaluate(coeffs, x):
    return npoly.polyval(x, as_poly(coeffs))


def add(a, b) -> np.ndarray:
    return npoly.polyadd(as_poly(a), as_poly(b))


def sub(a, b) -> np.ndarray:
    return npoly.polysub(as_poly(a), as_poly(b))


def mul(a, b) -> np.ndarray:
    return npoly.polymul(as_poly(a), as_poly(b))


def derivative(coeffs) -> np.ndarray:
    c = as_poly(coeffs)
    if c.size == 1:
        return np.zeros(1, dtype=complex)
    return npoly.polyder(c)


def taylor_shift(coeffs, x0: complex) -> np.ndarray:
    """Coefficients of c(x0 + z) as a polynomial in z."""
    c = as_poly(coeffs)
    n = c.size
    out = np.zeros(n, dtype=complex)
    powers = x0 ** np.arange(n)
    for k in range(n):
        out[k] = sum(c[j] * comb(j, k) * powers[j - k] for j in range(k, n))
    return out


def deflate(coeffs, root: complex) -> np.ndarray:
    """Quotient of c(x) by (x - root), remainder discarded."""
    quotient, _ = npoly.polydiv(as_poly(coeffs), np.array([-root, 1.0], dtype=complex))
    return as_poly(quotient)


def coefficient_scale(coeffs, x: complex) -> float:
    """||c|| max(1, |x|)^deg c: the size c(x) is measured against in cancellation tests."""
    c = as_poly(coeffs)
    return float(np.linalg.norm(c) * max(1.0, abs(x)) ** (c.size - 1))


def vanishes_at(coeffs, x: complex, rel_tol: float) -> bool:
    scale = coefficient_scale(coeffs, x)
    if scale == 0.0:
        return True
    return abs(evaluate(coeffs, x)) <= rel_tol * scale


def from_poles(poles: Poles) -> np.ndarray:
    """Monic polynomial prod (x - root)^m."""
    roots = [root for root, mult in poles for _ in range(mult)]
    if not roots:
        return np.ones(1, dtype=complex)
    return as_poly(npoly.polyfromroots(roots))


def _match(root: complex, poles: Sequence[tuple[complex, int]], tol: float) -> int:
    for idx, (other, _) in enumerate(poles):
        if abs(other - root) <= tol * (1.0 + abs(root)):
            return idx
    return -1


def merge_poles(first: Poles, second: Poles, tol: float, mode: str = "max") -> Poles:
    """Union of two pole multisets; ``mode`` is "max" (lcm) or "sum" (product)."""
    merged = [list(p) for p in first]
    for root, mult in second:
        idx = _match(root, merged, tol)
        if idx < 0:
            merged.append([root, mult])
        elif mode == "sum":
            merged[idx][1] += mult
        else:
            merged[idx][1] = max(merged[idx][1], mult)
    return tuple((complex(r), int(m)) for r, m in merged if m > 0)


def missing_factor(poles: Poles, target: Poles, tol: float) -> np.ndarray:
    """Polynomial by which a fraction over ``poles`` must be expanded to sit over ``target``."""
    extra = []
    for root, mult in target:
        idx = _match(root, poles, tol)
        have = poles[idx][1] if idx >= 0 else 0
        if mult > have:
            extra.append((root, mult - have))
    return from_poles(tuple(extra))


def cancel_common(numerators: Iterable[np.ndarray], poles: Poles, rel_tol: float) -> tuple[list[np.ndarray], Poles]:
    """Cancel factors (x - root) dividing every numerator, to within ``rel_tol``."""
    nums = [as_poly(n) for n in numerators]
    kept = []
    for root, mult in poles:
        left = mult
        while left > 0 and all(vanishes_at(n, root, rel_tol) for n in nums):
            nums = [deflate(n, root) for n in nums]
            left -= 1
        if left > 0:
            kept.append((complex(root), left))
    return nums, tuple(kept)


def cluster_roots(roots: Sequence[complex], tol: float) -> Poles:
    """Group numerically repeated roots into (root, multiplicity) pairs."""
    groups: list[list[complex]] = []
    for root in roots:
        for group in groups:
            if abs(group[0] - root) <= tol * (1.0 + abs(root)):
                group.append(root)
                break
        else:
            groups.append([root])
    return tuple((complex(np.mean(g)), len(g)) for g in groups)
