"""Dimensions of genus-1 Jacobi forms on SL2(Z) from the classical
decomposition into theta-series coefficients of elliptic modular forms."""
from math import ceil


def dim_modular(k: int) -> int:
    """Dimension of M_k(SL2(Z))."""
    if k < 0 or k % 2:
        return 0
    return k // 12 + (0 if k % 12 == 2 else 1)


def dim_jacobi(k: int, m: int) -> int:
    """dim J_{k,m} for k >= 2 and m >= 1."""
    if k % 2 == 0:
        return sum(dim_modular(k + 2 * j) - ceil(j * j / (4 * m)) for j in range(m + 1))
    return sum(dim_modular(k + 2 * j - 1) - ceil(j * j / (4 * m)) for j in range(1, m))
