from typing import Callable

import numpy as np

from ksrecon.errors import DivergenceError

Operator = Callable[[np.ndarray], np.ndarray]


def conjugate_gradient(
    op: Operator,
    rhs: np.ndarray,
    x0: np.ndarray,
    n_iter: int,
    callback: Callable[[np.ndarray, int], None] | None = None,
) -> np.ndarray:
    """Fixed-count CG for a Hermitian positive semi-definite ``op``.

    Typically applied to normal equations E^H E x = E^H b. Once the residual vanishes the
    iterate is frozen, but ``callback`` still fires every iteration so traces keep their length.
    """
    x = x0.copy()
    r = rhs - op(x)
    p = r.copy()
    rr_old = float(np.real(np.vdot(r, r)))
    for it in range(1, n_iter + 1):
        if rr_old > 0.0:
            d = op(p)
            pd = float(np.real(np.vdot(p, d)))
            if pd > 0.0:
                alpha = rr_old / pd
                x = x + alpha * p
                r = r - alpha * d
                rr_new = float(np.real(np.vdot(r, r)))
                if not np.isfinite(rr_new) or not np.all(np.isfinite(x)):
                    raise DivergenceError("Conjugate gradient produced a non-finite value", it)
                p = r + (rr_new / rr_old) * p
                rr_old = rr_new
            else:
                rr_old = 0.0
        if callback is not None:
            callback(x, it)
    return x
