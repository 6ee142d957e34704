"""Shrinkage operators and iterative solvers for g = K t + n.

`landweber_solve` gives the closed-form ridge solution
(K'K + lam I)^-1 K' g.  `ist_solve` runs iterative soft thresholding
with unit step,

    t_next = S_b(t + K'(g - K t)),

which requires spectral norm of K at most one.  `ist_solve_basis` is the
same iteration with shrinkage applied to coefficients in an orthonormal
basis instead of the canonical one.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PreconditionError, SingularSystemError

__all__ = [
    "soft_sym",
    "soft_nn",
    "spectral_norm",
    "landweber_solve",
    "IstReport",
    "ist_solve",
    "Basis",
    "canonical_basis",
    "dct_basis",
    "basis_soft_threshold",
    "ist_solve_basis",
]

_SPECTRAL_SLACK = 1e-9


def _vec(x, name):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {x.shape}")
    return x


def _check_bias(b):
    b = np.asarray(b, dtype=np.float64)
    if np.any(b < 0):
        raise PreconditionError("threshold must be nonnegative")
    return b


def soft_sym(x, b):
    """Symmetric soft threshold sign(x) * max(|x| - b, 0); b >= 0."""
    b = _check_bias(b)
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - b, 0.0)


def soft_nn(x, b):
    """One-sided soft threshold max(x - b, 0).

    This is the network activation used throughout the training code;
    unlike soft_sym the threshold may be any sign.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x - np.asarray(b, dtype=np.float64), 0.0)


def spectral_norm(mat, iters=500, tol=1e-14):
    """Largest singular value via power iteration on K'K.

    Deterministic start vector; stops early once the Rayleigh estimate
    stabilizes to relative tol.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise DimensionError(f"matrix required, got shape {mat.shape}")
    if mat.size == 0 or not np.any(mat):
        return 0.0
    n = mat.shape[1]
    # fixed, mildly uneven start so symmetric matrices do not stall
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(int(iters)):
        w = mat.T @ (mat @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = np.sqrt(nw)
        if abs(new - est) <= tol * max(new, 1.0):
            return new
        est = new
    return est


def landweber_solve(mat, g, lam):
    """Ridge solution (K'K + lam I)^-1 K' g via a linear solve.

    lam must be nonnegative; a singular normal system (possible at
    lam = 0) raises SingularSystemError.
    """
    mat = np.asarray(mat, dtype=np.float64)
    g = _vec(g, "g")
    if mat.ndim != 2 or mat.shape[0] != g.size:
        raise DimensionError(f"matrix {mat.shape} incompatible with g of length {g.size}")
    lam = float(lam)
    if lam < 0:
        raise PreconditionError("regularization weight must be nonnegative")
    gram = mat.T @ mat + lam * np.eye(mat.shape[1])
    rhs = mat.T @ g
    try:
        sol = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal system is singular: {exc}") from exc
    residual = np.linalg.norm(gram @ sol - rhs)
    scale = max(np.linalg.norm(rhs), 1.0)
    if not np.all(np.isfinite(sol)) or residual > 1e-8 * scale:
        raise SingularSystemError(
            f"normal system numerically singular (residual {residual:.3e})"
        )
    return sol


@dataclass
class IstReport:
    """Outcome of an iterative soft thresholding run.

    residual_history[k] is ||t_{k+1} - t_k||_2, objective_history[k] the
    lasso objective 0.5 ||g - K t_k||^2 + b ||t_k||_1 before step k.
    """

    solution: np.ndarray
    iterations: int
    converged: bool
    residual_history: np.ndarray = field(repr=False)
    objective_history: np.ndarray = field(repr=False)


def _check_operator(mat, g):
    mat = np.asarray(mat, dtype=np.float64)
    g = _vec(g, "g")
    if mat.ndim != 2 or mat.shape[0] != g.size:
        raise DimensionError(f"matrix {mat.shape} incompatible with g of length {g.size}")
    s = spectral_norm(mat)
    if s > 1.0 + _SPECTRAL_SLACK:
        raise PreconditionError(
            f"spectral norm {s:.6f} exceeds 1; rescale the operator first"
        )
    return mat, g


def _lasso_objective(mat, g, t, b):
    r = g - mat @ t
    return 0.5 * float(r @ r) + float(np.sum(b * np.abs(t)))


def ist_solve(mat, g, b, t0=None, max_iter=10000, tol=1e-8):
    """Unit-step iterative soft thresholding for the lasso problem.

    Stops when the iterate change drops below tol or after max_iter
    steps.  b may be a scalar or per-coefficient vector, all >= 0.
    """
    mat, g = _check_operator(mat, g)
    b = _check_bias(b)
    t = np.zeros(mat.shape[1]) if t0 is None else _vec(t0, "t0").copy()
    res_hist = []
    obj_hist = []
    converged = False
    it = 0
    for it in range(1, int(max_iter) + 1):
        obj_hist.append(_lasso_objective(mat, g, t, b))
        t_next = soft_sym(t + mat.T @ (g - mat @ t), b)
        res = np.linalg.norm(t_next - t)
        res_hist.append(res)
        t = t_next
        if res < tol:
            converged = True
            break
    return IstReport(t, it, converged, np.array(res_hist), np.array(obj_hist))


def lasso_kkt_residual(mat, g, t, b):
    """Worst violation of the lasso stationarity conditions at t.

    On the support the correlation K'(g - K t) must equal b sign(t);
    off the support its magnitude may not exceed b.  Zero means t is a
    minimizer.
    """
    mat = np.asarray(mat, dtype=np.float64)
    g = _vec(g, "g")
    t = _vec(t, "t")
    b = _check_bias(b)
    r = mat.T @ (g - mat @ t)
    on = t != 0
    b_full = np.broadcast_to(b, t.shape)
    worst = 0.0
    if np.any(on):
        worst = float(np.max(np.abs(r[on] - b_full[on] * np.sign(t[on]))))
    if np.any(~on):
        worst = max(worst, float(np.max(np.abs(r[~on]) - b_full[~on], initial=0.0)))
    return worst


@dataclass(frozen=True)
class Basis:
    """Orthonormal basis given by the columns of `vectors`."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError(f"basis must be square, got shape {v.shape}")
        gram = v.T @ v
        if not np.allclose(gram, np.eye(v.shape[1]), atol=1e-10):
            raise PreconditionError("basis columns are not orthonormal")
        object.__setattr__(self, "vectors", v)

    @property
    def size(self):
        return self.vectors.shape[0]

    def oriented(self, x):
        """Sign-flip columns so every inner product with x is nonnegative.

        Orthonormality is preserved; shrinking the flipped coefficients
        then matches one-sided shrinkage of the originals up to sign.
        """
        x = _vec(x, "x")
        if x.size != self.size:
            raise DimensionError("vector length does not match basis size")
        coef = self.vectors.T @ x
        signs = np.where(coef < 0, -1.0, 1.0)
        return Basis(self.vectors * signs)


def canonical_basis(n):
    """Standard basis of R^n."""
    return Basis(np.eye(int(n)))


def dct_basis(n):
    """Orthonormal DCT-II basis of R^n (columns are the cosine modes)."""
    n = int(n)
    if n < 1:
        raise DimensionError("basis size must be positive")
    k = np.arange(n)[:, None]
    l = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * k + 1) * l / (2 * n))
    mat *= np.sqrt(2.0 / n)
    mat[:, 0] = np.sqrt(1.0 / n)
    return Basis(mat)


def basis_soft_threshold(x, basis, biases):
    """Shrink the coefficients of x in an orthonormal basis.

    Computes sum_l S_b(<x, phi_l>) phi_l with per-coefficient thresholds.
    """
    x = _vec(x, "x")
    if not isinstance(basis, Basis):
        basis = Basis(basis)
    if x.size != basis.size:
        raise DimensionError("vector length does not match basis size")
    biases = np.broadcast_to(np.asarray(biases, dtype=np.float64), (basis.size,))
    coef = soft_sym(basis.vectors.T @ x, biases)
    return basis.vectors @ coef


def ist_solve_basis(mat, g, basis, biases, t0=None, max_iter=10000, tol=1e-8):
    """Iterative shrinkage with the proximal step taken in a basis.

    Identical to ist_solve when the basis is canonical and biases are
    uniform.
    """
    mat, g = _check_operator(mat, g)
    if not isinstance(basis, Basis):
        basis = Basis(basis)
    if basis.size != mat.shape[1]:
        raise DimensionError("basis size does not match coefficient dimension")
    biases = np.broadcast_to(np.asarray(biases, dtype=np.float64), (basis.size,)).copy()
    _check_bias(biases)
    t = np.zeros(mat.shape[1]) if t0 is None else _vec(t0, "t0").copy()
    res_hist = []
    obj_hist = []
    converged = False
    it = 0
    for it in range(1, int(max_iter) + 1):
        r = g - mat @ t
        obj_hist.append(
            0.5 * float(r @ r) + float(np.sum(biases * np.abs(basis.vectors.T @ t)))
        )
        t_next = basis_soft_threshold(t + mat.T @ (g - mat @ t), basis, biases)
        res = np.linalg.norm(t_next - t)
        res_hist.append(res)
        t = t_next
        if res < tol:
            converged = True
            break
    return IstReport(t, it, converged, np.array(res_hist), np.array(obj_hist))
