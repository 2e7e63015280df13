"""Input validation helpers.

Each ``check_*`` function returns its (possibly converted) argument on
success and raises :class:`~qsvt_decoders.exceptions.ValidationError`
otherwise, so calls can be chained inline.
"""

from __future__ import annotations

import numbers

import numpy as np

from ._config import get_tolerances
from .exceptions import CapExceededError, InvariantViolation, NotFittedError, ValidationError

__all__ = [
    "check_positive_int",
    "check_unit_interval",
    "check_probability_vector",
    "check_density",
    "check_isometry",
    "check_unitary",
    "check_projector",
    "check_dim_cap",
    "check_power_of_two",
    "check_is_fitted",
    "assert_close",
]


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"expected an integer, got {value!r}", name)
    if value < minimum:
        raise ValidationError(f"must be >= {minimum}, got {value}", name)
    return int(value)


def check_unit_interval(value, name: str, *, open_left: bool = False, open_right: bool = False) -> float:
    """Real number in [0, 1] (optionally open at either end)."""
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"expected a real number, got {value!r}", name) from None
    lo_ok = x > 0 if open_left else x >= 0
    hi_ok = x < 1 if open_right else x <= 1
    if not (np.isfinite(x) and lo_ok and hi_ok):
        lo = "(" if open_left else "["
        hi = ")" if open_right else "]"
        raise ValidationError(f"must lie in {lo}0, 1{hi}, got {value!r}", name)
    return x


def check_probability_vector(p, name: str, length: int | None = None, tol: float = 1e-12) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(-1)
    if length is not None and arr.size != length:
        raise ValidationError(f"expected {length} entries, got {arr.size}", name)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError(f"entries must be non-negative, got {arr.tolist()}", name)
    if abs(arr.sum() - 1.0) > tol:
        raise ValidationError(f"entries must sum to 1, got {arr.sum()!r}", name)
    return arr


def _matrix(op) -> np.ndarray:
    return np.asarray(getattr(op, "matrix", op))


def check_density(rho, name: str = "rho", tol: float | None = None):
    tol = get_tolerances().density if tol is None else tol
    m = _matrix(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"density operator must be square, got shape {m.shape}", name)
    if np.abs(m - m.conj().T).max(initial=0.0) > tol:
        raise ValidationError("not Hermitian", name)
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"trace {tr.real:.3g} differs from 1", name)
    wmin = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
    if wmin < -tol:
        raise ValidationError(f"not positive semidefinite (min eigenvalue {wmin:.3g})", name)
    return rho


def check_isometry(v, name: str = "V", tol: float | None = None):
    tol = get_tolerances().isometry if tol is None else tol
    m = _matrix(v)
    if m.shape[0] < m.shape[1]:
        raise ValidationError(f"isometry needs out dim >= in dim, got shape {m.shape}", name)
    err = np.abs(m.conj().T @ m - np.eye(m.shape[1])).max(initial=0.0)
    if err > tol:
        raise ValidationError(f"V^dagger V deviates from identity by {err:.3g}", name)
    return v


def check_unitary(u, name: str = "U", tol: float | None = None):
    tol = get_tolerances().unitary if tol is None else tol
    m = _matrix(u)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"unitary must be square, got shape {m.shape}", name)
    check_isometry(u, name, tol)
    err = np.abs(m @ m.conj().T - np.eye(m.shape[0])).max(initial=0.0)
    if err > tol:
        raise ValidationError(f"U U^dagger deviates from identity by {err:.3g}", name)
    return u


def check_projector(p, name: str = "Pi", tol: float | None = None):
    tol = get_tolerances().projector if tol is None else tol
    m = _matrix(p)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"projector must be square, got shape {m.shape}", name)
    if np.abs(m - m.conj().T).max(initial=0.0) > tol:
        raise ValidationError("projector not Hermitian", name)
    err = np.abs(m @ m - m).max(initial=0.0)
    if err > tol:
        raise ValidationError(f"projector not idempotent (error {err:.3g})", name)
    return p


def check_dim_cap(dim: int, what: str, cap: int | None = None) -> int:
    cap = get_tolerances().dim_cap if cap is None else cap
    if dim > cap:
        raise CapExceededError(what, int(dim), int(cap))
    return dim


def check_power_of_two(value: int, name: str) -> int:
    value = check_positive_int(value, name)
    if value & (value - 1):
        raise ValidationError(f"must be a power of two, got {value}", name)
    return value


def check_is_fitted(estimator, attributes=None):
    """Raise :class:`NotFittedError` unless ``estimator`` has fitted attributes.

    By default looks for any attribute whose name ends in an underscore,
    following the scikit-learn convention.
    """
    if attributes is None:
        fitted = [k for k in vars(estimator) if k.endswith("_") and not k.startswith("__")]
    else:
        attributes = [attributes] if isinstance(attributes, str) else attributes
        fitted = [a for a in attributes if getattr(estimator, a, None) is not None]
        if len(fitted) != len(attributes):
            fitted = []
    if not fitted:
        raise NotFittedError(
            f"This {type(estimator).__name__} instance is not fitted yet; call 'fit' first."
        )


def assert_close(actual, expected, tol: float, what: str) -> float:
    """Raise :class:`InvariantViolation` when ``|actual - expected| > tol``."""
    err = float(np.max(np.abs(np.asarray(actual) - np.asarray(expected)), initial=0.0))
    if not err <= tol:
        raise InvariantViolation(f"{what}: deviation {err:.3e} exceeds {tol:.1e}")
    return err
