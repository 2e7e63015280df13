"""Fixed-point amplitude amplification by quantum singular value transformation.

Convention
----------
``W_m(theta) = exp(i theta (2 Pi_m - I))`` and

    W_{t,phi} = W_2(phi_t) W_1(phi_{t-1}) W_2(phi_{t-2}) ... W_1(phi_2) W_2(phi_1)

(rightmost factor first, ``Pi_2`` on odd slots).  The controlled unitary

    G = W_{t,phi} (x) |+><+| + W_{t,-phi} (x) |-><-|

has ``<0|_H G |0>_H = (W_{t,phi} + W_{t,-phi}) / 2``, whose ``Pi_2 . Pi_1``
block is ``Q(Pi_2 Pi_1)`` with ``Q(x) = Re P_phi(x)`` and ``P_phi`` the
single Jordan-block matrix element ``<xi| W_{t,phi} |psi>``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.fft import dct
from scipy.special import erf, erfcinv

from ._config import get_tolerances
from .exceptions import CapExceededError, InvariantViolation, PhaseFindingError, ValidationError
from .tensor import DenseOperator, StateVector, SystemLayout
from .validation import check_projector, check_unit_interval

__all__ = [
    "CONVENTION_VERSION",
    "SignPolynomial",
    "PhaseSequence",
    "JordanDecomposition",
    "make_sign_poly",
    "find_phases",
    "sign_phases",
    "qsp_scalar_eval",
    "qsp_matrix_element",
    "jordan_decompose",
    "build_G",
    "apply_G",
    "apply_poly_oracle",
    "poly_oracle_lowrank",
    "phase_cache_key",
    "clear_phase_cache",
]

CONVENTION_VERSION = "W2-odd/plusminus-H/v1"


@dataclass(frozen=True, eq=False)
class SignPolynomial:
    """Odd Chebyshev series approximating ``sign(x)``.

    Attributes
    ----------
    coeffs : ndarray
        Chebyshev coefficients ``c_0 .. c_t`` (even entries are zero).
    beta, delta : float
        Gap and accuracy parameters.
    k : float
        Steepness of the ``erf(k x)`` target.
    """

    coeffs: np.ndarray = field(repr=False)
    beta: float
    delta: float
    k: float = float("nan")

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size % 2:
            raise ValidationError("odd polynomial needs an even-length coefficient vector", "coeffs")
        c[::2] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    t = degree

    def __call__(self, x):
        return cheb.chebval(x, self.coeffs)

    def grid_errors(self, n: int | None = None) -> dict:
        """Worst violations of the two bounds on an ``n``-point grid plus ``+-beta``."""
        n = get_tolerances().poly_grid if n is None else n
        x = np.concatenate([np.linspace(-1.0, 1.0, n), [self.beta, -self.beta]])
        q = self(x)
        mask = np.abs(x) >= self.beta
        return {
            "max_abs": float(np.abs(q).max()),
            "max_sign_err": float(np.abs(q[mask] - np.sign(x[mask])).max()) if mask.any() else 0.0,
        }

    def as_dict(self) -> dict:
        return {"degree": self.degree, "beta": self.beta, "delta": self.delta, "k": self.k,
                "coeffs": [float(c) for c in self.coeffs]}

    @classmethod
    def from_dict(cls, d: dict) -> "SignPolynomial":
        return cls(np.asarray(d["coeffs"], dtype=float), float(d["beta"]), float(d["delta"]), float(d.get("k", "nan")))


@dataclass(frozen=True)
class PhaseSequence:
    phases: tuple[float, ...]
    residual: float = float("nan")

    def __post_init__(self):
        ph = tuple(float(p) for p in np.asarray(self.phases, dtype=float).reshape(-1))
        if len(ph) % 2 == 0:
            raise ValidationError(f"phase count must be odd, got {len(ph)}", "phases")
        object.__setattr__(self, "phases", ph)

    @property
    def t(self) -> int:
        return len(self.phases)

    def __neg__(self) -> "PhaseSequence":
        return PhaseSequence(tuple(-p for p in self.phases), self.residual)

    def array(self) -> np.ndarray:
        return np.asarray(self.phases)

    def as_dict(self) -> dict:
        return {"t": self.t, "phases": list(self.phases), "residual": self.residual}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseSequence":
        return cls(tuple(d["phases"]), float(d.get("residual", "nan")))


# --------------------------------------------------------------------------
# sign polynomial


def _odd_chebyshev_coeffs(f, degree: int, n_nodes: int) -> np.ndarray:
    """Chebyshev coefficients of ``f`` up to ``degree`` by cosine quadrature."""
    theta = np.pi * (np.arange(n_nodes) + 0.5) / n_nodes
    c = dct(f(np.cos(theta)), type=2) / n_nodes
    c[0] /= 2.0
    c = c[: degree + 1].copy()
    c[::2] = 0.0
    return c


def make_sign_poly(beta: float, delta: float, cap: int | None = None) -> SignPolynomial:
    """Smallest odd-degree truncation of ``erf(k x)/(1 + delta/2)`` meeting both bounds.

    ``k`` is fixed by ``erfc(k beta) = delta/4``, which leaves a margin of
    about ``delta/4`` for the truncation error.  The bounds ``|Q| <= 1`` and
    ``|Q - sign| <= delta`` (for ``|x| >= beta``) are checked on the
    configured grid; the degree search doubles a working maximum and picks
    the smallest admissible degree below it.

    >>> poly = make_sign_poly(0.3, 0.01)
    >>> poly.degree % 2, poly.grid_errors()["max_sign_err"] <= 0.01
    (1, True)
    """
    beta = check_unit_interval(beta, "beta", open_left=True)
    delta = check_unit_interval(delta, "delta", open_left=True)
    tol = get_tolerances()
    cap = tol.degree_cap if cap is None else cap
    k = float(erfcinv(delta / 4.0) / beta)
    x = np.concatenate([np.linspace(-1.0, 1.0, tol.poly_grid), [beta, -beta]])
    mask = np.abs(x) >= beta
    sgn = np.sign(x[mask])[:, None]
    tmax = 15
    while True:
        tmax = min(tmax, cap)
        c = _odd_chebyshev_coeffs(lambda y: erf(k * y), tmax, 4 * (tmax + 1))
        c /= 1.0 + delta / 2.0
        partial = np.cumsum(cheb.chebvander(x, tmax) * c, axis=1)
        ok = np.all(np.abs(partial) <= 1.0, axis=0)
        ok &= np.all(np.abs(partial[mask] - sgn) <= delta, axis=0)
        ok[::2] = False
        hits = np.flatnonzero(ok)
        if hits.size:
            t = int(hits[0])
            return SignPolynomial(c[: t + 1], beta, delta, k)
        if tmax >= cap:
            raise CapExceededError("sign polynomial degree", 2 * cap, cap)
        tmax = 2 * tmax + 1


# --------------------------------------------------------------------------
# scalar QSP model


def _block_model(x: np.ndarray):
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    s = np.sqrt(1.0 - x * x)
    psi = np.stack([x, s], axis=-1).astype(complex)
    refl1 = 2.0 * psi[..., :, None].real * psi[..., None, :].real - np.eye(2)
    return psi, refl1


def _factors(phases: np.ndarray, refl1: np.ndarray):
    """Per-slot factors ``W`` and generators ``dW/dphi W^-1`` for every node."""
    n = refl1.shape[0]
    z = np.broadcast_to(np.diag([1.0, -1.0]).astype(complex), (n, 2, 2))
    eye = np.eye(2)
    fs, gs = [], []
    for j, ph in enumerate(phases):
        refl = z if j % 2 == 0 else refl1
        fs.append(math.cos(ph) * eye + 1j * math.sin(ph) * refl)
        gs.append(1j * refl)
    return fs, gs


def qsp_matrix_element(phases, x):
    """``<xi| W_{t,phi} |psi>`` in the single Jordan-block model with overlap ``x``."""
    ph = phases.array() if isinstance(phases, PhaseSequence) else np.asarray(phases, dtype=float)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    psi, refl1 = _block_model(xs)
    fs, _ = _factors(ph, refl1)
    v = psi
    for f in fs:
        v = np.einsum("nij,nj->ni", f, v)
    out = v[:, 0]
    return out if np.ndim(x) else complex(out[0])


def qsp_scalar_eval(phases, x):
    """``Q(x) = Re <xi| W_{t,phi} |psi>`` (the average of the ``+-phi`` branches)."""
    p = qsp_matrix_element(phases, x)
    return np.real(p) if np.ndim(x) else float(np.real(p))


def _value_and_jacobian(ph: np.ndarray, x: np.ndarray):
    psi, refl1 = _block_model(x)
    fs, gs = _factors(ph, refl1)
    right = [psi]
    for f in fs:
        right.append(np.einsum("nij,nj->ni", f, right[-1]))
    left = np.zeros_like(psi)
    left[:, 0] = 1.0
    jac = np.empty((x.size, ph.size), dtype=complex)
    for j in range(ph.size - 1, -1, -1):
        jac[:, j] = np.einsum("ni,nij,nj->n", left, gs[j], right[j + 1])
        left = np.einsum("ni,nij->nj", left, fs[j])
    return right[-1][:, 0].real, jac.real


def find_phases(poly, max_iter: int = 300) -> PhaseSequence:
    """Phases whose scalar QSP response equals an odd polynomial.

    Gauss-Newton with minimum-norm least-squares steps, started from ``phi_j = pi/2`` for all ``j``
    where the response vanishes identically.  The residual is measured at
    the ``(t+1)/2`` positive Chebyshev nodes and then verified on the
    configured uniform grid of ``[0, 1]``.

    Parameters
    ----------
    poly : SignPolynomial or array_like
        Either a polynomial or its Chebyshev coefficient vector.
    """
    tol = get_tolerances()
    coeffs = poly.coeffs if isinstance(poly, SignPolynomial) else np.asarray(poly, dtype=float)
    t = coeffs.size - 1
    if t < 1 or t % 2 == 0:
        raise ValidationError(f"need an odd degree, got {t}", "poly")
    if np.any(np.abs(coeffs[::2]) > 0):
        raise ValidationError("polynomial is not odd", "poly")
    d = (t + 1) // 2
    nodes = np.cos(np.pi * (2 * np.arange(1, d + 1) - 1) / (4 * d))
    target = cheb.chebval(nodes, coeffs)
    ph = np.full(t, np.pi / 2)
    best, best_err = ph, np.inf
    for _ in range(max_iter):
        val, jac = _value_and_jacobian(ph, nodes)
        res = val - target
        err = float(np.abs(res).max())
        if err < best_err:
            best, best_err = ph, err
        if err < 1e-14:
            break
        ph = ph + np.linalg.lstsq(jac, -res, rcond=None)[0]
    ph, err = best, best_err
    grid = np.linspace(0.0, 1.0, tol.phase_grid)
    grid_err = float(np.abs(qsp_scalar_eval(ph, grid) - cheb.chebval(grid, coeffs)).max())
    ph = (ph + np.pi) % (2 * np.pi) - np.pi
    ph[ph == -np.pi] = np.pi
    if err > tol.phase_residual or grid_err > tol.phase_residual_max:
        raise PhaseFindingError(f"phase residual {err:.2e} (nodes), {grid_err:.2e} (grid) for t={t}")
    return PhaseSequence(tuple(ph), grid_err)


# --------------------------------------------------------------------------
# cache


_PHASE_CACHE: dict[str, tuple[SignPolynomial, PhaseSequence]] = {}


def phase_cache_key(beta: float, delta: float) -> str:
    tol = get_tolerances()
    payload = json.dumps([repr(float(beta)), repr(float(delta)), CONVENTION_VERSION, tol.poly_grid,
                          tol.phase_grid, tol.degree_cap])
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def clear_phase_cache():
    _PHASE_CACHE.clear()


def sign_phases(beta: float, delta: float, cap: int | None = None):
    """Cached ``(SignPolynomial, PhaseSequence, relaxed)`` for ``(beta, delta)``.

    If phase finding fails, ``delta`` is relaxed by a factor of two (at most
    three times) and ``relaxed`` reports the factor that was used.
    """
    key = phase_cache_key(beta, delta)
    if key in _PHASE_CACHE:
        poly, phases = _PHASE_CACHE[key]
        return poly, phases, poly.delta / delta
    d = delta
    for _ in range(4):
        poly = make_sign_poly(beta, d, cap)
        try:
            phases = find_phases(poly)
            break
        except PhaseFindingError:
            d = min(1.0, 2 * d)
    else:
        raise PhaseFindingError(f"no phases found for beta={beta}, delta={delta}")
    _PHASE_CACHE[key] = (poly, phases)
    return poly, phases, d / delta


# --------------------------------------------------------------------------
# Jordan blocks


@dataclass(frozen=True, eq=False)
class JordanDecomposition:
    q: np.ndarray
    psi: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return int(self.q.size)

    @property
    def blocks(self):
        return [(float(self.q[m]), self.psi[:, m], self.xi[:, m]) for m in range(self.rank)]


def _mat(op):
    return np.asarray(op.matrix if isinstance(op, DenseOperator) else op)


def jordan_decompose(pi1, pi2, check: bool = True) -> JordanDecomposition:
    """Jordan blocks from the eigendecomposition of ``Pi1 Pi2 Pi1``."""
    check_projector(pi1, "Pi1")
    check_projector(pi2, "Pi2")
    a, b = _mat(pi1), _mat(pi2)
    if a.shape != b.shape:
        raise ValidationError(f"projector shapes differ: {a.shape} vs {b.shape}", "Pi2")
    m = a @ b @ a
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    keep = w > get_tolerances().eig_cutoff
    order = np.argsort(-w[keep], kind="stable")
    q = w[keep][order]
    psi = v[:, keep][:, order]
    xi = (b @ psi) / np.sqrt(q)
    dec = JordanDecomposition(q, psi, xi)
    if check:
        tol = get_tolerances().jordan
        r1 = np.linalg.norm(m - (psi * q) @ psi.conj().T, 2) if q.size else np.linalg.norm(m, 2)
        m2 = b @ a @ b
        r2 = np.linalg.norm(m2 - (xi * q) @ xi.conj().T, 2) if q.size else np.linalg.norm(m2, 2)
        ov = np.abs(np.sum(xi.conj() * psi, axis=0)) ** 2
        orth = np.abs(xi.conj().T @ xi - np.eye(q.size)).max(initial=0.0)
        if max(r1, r2, orth, np.abs(ov - q).max(initial=0.0)) > tol:
            raise InvariantViolation(f"Jordan invariants violated (residuals {r1:.2e}, {r2:.2e}, {orth:.2e})")
    return dec


# --------------------------------------------------------------------------
# the amplification unitary


def _w_apply(theta: float, p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``W(theta) y`` for ``Pi = p p^dagger`` without forming ``Pi``."""
    return np.exp(-1j * theta) * y + (2j * math.sin(theta)) * (p @ (p.conj().T @ y))


def _w_sequence(ph, p1: np.ndarray, p2: np.ndarray, y: np.ndarray) -> np.ndarray:
    for j, theta in enumerate(ph):
        y = _w_apply(theta, p2 if j % 2 == 0 else p1, y)
    return y


def apply_G(phases: PhaseSequence, p1: np.ndarray, p2: np.ndarray, y: np.ndarray):
    """``G (y (x) |0>_H)`` split into its ``H = 0`` and ``H = 1`` components.

    ``p1`` and ``p2`` are isometries with ``Pi_m = p_m p_m^dagger``; the cost
    is linear in the register dimension.
    """
    ph = phases.array()
    a = _w_sequence(ph, p1, p2, y)
    b = _w_sequence(-ph, p1, p2, y)
    return 0.5 * (a + b), 0.5 * (a - b)


def build_G(phases: PhaseSequence, pi1, pi2) -> DenseOperator:
    """Dense ``G_{t,phi}`` on ``system (x) H`` (H is the last factor)."""
    if phases.t % 2 == 0:
        raise ValidationError("t must be odd", "phases")
    check_projector(pi1, "Pi1")
    check_projector(pi2, "Pi2")
    a, b = _mat(pi1), _mat(pi2)
    n = a.shape[0]
    eye = np.eye(n, dtype=complex)

    def w_total(ph):
        y = eye
        for j, theta in enumerate(ph):
            pi = b if j % 2 == 0 else a
            y = np.exp(-1j * theta) * y + (2j * math.sin(theta)) * (pi @ y)
        return y

    ph = phases.array()
    plus = np.full((2, 2), 0.5)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
    g = np.kron(w_total(ph), plus) + np.kron(w_total(-ph), minus)
    layout = pi1.layout if isinstance(pi1, DenseOperator) else SystemLayout.of(("S", n))
    return DenseOperator(g, layout + SystemLayout.of(("H", 2)))


def apply_poly_oracle(poly, pi1, pi2, psi):
    """``Q(Pi2 Pi1) psi`` through the SVD of ``Pi2 Pi1`` (no phases involved)."""
    a, b = _mat(pi1), _mat(pi2)
    u, s, vh = np.linalg.svd(b @ a)
    qs = np.asarray(poly(s)) if callable(poly) else cheb.chebval(s, poly)
    keep = s > get_tolerances().eig_cutoff
    qmat = (u[:, keep] * qs[keep]) @ vh[keep]
    if isinstance(psi, StateVector):
        return StateVector(psi.layout, qmat @ psi.amplitudes)
    return qmat @ np.asarray(psi)


def poly_oracle_lowrank(poly, p1: np.ndarray, p2: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Same as :func:`apply_poly_oracle` using the isometries ``p1``, ``p2``."""
    core = p2.conj().T @ p1
    u, s, vh = np.linalg.svd(core, full_matrices=False)
    keep = s > get_tolerances().eig_cutoff
    qs = np.asarray(poly(s[keep])) if callable(poly) else cheb.chebval(s[keep], poly)
    left = p2 @ (u[:, keep] * qs)
    right = vh[keep] @ (p1.conj().T @ y)
    return left @ right
