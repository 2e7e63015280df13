"""The two post-selected decoding protocols.

Both protocols are described by a :class:`DecodingProblem`: a register
``S`` together with two isometries ``P1`` (from ``D B'`` into ``S``) and
``P2`` (from ``E' R'`` into ``S``) so that ``Pi_1 = P1 P1^dagger`` and
``Pi_2 = P2 P2^dagger``.  The first isometry is at the same time the
pre-measurement map applied to the received systems; post-selecting on
``Pi_2`` and pulling back through ``P2`` leaves a state on ``R E E' R'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._config import get_tolerances
from .decoupling import ProtocolInstance, entropy_report
from .exceptions import InvariantViolation
from .tensor import (
    DenseOperator,
    StateVector,
    SystemLayout,
    apply_operator,
    max_entangled,
    reduced_density,
)
from .validation import check_dim_cap

__all__ = [
    "DecodingProblem",
    "PostSelectResult",
    "gyk_problem",
    "petzlike_problem",
    "gyk_isometry",
    "petzlike_isometry",
    "postselect",
    "gyk_postselect",
    "petzlike_postselect",
    "projector_identities",
]

INPUT_LABELS = ("D", "B'")
POST_LABELS = ("E'", "R'")


@dataclass(frozen=True, eq=False)
class DecodingProblem:
    """Projector pair and input state for one decoder kind.

    Attributes
    ----------
    kind : {"gyk", "petzlike"}
    space : SystemLayout
        The decoding register ``S``.
    p1, p2 : ndarray
        Isometries with ``Pi_m = p_m p_m^dagger``; ``p1`` maps ``(D, B')``
        into ``S`` and ``p2`` maps ``(E', R')`` into ``S``.
    scale : float
        Ratio ``Pi_1 Pi_2 Pi_1 / omega_0^S`` (``d_B/d_D`` or ``d_A/d_E``).
    """

    kind: str
    inst: ProtocolInstance = field(repr=False)
    space: SystemLayout
    p1: np.ndarray = field(repr=False)
    p2: np.ndarray = field(repr=False)
    scale: float
    discard: tuple[str, ...]

    @property
    def input_layout(self) -> SystemLayout:
        return SystemLayout.of(*[(lab, self.inst.omega.layout.dim_of(lab)) for lab in INPUT_LABELS])

    @property
    def post_layout(self) -> SystemLayout:
        return SystemLayout.of(("E'", self.inst.d_e), ("R'", self.inst.d_a))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def isometry(self) -> DenseOperator:
        """Pre-measurement map ``D B' -> S``."""
        return DenseOperator(self.p1, self.space, self.input_layout)

    @cached_property
    def omega0(self) -> StateVector:
        """``(I_{RE} (x) P1)|omega>`` over ``(R, E) + S``."""
        return apply_operator(self.isometry, self.inst.omega.pure)

    def pi1(self) -> DenseOperator:
        return DenseOperator(self.p1 @ self.p1.conj().T, self.space)

    def pi2(self) -> DenseOperator:
        return DenseOperator(self.p2 @ self.p2.conj().T, self.space)


def _check_space(dim: int, kind: str):
    check_dim_cap(dim, f"{kind} decoding register")


def gyk_isometry(inst: ProtocolInstance, omega=None):
    """Map ``B' -> D' E' R'`` and the extended state ``|omega_0>``.

    The map adjoins ``Phi^{A'R'}`` and applies the complex conjugate of the
    composite isometry to ``A' B'``.

    Returns
    -------
    m : DenseOperator
        Isometry from ``B'`` to ``(D', E', R')``.
    omega0 : StateVector
        Over ``(R, E, D, D', E', R')``.
    """
    d_a, d_b, d_e, d_d = inst.d_a, inst.d_b, inst.d_e, inst.d_d
    vt = inst.v.reshape(d_e, d_d, d_a, d_b)
    m = vt.conj().transpose(1, 0, 2, 3).reshape(d_d * d_e * d_a, d_b) / math.sqrt(d_a)
    op = DenseOperator(m, SystemLayout.of(("D'", d_d), ("E'", d_e), ("R'", d_a)), SystemLayout.of(("B'", d_b)))
    psi = (omega or inst.omega).pure
    return op, apply_operator(op, psi)


def gyk_problem(inst: ProtocolInstance) -> DecodingProblem:
    d_a, d_e, d_d = inst.d_a, inst.d_e, inst.d_d
    m, _ = gyk_isometry(inst)
    space = SystemLayout.of(("D", d_d)) + m.out_layout
    _check_space(space.dim, "gyk")
    p1 = np.kron(np.eye(d_d), np.asarray(m.matrix))
    phi = np.asarray(max_entangled(d_d).amplitudes)
    p2 = np.kron(phi.reshape(-1, 1), np.eye(d_e * d_a))
    return DecodingProblem("gyk", inst, space, p1, p2, inst.d_b / d_d, ("D", "D'", "E'"))


def petzlike_isometry(inst: ProtocolInstance, omega=None):
    """Map ``D -> E' R' F^ B^`` and the extended state ``|omega~_0>``.

    The map adjoins ``Phi^{E^ E'}`` and applies ``U_F^dagger`` with
    ``E^ D`` relabelled as ``R' B^ F^``.

    Returns
    -------
    m : DenseOperator
        Isometry from ``D`` to ``(E', R', F^, B^)``.
    omega0 : StateVector
        Over ``(R, E, E', R', F^, B^, B')``.
    """
    d_a, d_b, d_e, d_d, d_f = inst.d_a, inst.d_b, inst.d_e, inst.d_d, inst.d_f
    ut = np.asarray(inst.dilation.u.matrix).reshape(d_e, d_d, d_a, d_b, d_f)
    m = ut.conj().transpose(0, 2, 4, 3, 1).reshape(d_e * d_a * d_f * d_b, d_d) / math.sqrt(d_e)
    out = SystemLayout.of(("E'", d_e), ("R'", d_a), ("F^", d_f), ("B^", d_b))
    op = DenseOperator(m, out, SystemLayout.of(("D", d_d)))
    psi = (omega or inst.omega).pure
    return op, apply_operator(op, psi)


def petzlike_problem(inst: ProtocolInstance) -> DecodingProblem:
    d_a, d_b, d_e, d_f = inst.d_a, inst.d_b, inst.d_e, inst.d_f
    m, _ = petzlike_isometry(inst)
    space = m.out_layout + SystemLayout.of(("B'", d_b))
    _check_space(space.dim, "petzlike")
    p1 = np.kron(np.asarray(m.matrix), np.eye(d_b))
    # columns (e', r') -> |e' r'> |0>_F^ |Phi>_{B^ B'}
    f0 = np.zeros(d_f)
    f0[0] = 1.0
    tail = np.kron(f0, np.asarray(max_entangled(d_b).amplitudes))
    p2 = np.kron(np.eye(d_e * d_a), tail.reshape(-1, 1))
    return DecodingProblem("petzlike", inst, space, p1, p2, d_a / d_e, ("E'", "F^", "B^", "B'"))


def make_problem(inst: ProtocolInstance, kind: str) -> DecodingProblem:
    if kind == "gyk":
        return gyk_problem(inst)
    if kind == "petzlike":
        return petzlike_problem(inst)
    from .exceptions import ValidationError

    raise ValidationError(f"unknown decoder kind {kind!r}", "kind")


__all__.append("make_problem")


@dataclass(frozen=True, eq=False)
class PostSelectResult:
    kind: str
    p_succ: float
    zeta_rr: DenseOperator | None = field(repr=False)
    fidelity_to_mes: float
    formula_p: float
    formula_f: float
    degenerate: bool = False
    post_state: StateVector | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p_succ": self.p_succ,
            "formula_p": self.formula_p,
            "fidelity": self.fidelity_to_mes,
            "formula_f": self.formula_f,
            "degenerate": self.degenerate,
        }


def _post_vector(prob: DecodingProblem) -> StateVector:
    """Unnormalised ``(I_{RE} (x) P2^dagger) Pi_2 |omega_0>`` over ``(R, E, E', R')``."""
    om0 = prob.omega0
    d_re = prob.inst.d_a * prob.inst.d_e
    amps = np.asarray(om0.amplitudes).reshape(d_re, prob.dim) @ prob.p2.conj()
    layout = SystemLayout.of(("R", prob.inst.d_a), ("E", prob.inst.d_e)) + prob.post_layout
    return StateVector(layout, amps.reshape(-1))


def postselect(prob: DecodingProblem, check: bool = True) -> PostSelectResult:
    inst = prob.inst
    rep = entropy_report(inst.omega)
    if prob.kind == "gyk":
        formula_p = inst.d_b / inst.d_d * 2.0 ** (-rep.h2_re)
    else:
        formula_p = inst.d_a / inst.d_e * 2.0 ** (-rep.h2_re)
    formula_f = 2.0 ** (rep.h2_re - rep.h2_e) / inst.d_a
    vec = _post_vector(prob)
    p = float(np.vdot(vec.amplitudes, vec.amplitudes).real)
    if p < get_tolerances().degenerate_probability:
        return PostSelectResult(prob.kind, p, None, float("nan"), formula_p, formula_f, degenerate=True)
    post = vec * (1.0 / math.sqrt(p))
    zeta = reduced_density(post, ["R", "R'"])
    phi = np.asarray(max_entangled(inst.d_a, ("R", "R'")).amplitudes)
    fid = float(np.vdot(phi, np.asarray(zeta.matrix) @ phi).real)
    res = PostSelectResult(prob.kind, p, zeta, fid, formula_p, formula_f, post_state=post)
    if check:
        tol = get_tolerances().identity_check
        if abs(p - formula_p) > tol or abs(fid - formula_f) > tol:
            raise InvariantViolation(
                f"{prob.kind} post-selection: p={p!r} vs {formula_p!r}, F={fid!r} vs {formula_f!r}"
            )
    return res


def gyk_postselect(inst: ProtocolInstance, check: bool = True) -> PostSelectResult:
    return postselect(gyk_problem(inst), check)


def petzlike_postselect(inst: ProtocolInstance, check: bool = True) -> PostSelectResult:
    return postselect(petzlike_problem(inst), check)


def projector_identities(prob: DecodingProblem) -> dict:
    """Operator-norm residuals of the projector-product identities.

    ``pi1_pi2_pi1``: ``|| Pi1 Pi2 Pi1 - scale * omega_0^S ||``.  For the
    gyk problem also ``pi2_pi1_pi2_sq``:
    ``|| (Pi2 Pi1 Pi2)^2 - Phi^{DD'} (x) (d_B p / d_D) zeta^{E'R'} ||``.
    Dense, so only meant for small registers.
    """
    pi1 = prob.p1 @ prob.p1.conj().T
    pi2 = prob.p2 @ prob.p2.conj().T
    om0 = prob.omega0
    d_re = prob.inst.d_a * prob.inst.d_e
    a = np.asarray(om0.amplitudes).reshape(d_re, prob.dim)
    omega_s = a.T @ a.conj()
    lhs = pi1 @ pi2 @ pi1
    out = {"pi1_pi2_pi1": float(np.linalg.norm(lhs - prob.scale * omega_s, 2))}
    if prob.kind == "gyk":
        inst = prob.inst
        res = postselect(prob, check=False)
        sq = pi2 @ pi1 @ pi2
        sq = sq @ sq
        if res.degenerate:
            target = np.zeros_like(sq)
        else:
            z = np.asarray(res.post_state.amplitudes).reshape(d_re, -1)
            zeta_er = z.T @ z.conj()
            phi = np.asarray(max_entangled(inst.d_d).amplitudes)
            target = np.kron(np.outer(phi, phi.conj()), inst.d_b * res.p_succ / inst.d_d * zeta_er)
        out["pi2_pi1_pi2_sq"] = float(np.linalg.norm(sq - target, 2))
    return out
