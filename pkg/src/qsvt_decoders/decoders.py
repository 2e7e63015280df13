"""Executable decoders and recovery-error evaluation.

The two amplification decoders and the exact Petz map are exposed as
estimators: ``fit`` takes a :class:`~qsvt_decoders.decoupling.ProtocolInstance`
and builds the decoding channel from ``(D, B')`` to ``R'``; ``transform``
applies that channel to a state on a layout containing ``D`` and ``B'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._config import get_tolerances
from .channels import KrausChannel, apply_channel, kraus_from_choi
from .decoupling import ProtocolInstance, decoupling_epsilon
from .exceptions import InvariantViolation, ValidationError
from .protocols import DecodingProblem, make_problem
from .qsvt import apply_G, make_sign_poly, phase_cache_key, poly_oracle_lowrank, sign_phases
from .tensor import (
    DenseOperator,
    StateVector,
    SystemLayout,
    density,
    herm_inv_sqrt,
    max_entangled,
    reduced_density,
    reorder,
    trace_distance,
)
from .validation import check_density, check_is_fitted, check_unit_interval

__all__ = [
    "DecoderRun",
    "GYKDecoder",
    "PetzLikeDecoder",
    "PetzRecovery",
    "choose_t",
    "decode_gyk",
    "decode_petzlike",
    "petz_exact",
    "barnum_knill_check",
    "omega_targ",
    "targ_check",
    "mes_fidelity",
]


def _check_instance(inst) -> ProtocolInstance:
    if not isinstance(inst, ProtocolInstance):
        raise ValidationError(f"expected a ProtocolInstance, got {type(inst).__name__}", "instance")
    return inst


def mes_fidelity(rho: DenseOperator) -> float:
    """``<Phi| rho |Phi>`` for a state on ``(R, R')``."""
    d = rho.layout.dim_of("R")
    phi = np.asarray(max_entangled(d, ("R", "R'")).amplitudes)
    m = np.asarray(reorder(rho, ["R", "R'"]).matrix)
    return float(np.vdot(phi, m @ phi).real)


def _phi_rr(d: int) -> DenseOperator:
    return density(max_entangled(d, ("R", "R'")))


@dataclass(frozen=True, eq=False)
class DecoderRun:
    kind: str
    t: int | None
    delta: float | None
    epsilon: float
    output: DenseOperator = field(repr=False)
    recovery_error: float
    bound: float
    beta: float | None = None
    delta_used: float | None = None
    phase_residual: float | None = None
    oracle_gap: float | None = None
    trace_before_normalization: float | None = None
    fingerprint: str = ""
    phase_cache_key: str | None = None

    @property
    def margin(self) -> float:
        return self.bound - self.recovery_error

    @property
    def fidelity(self) -> float:
        return mes_fidelity(self.output)

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "t": self.t,
            "delta": self.delta,
            "delta_used": self.delta_used,
            "beta": self.beta,
            "epsilon": self.epsilon,
            "recovery_error": self.recovery_error,
            "bound": self.bound,
            "margin": self.margin,
            "fidelity": self.fidelity,
            "phase_residual": self.phase_residual,
            "oracle_gap": self.oracle_gap,
            "trace_before_normalization": self.trace_before_normalization,
            "dilation_fingerprint": self.fingerprint,
            "phase_cache_key": self.phase_cache_key,
        }
        return {k: v for k, v in out.items() if v is not None}


def choose_t(inst: ProtocolInstance, delta: float, kind: str, cap: int | None = None):
    """Gap ``beta`` and sign polynomial for one decoder kind.

    ``beta = sqrt(d_B lambda_min / d_D)`` for gyk and
    ``beta = sqrt(d_A lambda_min / d_E)`` for petzlike; both equal the
    square root of the smallest non-zero ``q`` of the respective projector
    pair.
    """
    inst = _check_instance(inst)
    lam = inst.omega.lambda_min
    if kind == "gyk":
        beta = math.sqrt(inst.d_b * lam / inst.d_d)
    elif kind == "petzlike":
        beta = math.sqrt(inst.d_a * lam / inst.d_e)
    else:
        raise ValidationError(f"unknown decoder kind {kind!r}", "kind")
    beta = min(beta, 1.0)
    return beta, make_sign_poly(beta, delta, cap)


def _kraus_to_rprime(prob: DecodingProblem, x_branches) -> KrausChannel:
    """Minimal Kraus channel ``(D, B') -> R'`` from the branches of ``G P1``."""
    space = prob.space
    d_a = prob.inst.d_a
    in_dim = prob.p1.shape[1]
    pos = space.index("R'")
    choi = np.zeros((in_dim * d_a, in_dim * d_a), dtype=complex)
    for x in x_branches:
        t = np.moveaxis(x.reshape(space.dims + (in_dim,)), pos, 0).reshape(d_a, -1, in_dim)
        # vec index (i, o) for Kraus K_j[o, i] = t[o, j, i]
        vecs = t.transpose(1, 2, 0).reshape(-1, in_dim * d_a)
        choi += vecs.T @ vecs.conj()
    ops = kraus_from_choi(choi, in_dim, d_a)
    return KrausChannel(prob.input_layout, SystemLayout.of(("R'", d_a)), ops)


def _reduce_rr(prob: DecodingProblem, x: np.ndarray) -> DenseOperator:
    """``tr_{E, S minus R'}`` of ``(I_{RE} (x) x)|omega>`` for an operator ``x`` from ``(D, B')`` to ``S``."""
    inst = prob.inst
    om = np.asarray(inst.omega.pure.amplitudes).reshape(inst.d_a, inst.d_e, -1)
    state = om @ x.T  # (R, E, S)
    t = state.reshape((inst.d_a, inst.d_e) + prob.space.dims)
    t = np.moveaxis(t, 2 + prob.space.index("R'"), 1).reshape(inst.d_a, inst.d_a, -1)
    rho = np.einsum("ask,btk->asbt", t, t.conj()).reshape(inst.d_a**2, inst.d_a**2)
    layout = SystemLayout.of(("R", inst.d_a), ("R'", inst.d_a))
    return DenseOperator(rho, layout)


class _AmplifiedDecoder(BaseEstimator):
    kind = ""

    def __init__(self, delta=1e-3, cap=None, check_bound=True, check_oracle=True):
        self.delta = delta
        self.cap = cap
        self.check_bound = check_bound
        self.check_oracle = check_oracle

    def fit(self, X, y=None):
        """Build the decoding channel for instance ``X``."""
        inst = _check_instance(X)
        delta = check_unit_interval(self.delta, "delta", open_left=True)
        beta, _ = choose_t(inst, delta, self.kind, self.cap)
        poly, phases, relax = sign_phases(beta, delta, self.cap)
        prob = make_problem(inst, self.kind)
        x0, x1 = apply_G(phases, prob.p1, prob.p2, prob.p1)
        self.instance_ = inst
        self.problem_ = prob
        self.beta_ = beta
        self.poly_ = poly
        self.phases_ = phases
        self.t_ = phases.t
        self.delta_used_ = delta * relax
        self.channel_ = _kraus_to_rprime(prob, (x0, x1))
        self.epsilon_ = decoupling_epsilon(inst.omega)
        output = self.transform(inst.omega.rho_rdb)
        err = trace_distance(output, _phi_rr(inst.d_a))
        bound = math.sqrt(self.epsilon_) + math.sqrt(2 * self.delta_used_)
        gap = None
        if self.check_oracle:
            pi2x0 = prob.p2 @ (prob.p2.conj().T @ x0)
            orc = poly_oracle_lowrank(poly, prob.p1, prob.p2, prob.p1)
            gap = trace_distance(_reduce_rr(prob, pi2x0), _reduce_rr(prob, orc))
        self.run_ = DecoderRun(
            kind=self.kind,
            t=phases.t,
            delta=delta,
            epsilon=self.epsilon_,
            output=output,
            recovery_error=err,
            bound=bound,
            beta=beta,
            delta_used=self.delta_used_,
            phase_residual=phases.residual,
            oracle_gap=gap,
            fingerprint=inst.dilation.fingerprint,
            phase_cache_key=phase_cache_key(beta, delta),
        )
        tol = get_tolerances()
        if self.check_bound and err > bound + tol.bound_slack:
            raise InvariantViolation(f"{self.kind}: recovery error {err:.6g} exceeds bound {bound:.6g}")
        if self.check_oracle and gap > tol.bound_slack:
            raise InvariantViolation(f"{self.kind}: circuit and oracle differ by {gap:.3g}")
        return self

    def transform(self, X) -> DenseOperator:
        """Apply the decoder to a state containing ``D`` and ``B'``."""
        check_is_fitted(self, "channel_")
        if not isinstance(X, DenseOperator):
            raise ValidationError("expected a DenseOperator density matrix", "X")
        out = apply_channel(self.channel_, X)
        check_density(out, "decoder output", tol=get_tolerances().decoder_output)
        return out

    def recovery_error(self) -> float:
        check_is_fitted(self, "run_")
        return self.run_.recovery_error


class GYKDecoder(_AmplifiedDecoder):
    """Generalised Yoshida-Kitaev decoder.

    Parameters
    ----------
    delta : float
        Target accuracy of the sign polynomial.
    cap : int, optional
        Degree cap (defaults to the tolerance record).
    check_bound : bool
        Raise when the recovery error exceeds ``sqrt(eps) + sqrt(2 delta)``.
    check_oracle : bool
        Compare the amplified branch against the SVD oracle.

    Examples
    --------
    >>> from qsvt_decoders.channels import identity_channel
    >>> from qsvt_decoders.decoupling import make_instance
    >>> dec = GYKDecoder(delta=1e-3).fit(make_instance("identity", identity_channel(2), 2))
    >>> dec.recovery_error() < 0.0448
    True
    """

    kind = "gyk"


class PetzLikeDecoder(_AmplifiedDecoder):
    """Petz-like decoder; same parameters as :class:`GYKDecoder`."""

    kind = "petzlike"


class PetzRecovery(BaseEstimator):
    """Exact Petz recovery map with respect to the maximally mixed reference.

    Parameters
    ----------
    check_bound : bool
        Raise when the recovery error exceeds ``2 eps^(1/4)``.
    """

    def __init__(self, check_bound=True):
        self.check_bound = check_bound

    def fit(self, X, y=None):
        inst = _check_instance(X)
        d_a, d_b, d_e, d_d = inst.d_a, inst.d_b, inst.d_e, inst.d_d
        vt = inst.v.reshape(d_e, d_d, d_a, d_b)
        # K_e[(d, b'), a] = V[(e, d), (a, b')] / sqrt(d_B)
        kraus_g = vt.transpose(0, 1, 3, 2).reshape(d_e, d_d * d_b, d_a) / math.sqrt(d_b)
        inv_sqrt = herm_inv_sqrt(inst.omega.rho_db.matrix)
        ops = [k.conj().T @ inv_sqrt / math.sqrt(d_a) for k in kraus_g]
        self.instance_ = inst
        self.forward_kraus_ = kraus_g
        self.channel_ = KrausChannel(
            SystemLayout.of(("D", d_d), ("B'", d_b)), SystemLayout.of(("R'", d_a)), ops, check=False
        )
        self.epsilon_ = decoupling_epsilon(inst.omega)
        raw = apply_channel(self.channel_, inst.omega.rho_rdb)
        tr = float(raw.trace().real)
        output = raw * (1.0 / tr)
        err = trace_distance(output, _phi_rr(d_a))
        bound = 2.0 * self.epsilon_**0.25
        self.run_ = DecoderRun(
            kind="petz_exact",
            t=None,
            delta=None,
            epsilon=self.epsilon_,
            output=output,
            recovery_error=err,
            bound=bound,
            trace_before_normalization=tr,
            fingerprint=inst.dilation.fingerprint,
        )
        if self.check_bound and err > bound + get_tolerances().bound_slack:
            raise InvariantViolation(f"petz_exact: recovery error {err:.6g} exceeds bound {bound:.6g}")
        return self

    def transform(self, X, normalize: bool = True) -> DenseOperator:
        check_is_fitted(self, "channel_")
        out = apply_channel(self.channel_, X)
        if normalize:
            tr = out.trace().real
            if tr <= 0:
                raise ValidationError("input has no weight on the support of omega^{DB'}", "X")
            out = out * (1.0 / tr)
        return out

    def forward(self, rho_a: np.ndarray) -> np.ndarray:
        """``G(rho) = F(rho (x) Phi^{BB'})`` as a matrix on ``(D, B')``."""
        check_is_fitted(self, "forward_kraus_")
        return sum(k @ rho_a @ k.conj().T for k in self.forward_kraus_)

    def reference_fixed_point_error(self) -> float:
        """``|| P(G(pi)) - pi ||_max`` (unnormalised map)."""
        check_is_fitted(self, "channel_")
        d_a = self.instance_.d_a
        g = self.forward(np.eye(d_a) / d_a)
        layout = self.channel_.in_layout
        back = apply_channel(self.channel_, DenseOperator(g, layout))
        return float(np.abs(np.asarray(back.matrix) - np.eye(d_a) / d_a).max())

    def recovery_error(self) -> float:
        check_is_fitted(self, "run_")
        return self.run_.recovery_error


def decode_gyk(inst: ProtocolInstance, delta: float, **kwargs) -> DecoderRun:
    return GYKDecoder(delta=delta, **kwargs).fit(inst).run_


def decode_petzlike(inst: ProtocolInstance, delta: float, **kwargs) -> DecoderRun:
    return PetzLikeDecoder(delta=delta, **kwargs).fit(inst).run_


def petz_exact(inst: ProtocolInstance, **kwargs) -> DecoderRun:
    return PetzRecovery(**kwargs).fit(inst).run_


def barnum_knill_check(inst: ProtocolInstance, other: DecoderRun, petz: DecoderRun | None = None):
    """``F(petz) >= F(other)^2 - 1e-8``; returns ``(holds, margin)``."""
    if other.kind == "petz_exact":
        raise ValidationError("the comparison decoder must not be the Petz map itself", "other")
    petz = petz or petz_exact(inst)
    margin = petz.fidelity - other.fidelity**2
    return margin >= -1e-8, float(margin)


def omega_targ(inst: ProtocolInstance) -> StateVector:
    """``sum_mu sqrt(lambda_mu) |eta_mu>^{RE} |eta_mu^*>^{R'E'}`` over ``(R, E, E', R')``.

    ``lambda_mu, eta_mu`` is the non-zero spectrum of ``omega^{RE}``, which
    fixes the Jordan data of both projector pairs.
    """
    d_a, d_e = inst.d_a, inst.d_e
    w, v = np.linalg.eigh(np.asarray(inst.omega.rho_re.matrix))
    keep = w > get_tolerances().eig_cutoff
    amp = np.einsum("im,jm->ij", v[:, keep] * np.sqrt(w[keep]), v[:, keep].conj())
    # amp[(r, e), (r', e')] -> order (R, E, E', R')
    t = amp.reshape(d_a, d_e, d_a, d_e).transpose(0, 1, 3, 2)
    layout = SystemLayout.of(("R", d_a), ("E", d_e), ("E'", d_e), ("R'", d_a))
    return StateVector(layout, t.reshape(-1))


def targ_check(inst: ProtocolInstance) -> tuple[float, float]:
    """``(1/2 || omega_targ^{RR'} - Phi ||_1, sqrt(eps))``."""
    targ = omega_targ(inst)
    rr = reduced_density(targ, ["R", "R'"])
    return trace_distance(rr, _phi_rr(inst.d_a)), math.sqrt(decoupling_epsilon(inst.omega))
