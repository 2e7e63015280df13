"""Protocol instances, the global pure state omega and the decoupling error."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._config import get_tolerances
from .channels import (
    KrausChannel,
    StinespringDilation,
    haar_isometry,
    identity_isometry,
    minimal_dilation,
)
from .exceptions import InvariantViolation, ValidationError
from .tensor import (
    DenseOperator,
    StateVector,
    SystemLayout,
    collision_entropy,
    herm_min_eigenvalue,
    reduced_density,
)
from .validation import check_dim_cap, check_isometry, check_positive_int

__all__ = [
    "ProtocolInstance",
    "OmegaState",
    "EntropyReport",
    "make_instance",
    "build_omega",
    "decoupling_epsilon",
    "entropy_report",
]


@dataclass(frozen=True, eq=False)
class ProtocolInstance:
    """Encoder ``A B -> C``, noise ``C -> D`` and the composite dilation.

    Use :func:`make_instance` rather than calling the constructor directly.
    """

    encoder: DenseOperator = field(repr=False)
    noise: KrausChannel = field(repr=False)
    d_a: int
    d_b: int
    dilation: StinespringDilation = field(repr=False)
    name: str = ""
    spec: dict = field(default_factory=dict, compare=False, repr=False)
    qubit: bool = True

    @property
    def d_c(self) -> int:
        return self.encoder.out_layout.dim

    @property
    def d_d(self) -> int:
        return self.noise.d_out

    @property
    def d_e(self) -> int:
        return self.dilation.d_e

    @property
    def d_f(self) -> int:
        return self.dilation.d_f

    @property
    def dims(self) -> dict:
        return {"d_A": self.d_a, "d_B": self.d_b, "d_C": self.d_c, "d_D": self.d_d, "d_E": self.d_e, "d_F": self.d_f}

    @property
    def v(self) -> np.ndarray:
        """Composite isometry as a matrix with rows ``(e, d)`` and columns ``(a, b)``."""
        return np.asarray(self.dilation.v.matrix)

    @cached_property
    def omega(self) -> "OmegaState":
        return build_omega(self)

    def describe(self) -> dict:
        out = {"name": self.name, **self.dims, "rank_E": self.dilation.rank, "dilation": self.dilation.method,
               "dilation_fingerprint": self.dilation.fingerprint}
        if self.spec:
            out["spec"] = self.spec
        return out


def make_instance(encoder, noise: KrausChannel, d_a: int, d_b: int = 1, *, qubit: bool = True,
                  name: str = "", spec: dict | None = None) -> ProtocolInstance:
    """Bundle an encoder and a noise channel.

    Parameters
    ----------
    encoder : DenseOperator, ``"identity"`` or ``("haar", seed)``
        Isometry from ``A B`` to ``C``.  Given as a string or tuple the
        encoder is constructed here with ``d_C = noise.d_in``.
    noise : KrausChannel
        Channel from ``C`` to ``D``.
    d_a, d_b : int
        Message and shared-entanglement dimensions.
    qubit : bool
        Pad ``d_E`` to a power of two.
    """
    d_a = check_positive_int(d_a, "d_A")
    d_b = check_positive_int(d_b, "d_B")
    d_c = noise.d_in
    if d_a * d_b > d_c:
        raise ValidationError(f"d_A * d_B = {d_a * d_b} exceeds d_C = {d_c}", "d_B")
    in_l = SystemLayout.of(("A", d_a), ("B", d_b))
    c_l = SystemLayout.of(("C", d_c))
    if isinstance(encoder, str) and encoder == "identity":
        encoder = identity_isometry(d_a * d_b, d_c, in_l, c_l)
    elif isinstance(encoder, tuple) and encoder and encoder[0] == "haar":
        encoder = haar_isometry(d_a * d_b, d_c, encoder[1], in_l, c_l)
    elif isinstance(encoder, DenseOperator):
        if encoder.matrix.shape != (d_c, d_a * d_b):
            raise ValidationError(f"encoder shape {encoder.matrix.shape} != ({d_c}, {d_a * d_b})", "encoder")
        encoder = DenseOperator(encoder.matrix, c_l, in_l)
    else:
        raise ValidationError(f"unsupported encoder {encoder!r}", "encoder")
    check_isometry(encoder, "encoder")
    noise = noise.relabel(["C"], ["D"])
    composite = noise.compose(encoder)
    dil = minimal_dilation(composite, qubit=qubit)
    return ProtocolInstance(encoder, noise, d_a, d_b, dil, name=name, spec=dict(spec or {}), qubit=qubit)


@dataclass(frozen=True)
class EntropyReport:
    h2_re: float
    h2_e: float
    h2_db: float
    h2_rdb: float
    lambda_min: float

    def as_dict(self) -> dict:
        return {"H2_RE": self.h2_re, "H2_E": self.h2_e, "H2_DB'": self.h2_db, "H2_RDB'": self.h2_rdb,
                "lambda_min_RE": self.lambda_min}


@dataclass(frozen=True, eq=False)
class OmegaState:
    """Pure state over ``(R, E, D, B')`` with cached marginals."""

    pure: StateVector = field(repr=False)
    rho_re: DenseOperator = field(repr=False)
    rho_db: DenseOperator = field(repr=False)
    rho_e: DenseOperator = field(repr=False)
    rho_rdb: DenseOperator = field(repr=False)
    lambda_min: float

    @property
    def layout(self) -> SystemLayout:
        return self.pure.layout

    @property
    def d_a(self) -> int:
        return self.layout.dim_of("R")


def build_omega(inst: ProtocolInstance) -> OmegaState:
    """``|omega> = V_F (Phi^{AR} (x) Phi^{BB'})`` ordered as ``(R, E, D, B')``."""
    d_a, d_b, d_e, d_d = inst.d_a, inst.d_b, inst.d_e, inst.d_d
    total = d_a * d_e * d_d * d_b
    check_dim_cap(total, "dim(R E D B')")
    # V rows (e, d), cols (r, b') -> amplitude [r, e, d, b']
    t = inst.v.reshape(d_e, d_d, d_a, d_b).transpose(2, 0, 1, 3) / math.sqrt(d_a * d_b)
    layout = SystemLayout.of(("R", d_a), ("E", d_e), ("D", d_d), ("B'", d_b))
    psi = StateVector(layout, t.reshape(-1))
    rho_re = reduced_density(psi, ["R", "E"])
    rho_db = reduced_density(psi, ["D", "B'"])
    rho_e = reduced_density(psi, ["E"])
    rho_rdb = reduced_density(psi, ["R", "D", "B'"])
    lam = herm_min_eigenvalue(rho_re)
    lam_db = herm_min_eigenvalue(rho_db)
    if abs(lam - lam_db) > get_tolerances().identity_check:
        raise InvariantViolation(f"lambda_min(RE)={lam!r} differs from lambda_min(DB')={lam_db!r}")
    return OmegaState(psi, rho_re, rho_db, rho_e, rho_rdb, lam)


def _omega(obj) -> OmegaState:
    return obj.omega if isinstance(obj, ProtocolInstance) else obj


def decoupling_epsilon(omega, tau_mode: str = "marginal") -> float:
    """``|| omega^{RE} - pi^R (x) tau^E ||_1`` with ``tau^E = omega^E``."""
    if tau_mode != "marginal":
        raise ValidationError(f"unsupported tau_mode {tau_mode!r}", "tau_mode")
    om = _omega(omega)
    d_a = om.d_a
    target = np.kron(np.eye(d_a) / d_a, np.asarray(om.rho_e.matrix))
    diff = np.asarray(om.rho_re.matrix) - target
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(np.abs(w).sum())


def entropy_report(omega) -> EntropyReport:
    om = _omega(omega)
    rep = EntropyReport(
        h2_re=collision_entropy(om.rho_re),
        h2_e=collision_entropy(om.rho_e),
        h2_db=collision_entropy(om.rho_db),
        h2_rdb=collision_entropy(om.rho_rdb),
        lambda_min=om.lambda_min,
    )
    tol = get_tolerances().identity_check
    if abs(rep.h2_re - rep.h2_db) > tol or abs(rep.h2_rdb - rep.h2_e) > tol:
        raise InvariantViolation(
            f"purity complement failed: H2(RE)={rep.h2_re!r} H2(DB')={rep.h2_db!r} "
            f"H2(RDB')={rep.h2_rdb!r} H2(E)={rep.h2_e!r}"
        )
    return rep
