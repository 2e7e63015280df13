"""Kraus channels, Stinespring dilations and the standard noise models."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ._config import get_tolerances
from .exceptions import ValidationError
from .tensor import DenseOperator, SystemLayout, conjugate_by, _as_layout
from .validation import (
    check_isometry,
    check_positive_int,
    check_probability_vector,
    check_unit_interval,
)

__all__ = [
    "KrausChannel",
    "StinespringDilation",
    "apply_channel",
    "identity_channel",
    "pauli_noise",
    "amplitude_damping",
    "erasure_noise",
    "minimal_dilation",
    "complementary_channel",
    "haar_isometry",
    "identity_isometry",
    "choi_matrix",
    "kraus_from_choi",
    "PAULIS",
]

PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel ``rho -> sum_k K_k rho K_k^dagger``.

    Parameters
    ----------
    in_layout, out_layout : SystemLayout
    kraus : sequence of ndarray or DenseOperator
        Each of shape ``(out_layout.dim, in_layout.dim)``.
    check : bool
        Verify trace preservation on construction.
    """

    in_layout: SystemLayout
    out_layout: SystemLayout
    kraus: tuple = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        in_l, out_l = _as_layout(self.in_layout), _as_layout(self.out_layout)
        ops = []
        for k in self.kraus:
            m = k.matrix if isinstance(k, DenseOperator) else k
            ops.append(DenseOperator(m, out_l, in_l))
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator", "kraus")
        object.__setattr__(self, "in_layout", in_l)
        object.__setattr__(self, "out_layout", out_l)
        object.__setattr__(self, "kraus", tuple(ops))
        if self.check:
            err = self.trace_preservation_error()
            if err > get_tolerances().trace_preserving:
                raise ValidationError(f"channel is not trace preserving (error {err:.3g})", "kraus")

    @property
    def d_in(self) -> int:
        return self.in_layout.dim

    @property
    def d_out(self) -> int:
        return self.out_layout.dim

    def trace_preservation_error(self) -> float:
        s = sum(k.matrix.conj().T @ k.matrix for k in self.kraus)
        return float(np.abs(s - np.eye(self.d_in)).max())

    @cached_property
    def choi(self) -> np.ndarray:
        return choi_matrix(self)

    @property
    def rank(self) -> int:
        """Minimal number of Kraus operators (Choi rank above the cutoff)."""
        w = np.linalg.eigvalsh(self.choi)
        return int(np.count_nonzero(w > get_tolerances().eig_cutoff))

    @property
    def kappa(self) -> float:
        """``log2`` of the minimal Kraus count."""
        return math.log2(self.rank)

    def __call__(self, rho: DenseOperator) -> DenseOperator:
        return apply_channel(self, rho)

    def compose(self, inner: "KrausChannel | DenseOperator") -> "KrausChannel":
        """``self o inner``; ``inner`` may be an isometry given as a DenseOperator."""
        inner_ops = (inner,) if isinstance(inner, DenseOperator) else inner.kraus
        in_l = inner_ops[0].in_layout
        if inner_ops[0].out_layout.dims != self.in_layout.dims:
            raise ValidationError(
                f"cannot compose: inner output {inner_ops[0].out_layout} vs {self.in_layout}"
            )
        ops = [k.matrix @ j.matrix for k in self.kraus for j in inner_ops]
        return KrausChannel(in_l, self.out_layout, ops)

    def minimal(self) -> "KrausChannel":
        """Equivalent channel with the minimal (Choi-eigenbasis) Kraus family."""
        return KrausChannel(self.in_layout, self.out_layout, kraus_from_choi(self.choi, self.d_in, self.d_out))

    def relabel(self, in_labels: Sequence[str] | None = None, out_labels: Sequence[str] | None = None):
        in_l = self.in_layout if in_labels is None else SystemLayout(tuple(zip(in_labels, self.in_layout.dims)))
        out_l = self.out_layout if out_labels is None else SystemLayout(tuple(zip(out_labels, self.out_layout.dims)))
        return KrausChannel(in_l, out_l, [k.matrix for k in self.kraus], check=False)


def choi_matrix(ch: KrausChannel) -> np.ndarray:
    """``J = sum_ij |i><j| (x) N(|i><j|)`` with the input factor first."""
    vecs = np.array([k.matrix.T.reshape(-1) for k in ch.kraus])
    return vecs.T @ vecs.conj()


def kraus_from_choi(choi: np.ndarray, d_in: int, d_out: int, cutoff: float | None = None):
    """Minimal Kraus family from a Choi matrix, ordered by decreasing weight.

    Eigenvectors get a deterministic phase (largest-magnitude entry made
    real positive) so that repeated calls return identical operators.
    """
    cutoff = get_tolerances().eig_cutoff if cutoff is None else cutoff
    w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    order = np.argsort(-w, kind="stable")
    ops = []
    for idx in order:
        if w[idx] <= cutoff:
            break
        vec = v[:, idx]
        j = np.argmax(np.abs(vec) - 1e-9 * np.arange(vec.size))
        vec = vec * (abs(vec[j]) / vec[j])
        ops.append(np.sqrt(w[idx]) * vec.reshape(d_in, d_out).T)
    return ops


def apply_channel(ch: KrausChannel, rho: DenseOperator) -> DenseOperator:
    """Apply ``ch`` to the subsystems of ``rho`` named by ``ch.in_layout``."""
    for lab in ch.in_layout.labels:
        if lab not in rho.layout:
            raise ValidationError(f"input label {lab!r} not found in {rho.layout}", "rho")
    out = None
    for k in ch.kraus:
        term = conjugate_by(k, rho)
        out = term if out is None else out + term
    return out


def identity_channel(d: int = 2, in_label: str = "C", out_label: str = "D") -> KrausChannel:
    d = check_positive_int(d, "d")
    return KrausChannel(SystemLayout.of((in_label, d)), SystemLayout.of((out_label, d)), [np.eye(d)])


def _kron_power(ops: list[np.ndarray], n: int) -> list[np.ndarray]:
    out = [np.eye(1, dtype=complex)]
    for _ in range(n):
        out = [np.kron(a, b) for a in out for b in ops]
    return out


def pauli_noise(p, n: int = 1, in_label: str = "C", out_label: str = "D") -> KrausChannel:
    """Independent Pauli noise with single-qubit probabilities ``(p_I, p_X, p_Y, p_Z)``.

    Zero-probability terms are dropped, so the Kraus count is the minimal one.

    >>> pauli_noise([0.25] * 4, n=2).rank
    16
    """
    p = check_probability_vector(p, "p", length=4, tol=1e-9)
    n = check_positive_int(n, "n")
    single = [np.sqrt(pi) * s for pi, s in zip(p, PAULIS) if pi > 0]
    d = 2**n
    return KrausChannel(SystemLayout.of((in_label, d)), SystemLayout.of((out_label, d)), _kron_power(single, n))


def amplitude_damping(gamma: float, n: int = 1, in_label: str = "C", out_label: str = "D") -> KrausChannel:
    gamma = check_unit_interval(gamma, "gamma")
    n = check_positive_int(n, "n")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    d = 2**n
    return KrausChannel(SystemLayout.of((in_label, d)), SystemLayout.of((out_label, d)), _kron_power([k1, k0], n))


def erasure_noise(n_in: int, erased, in_label: str = "C", out_label: str = "D") -> KrausChannel:
    """Trace out a fixed, known set of qubits (qubit 0 is the most significant)."""
    n_in = check_positive_int(n_in, "n_in")
    erased = sorted({int(i) for i in erased})
    for i in erased:
        if not 0 <= i < n_in:
            raise ValidationError(f"qubit index {i} out of range for {n_in} qubits", "erased")
    kept = [i for i in range(n_in) if i not in erased]
    d_in, d_out = 2**n_in, 2 ** len(kept)
    bits = (np.arange(d_in)[:, None] >> (n_in - 1 - np.arange(n_in))[None, :]) & 1
    weights = lambda cols: (bits[:, cols] * (1 << np.arange(len(cols))[::-1])).sum(axis=1)  # noqa: E731
    kept_idx = weights(kept)
    erased_idx = weights(erased)
    ops = []
    for b in range(2 ** len(erased)):
        k = np.zeros((d_out, d_in), dtype=complex)
        cols = np.flatnonzero(erased_idx == b)
        k[kept_idx[cols], cols] = 1.0
        ops.append(k)
    return KrausChannel(SystemLayout.of((in_label, d_in)), SystemLayout.of((out_label, d_out)), ops)


def haar_isometry(d_in: int, d_out: int, seed: int, in_layout=None, out_layout=None) -> DenseOperator:
    """Haar-random isometry from a phase-fixed QR decomposition."""
    d_in = check_positive_int(d_in, "d_in")
    d_out = check_positive_int(d_out, "d_out")
    if d_out < d_in:
        raise ValidationError(f"need d_out >= d_in, got {d_out} < {d_in}", "d_out")
    if seed is None:
        raise ValidationError("a seed is required for a Haar-random encoder", "seed")
    rng = np.random.default_rng(int(seed))
    z = (rng.standard_normal((d_out, d_in)) + 1j * rng.standard_normal((d_out, d_in))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    in_layout = SystemLayout.of(("A", d_in)) if in_layout is None else _as_layout(in_layout)
    out_layout = SystemLayout.of(("C", d_out)) if out_layout is None else _as_layout(out_layout)
    return DenseOperator(q, out_layout, in_layout)


def identity_isometry(d_in: int, d_out: int, in_layout=None, out_layout=None) -> DenseOperator:
    """Embed into the first ``d_in`` basis states (input in the low-order qubits)."""
    if d_out < d_in:
        raise ValidationError(f"need d_out >= d_in, got {d_out} < {d_in}", "d_out")
    in_layout = SystemLayout.of(("A", d_in)) if in_layout is None else _as_layout(in_layout)
    out_layout = SystemLayout.of(("C", d_out)) if out_layout is None else _as_layout(out_layout)
    return DenseOperator(np.eye(d_out, d_in), out_layout, in_layout)


# --------------------------------------------------------------------------
# dilations


@dataclass(frozen=True, eq=False)
class StinespringDilation:
    """Unitary ``U_F`` on ``L = in (x) F = E (x) D`` with ``V = U_F |0>^F``.

    Attributes
    ----------
    u : DenseOperator
        Input layout ``in_layout + (F,)``, output layout ``(E, D)``.
    v : DenseOperator
        The isometry ``in -> E (x) D``.
    rank : int
        Minimal Kraus count before any padding of ``E``.
    """

    u: DenseOperator = field(repr=False)
    v: DenseOperator = field(repr=False)
    rank: int
    d_e: int
    d_f: int
    in_layout: SystemLayout
    e_label: str = "E"
    d_label: str = "D"
    f_label: str = "F"
    method: str = "choi-eigenbasis"

    @property
    def d_d(self) -> int:
        return self.v.out_layout.dim_of(self.d_label)

    @property
    def kappa(self) -> float:
        return math.log2(self.rank)

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 of ``U_F`` entries rounded to 10 decimals."""
        m = np.round(np.asarray(self.u.matrix), 10) + (0.0 + 0.0j)
        h = hashlib.sha256()
        h.update(repr(self.u.matrix.shape).encode())
        h.update(np.ascontiguousarray(m).tobytes())
        return h.hexdigest()[:16]

    def channel(self) -> KrausChannel:
        """``tr_E[V . V^dagger]`` as a Kraus family."""
        d_e, d_d = self.d_e, self.d_d
        vm = np.asarray(self.v.matrix).reshape(d_e, d_d, -1)
        out = SystemLayout.of((self.d_label, d_d))
        return KrausChannel(self.in_layout, out, [vm[e] for e in range(d_e)])


def _pad_environment(rank: int, d_in: int, d_out: int, qubit: bool) -> int:
    d_e = rank
    if qubit:
        d_e = 1 << (rank - 1).bit_length()
    step = d_in // math.gcd(d_in, d_out)
    if d_e % step:
        d_e = step * (-(-d_e // step))
    return d_e


def minimal_dilation(ch: KrausChannel, qubit: bool = False, *, e_label="E", f_label="F", d_label="D") -> StinespringDilation:
    """Stinespring unitary built from the Choi-eigenbasis Kraus family.

    ``d_E`` equals the Choi rank, padded with zero Kraus operators when
    ``qubit`` is set (next power of two) or when ``d_E d_D`` would not be a
    multiple of ``d_in``.  The completion of ``V`` to ``U_F`` uses a complete
    Householder QR of ``V``; the resulting complement basis is deterministic.
    """
    err = ch.trace_preservation_error()
    if err > get_tolerances().trace_preserving:
        raise ValidationError(f"channel is not trace preserving (error {err:.3g})", "channel")
    d_in, d_out = ch.d_in, ch.d_out
    ops = kraus_from_choi(ch.choi, d_in, d_out)
    rank = len(ops)
    d_e = _pad_environment(rank, d_in, d_out, qubit)
    ops = ops + [np.zeros((d_out, d_in), dtype=complex)] * (d_e - rank)
    v = np.concatenate(ops, axis=0)  # row index e * d_out + o
    check_isometry(v, "V", tol=get_tolerances().trace_preserving)
    n = d_e * d_out
    d_f = n // d_in
    q, _ = np.linalg.qr(v, mode="complete")
    comp = q[:, d_in:]
    u = np.empty((n, n), dtype=complex)
    cols = np.arange(n).reshape(d_in, d_f)
    u[:, cols[:, 0]] = v
    u[:, cols[:, 1:].reshape(-1)] = comp
    el = SystemLayout.of((e_label, d_e), (d_label, d_out))
    in_l = ch.in_layout
    return StinespringDilation(
        u=DenseOperator(u, el, in_l + SystemLayout.of((f_label, d_f))),
        v=DenseOperator(v, el, in_l),
        rank=rank,
        d_e=d_e,
        d_f=d_f,
        in_layout=in_l,
        e_label=e_label,
        d_label=d_label,
        f_label=f_label,
    )


def rotate_environment(dil: StinespringDilation, w: np.ndarray) -> StinespringDilation:
    """Dilation with ``V`` replaced by ``(W (x) I_D) V`` for a unitary ``W`` on ``E``."""
    d_d = dil.d_d
    rot = np.kron(np.asarray(w), np.eye(d_d))
    u = rot @ np.asarray(dil.u.matrix)
    v = rot @ np.asarray(dil.v.matrix)
    return StinespringDilation(
        u=DenseOperator(u, dil.u.out_layout, dil.u.in_layout),
        v=DenseOperator(v, dil.v.out_layout, dil.v.in_layout),
        rank=dil.rank,
        d_e=dil.d_e,
        d_f=dil.d_f,
        in_layout=dil.in_layout,
        e_label=dil.e_label,
        d_label=dil.d_label,
        f_label=dil.f_label,
        method=dil.method + "+rotated",
    )


__all__.append("rotate_environment")


def complementary_channel(dil: StinespringDilation) -> KrausChannel:
    """``tr_D[V . V^dagger]``: the channel to the environment."""
    d_e, d_d = dil.d_e, dil.d_d
    vm = np.asarray(dil.v.matrix).reshape(d_e, d_d, -1)
    out = SystemLayout.of((dil.e_label, d_e))
    return KrausChannel(dil.in_layout, out, [vm[:, d, :] for d in range(d_d)])


def tensor_channels(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    ops = [np.kron(x.matrix, y.matrix) for x in a.kraus for y in b.kraus]
    return KrausChannel(a.in_layout + b.in_layout, a.out_layout + b.out_layout, ops)


__all__.append("tensor_channels")
