"""Dense linear algebra over labeled multipartite systems.

Index convention: the leftmost subsystem varies slowest, so the basis state
``|i>|j>`` over dims ``(d_i, d_j)`` sits at index ``i * d_j + j``.  Every
reshape in the package goes through :class:`SystemLayout`; nothing else
computes composite indices by hand.

Conjugation and transposition are always taken in the computational basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._config import get_tolerances
from .exceptions import LayoutError, ValidationError

__all__ = [
    "SystemLayout",
    "StateVector",
    "DenseOperator",
    "tensor_product",
    "partial_trace",
    "reorder",
    "relabel",
    "apply_operator",
    "conjugate_by",
    "embed",
    "contract",
    "max_entangled",
    "density",
    "maximally_mixed",
    "basis_state",
    "trace_distance",
    "fidelity",
    "collision_entropy",
    "schmidt",
    "herm_sqrt",
    "herm_inv_sqrt",
    "herm_min_eigenvalue",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemLayout:
    """Ordered list of labeled subsystems with dimensions."""

    subsystems: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        subs = tuple((str(label), int(dim)) for label, dim in self.subsystems)
        seen = set()
        for label, dim in subs:
            if label in seen:
                raise LayoutError(f"duplicate subsystem label {label!r}")
            if dim < 1:
                raise LayoutError(f"subsystem {label!r} has non-positive dimension {dim}")
            seen.add(label)
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "SystemLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def __len__(self):
        return len(self.subsystems)

    def __contains__(self, label):
        return label in self.labels

    def __add__(self, other: "SystemLayout") -> "SystemLayout":
        return SystemLayout(self.subsystems + other.subsystems)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}; layout has {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.subsystems[self.index(label)][1]

    def select(self, labels: Iterable[str]) -> "SystemLayout":
        """Sub-layout in the order given by ``labels``."""
        return SystemLayout(tuple((label, self.dim_of(label)) for label in labels))

    def without(self, labels: Iterable[str]) -> "SystemLayout":
        drop = set(labels)
        for label in drop:
            self.index(label)
        return SystemLayout(tuple(s for s in self.subsystems if s[0] not in drop))

    def relabel(self, mapping: dict[str, str]) -> "SystemLayout":
        for label in mapping:
            self.index(label)
        return SystemLayout(tuple((mapping.get(lab, lab), d) for lab, d in self.subsystems))

    def flat_index(self, digits: Sequence[int]) -> int:
        """Composite index of a product basis state (leftmost slowest)."""
        return int(np.ravel_multi_index(tuple(digits), self.dims)) if self.subsystems else 0

    def __str__(self):
        return "(" + ", ".join(f"{lab}:{d}" for lab, d in self.subsystems) + ")"


def _as_layout(layout) -> SystemLayout:
    if isinstance(layout, SystemLayout):
        return layout
    return SystemLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class StateVector:
    layout: SystemLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        layout = _as_layout(self.layout)
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.shape[0] != layout.dim:
            raise ValidationError(
                f"amplitude vector of length {amps.shape[0]} does not match layout {layout} "
                f"(dimension {layout.dim})"
            )
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float | None = None) -> bool:
        tol = get_tolerances().state_norm if tol is None else tol
        return abs(self.norm - 1.0) <= tol

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValidationError("cannot normalise the zero vector")
        return StateVector(self.layout, self.amplitudes / n)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def conj(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.conj())

    def vdot(self, other: "StateVector") -> complex:
        other = reorder(other, self.layout.labels)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def projector(self) -> "DenseOperator":
        return density(self)

    def __add__(self, other: "StateVector") -> "StateVector":
        other = reorder(other, self.layout.labels)
        return StateVector(self.layout, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        other = reorder(other, self.layout.labels)
        return StateVector(self.layout, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.layout, self.amplitudes * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Complex matrix from ``in_layout`` to ``out_layout`` (shape out x in)."""

    matrix: np.ndarray = field(repr=False)
    out_layout: SystemLayout
    in_layout: SystemLayout | None = None

    def __post_init__(self):
        out_layout = _as_layout(self.out_layout)
        in_layout = out_layout if self.in_layout is None else _as_layout(self.in_layout)
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape != (out_layout.dim, in_layout.dim):
            raise ValidationError(
                f"matrix of shape {m.shape} does not match layouts out={out_layout} in={in_layout}"
            )
        object.__setattr__(self, "out_layout", out_layout)
        object.__setattr__(self, "in_layout", in_layout)
        object.__setattr__(self, "matrix", m)

    @property
    def layout(self) -> SystemLayout:
        """Layout of a square operator (same labels in and out)."""
        if self.in_layout.labels != self.out_layout.labels:
            raise LayoutError(f"operator is not square: out={self.out_layout} in={self.in_layout}")
        return self.out_layout

    @property
    def is_square(self) -> bool:
        return self.in_layout.subsystems == self.out_layout.subsystems

    @property
    def dagger(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj().T, self.in_layout, self.out_layout)

    def conj(self) -> "DenseOperator":
        return DenseOperator(self.matrix.conj(), self.out_layout, self.in_layout)

    def transpose(self) -> "DenseOperator":
        return DenseOperator(self.matrix.T, self.in_layout, self.out_layout)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def __matmul__(self, other: "DenseOperator") -> "DenseOperator":
        if self.in_layout.labels != other.out_layout.labels:
            raise LayoutError(
                f"cannot compose: left input {self.in_layout} vs right output {other.out_layout}"
            )
        return DenseOperator(self.matrix @ other.matrix, self.out_layout, other.in_layout)

    def __add__(self, other: "DenseOperator") -> "DenseOperator":
        other = reorder(other, self.out_layout.labels, self.in_layout.labels)
        return DenseOperator(self.matrix + other.matrix, self.out_layout, self.in_layout)

    def __sub__(self, other: "DenseOperator") -> "DenseOperator":
        other = reorder(other, self.out_layout.labels, self.in_layout.labels)
        return DenseOperator(self.matrix - other.matrix, self.out_layout, self.in_layout)

    def __mul__(self, scalar) -> "DenseOperator":
        return DenseOperator(self.matrix * scalar, self.out_layout, self.in_layout)

    __rmul__ = __mul__

    @classmethod
    def identity(cls, layout) -> "DenseOperator":
        layout = _as_layout(layout)
        return cls(np.eye(layout.dim), layout, layout)


# --------------------------------------------------------------------------
# structural operations


def tensor_product(a, b):
    """Kronecker product; ``a``'s subsystems come first."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(a.layout + b.layout, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DenseOperator) and isinstance(b, DenseOperator):
        return DenseOperator(
            np.kron(a.matrix, b.matrix), a.out_layout + b.out_layout, a.in_layout + b.in_layout
        )
    raise ValidationError("tensor_product needs two StateVectors or two DenseOperators")


def _perm(layout: SystemLayout, labels: Sequence[str]) -> list[int]:
    labels = list(labels)
    if sorted(labels) != sorted(layout.labels):
        raise LayoutError(f"reorder labels {labels} are not a permutation of {layout.labels}")
    return [layout.index(lab) for lab in labels]


def reorder(obj, labels: Sequence[str], in_labels: Sequence[str] | None = None):
    """Permute subsystems into the order ``labels``.

    For a square operator ``in_labels`` defaults to ``labels``.
    """
    if isinstance(obj, StateVector):
        if tuple(labels) == obj.layout.labels:
            return obj
        p = _perm(obj.layout, labels)
        t = np.transpose(obj.tensor(), p)
        return StateVector(obj.layout.select(labels), t.reshape(-1))
    if isinstance(obj, DenseOperator):
        if in_labels is None:
            in_labels = labels if obj.is_square else obj.in_layout.labels
        if tuple(labels) == obj.out_layout.labels and tuple(in_labels) == obj.in_layout.labels:
            return obj
        po = _perm(obj.out_layout, labels)
        pi = _perm(obj.in_layout, in_labels)
        t = obj.matrix.reshape(obj.out_layout.dims + obj.in_layout.dims)
        n = len(obj.out_layout)
        t = np.transpose(t, po + [n + i for i in pi])
        out_l = obj.out_layout.select(labels)
        in_l = obj.in_layout.select(in_labels)
        return DenseOperator(t.reshape(out_l.dim, in_l.dim), out_l, in_l)
    raise ValidationError("reorder expects a StateVector or DenseOperator")


def relabel(obj, mapping: dict[str, str], in_mapping: dict[str, str] | None = None):
    """Rename subsystems without touching amplitudes."""
    if isinstance(obj, StateVector):
        return StateVector(obj.layout.relabel(mapping), obj.amplitudes)
    if isinstance(obj, DenseOperator):
        if in_mapping is None:
            in_mapping = {k: v for k, v in mapping.items() if k in obj.in_layout}
        out_map = {k: v for k, v in mapping.items() if k in obj.out_layout}
        return DenseOperator(
            obj.matrix, obj.out_layout.relabel(out_map), obj.in_layout.relabel(in_mapping)
        )
    raise ValidationError("relabel expects a StateVector or DenseOperator")


def _apply_rows(op: DenseOperator, arr: np.ndarray, layout: SystemLayout):
    """Apply ``op`` to the leading index of ``arr`` (shape (layout.dim, k)).

    The op's output subsystems take the position of its first input
    subsystem, or are appended when the op has no inputs.
    """
    in_labels = op.in_layout.labels
    for lab in in_labels:
        if layout.dim_of(lab) != op.in_layout.dim_of(lab):
            raise LayoutError(f"dimension mismatch on {lab!r}")
    rest = layout.without(in_labels)
    clash = set(rest.labels) & set(op.out_layout.labels)
    if clash:
        raise LayoutError(f"output labels {sorted(clash)} already present in {layout}")
    k = arr.shape[1]
    t = arr.reshape(layout.dims + (k,))
    src = [layout.index(lab) for lab in in_labels]
    t = np.moveaxis(t, src, list(range(len(src))))
    t = t.reshape(op.in_layout.dim, rest.dim * k)
    t = op.matrix @ t
    if in_labels:
        pos = min(src)
        pos = sum(1 for lab in layout.labels[:pos] if lab not in in_labels)
    else:
        pos = len(rest)
    new_layout = SystemLayout(
        rest.subsystems[:pos] + op.out_layout.subsystems + rest.subsystems[pos:]
    )
    t = t.reshape(op.out_layout.dims + rest.dims + (k,))
    n_out = len(op.out_layout)
    order = list(range(n_out, n_out + pos)) + list(range(n_out)) + list(
        range(n_out + pos, n_out + len(rest) + 1)
    )
    t = np.transpose(t, order)
    return t.reshape(new_layout.dim, k), new_layout


def apply_operator(op: DenseOperator, psi: StateVector) -> StateVector:
    """Apply ``op`` to the subsystems of ``psi`` named by ``op.in_layout``."""
    arr, layout = _apply_rows(op, psi.amplitudes.reshape(-1, 1), psi.layout)
    return StateVector(layout, arr.reshape(-1))


def contract(bra: StateVector, psi: StateVector) -> StateVector:
    """Partial inner product ``<bra| psi>`` over bra's subsystems."""
    op = DenseOperator(bra.amplitudes.conj().reshape(1, -1), SystemLayout(), bra.layout)
    return apply_operator(op, psi)


def conjugate_by(op: DenseOperator, rho: DenseOperator) -> DenseOperator:
    """``op rho op^dagger`` with ``op`` acting on a subset of ``rho``'s subsystems."""
    layout = rho.layout
    arr, new_layout = _apply_rows(op, np.asarray(rho.matrix), layout)
    arr2, _ = _apply_rows(op, arr.conj().T.copy(), layout)
    return DenseOperator(arr2.conj().T, new_layout, new_layout)


def embed(op: DenseOperator, layout: SystemLayout) -> DenseOperator:
    """Full operator on ``layout`` that acts as ``op`` on its labels and identity elsewhere."""
    if not op.is_square and op.in_layout.labels != op.out_layout.labels:
        raise LayoutError("embed needs an operator with identical input and output labels")
    op = reorder(op, op.in_layout.labels, op.in_layout.labels)
    arr, new_layout = _apply_rows(op, np.eye(layout.dim, dtype=complex), layout)
    return reorder(DenseOperator(arr, new_layout, layout), layout.labels, layout.labels)


def partial_trace(rho: DenseOperator, drop: Iterable[str]) -> DenseOperator:
    """Trace out the subsystems in ``drop``; remaining order is preserved."""
    layout = rho.layout
    drop = list(dict.fromkeys(drop))
    for lab in drop:
        layout.index(lab)
    keep = [lab for lab in layout.labels if lab not in drop]
    n = len(layout)
    t = np.asarray(rho.matrix).reshape(layout.dims + layout.dims)
    letters = [chr(ord("a") + i) for i in range(n)]
    upper = [chr(ord("A") + i) if layout.labels[i] not in drop else letters[i] for i in range(n)]
    sub_in = "".join(letters) + "".join(upper)
    sub_out = "".join(letters[i] for i in range(n) if layout.labels[i] in keep) + "".join(
        upper[i] for i in range(n) if layout.labels[i] in keep
    )
    red = np.einsum(f"{sub_in}->{sub_out}", t)
    out = layout.select(keep)
    return DenseOperator(red.reshape(out.dim, out.dim), out, out)


def reduced_density(psi: StateVector, keep: Sequence[str]) -> DenseOperator:
    """Marginal of a pure state on ``keep`` (in that order), via a matrix product."""
    keep = list(keep)
    rest = [lab for lab in psi.layout.labels if lab not in keep]
    t = reorder(psi, keep + rest)
    kl = psi.layout.select(keep)
    m = t.amplitudes.reshape(kl.dim, -1)
    return DenseOperator(m @ m.conj().T, kl, kl)


__all__.append("reduced_density")


# --------------------------------------------------------------------------
# standard states


def max_entangled(d: int, labels: tuple[str, str] = ("A", "A'")) -> StateVector:
    """``(1/sqrt d) sum_i |i>|i>`` in the computational basis.

    >>> max_entangled(2).amplitudes.real.round(4).tolist()
    [0.7071, 0.0, 0.0, 0.7071]
    """
    d = int(d)
    if d < 1:
        raise ValidationError(f"dimension must be a positive integer, got {d}")
    amps = np.zeros(d * d, dtype=complex)
    amps[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return StateVector(SystemLayout.of((labels[0], d), (labels[1], d)), amps)


def basis_state(layout, *digits: int) -> StateVector:
    layout = _as_layout(layout)
    amps = np.zeros(layout.dim, dtype=complex)
    amps[layout.flat_index(digits)] = 1.0
    return StateVector(layout, amps)


def density(psi: StateVector) -> DenseOperator:
    a = psi.amplitudes
    return DenseOperator(np.outer(a, a.conj()), psi.layout, psi.layout)


def maximally_mixed(layout) -> DenseOperator:
    layout = _as_layout(layout)
    return DenseOperator(np.eye(layout.dim) / layout.dim, layout, layout)


# --------------------------------------------------------------------------
# Hermitian matrix functions


def _eigh(m: np.ndarray):
    h = 0.5 * (m + m.conj().T)
    return np.linalg.eigh(h)


def herm_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = _eigh(np.asarray(m))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def herm_inv_sqrt(m: np.ndarray, cutoff: float | None = None) -> np.ndarray:
    """Pseudo-inverse square root; eigenvalues at or below ``cutoff`` map to zero."""
    cutoff = get_tolerances().eig_cutoff if cutoff is None else cutoff
    w, v = _eigh(np.asarray(m))
    inv = np.zeros_like(w)
    mask = w > cutoff
    inv[mask] = 1.0 / np.sqrt(w[mask])
    return (v * inv) @ v.conj().T


def herm_min_eigenvalue(m, cutoff: float | None = None) -> float:
    """Smallest eigenvalue above ``cutoff`` (the non-zero minimum)."""
    cutoff = get_tolerances().eig_cutoff if cutoff is None else cutoff
    mat = m.matrix if isinstance(m, DenseOperator) else np.asarray(m)
    w = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    w = w[w > cutoff]
    if w.size == 0:
        raise ValidationError("operator has no eigenvalue above the cutoff")
    return float(w.min())


# --------------------------------------------------------------------------
# distances and entropies


def _same_layout(rho: DenseOperator, sigma: DenseOperator) -> DenseOperator:
    if sorted(rho.layout.labels) != sorted(sigma.layout.labels):
        raise ValidationError(f"layout mismatch: {rho.layout} vs {sigma.layout}")
    sigma = reorder(sigma, rho.layout.labels)
    if sigma.layout.dims != rho.layout.dims:
        raise ValidationError(f"shape mismatch: {rho.layout} vs {sigma.layout}")
    return sigma


def trace_distance(rho: DenseOperator, sigma: DenseOperator) -> float:
    """Half the trace norm of ``rho - sigma`` (Hermitian inputs)."""
    sigma = _same_layout(rho, sigma)
    diff = np.asarray(rho.matrix) - np.asarray(sigma.matrix)
    w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.abs(w).sum())


def fidelity(rho: DenseOperator, sigma: DenseOperator) -> float:
    """``|| sqrt(rho) sqrt(sigma) ||_1 ** 2``."""
    from .validation import check_density

    sigma = _same_layout(rho, sigma)
    check_density(rho, name="rho")
    check_density(sigma, name="sigma")
    sr = herm_sqrt(rho.matrix)
    ss = herm_sqrt(sigma.matrix)
    s = np.linalg.svd(sr @ ss, compute_uv=False)
    return float(min(1.0, s.sum() ** 2))


def collision_entropy(rho: DenseOperator) -> float:
    """Renyi-2 entropy ``-log2 tr(rho^2)``.

    >>> collision_entropy(maximally_mixed([("A", 4)]))
    2.0
    """
    m = np.asarray(rho.matrix)
    purity = float(np.real(np.vdot(m.conj().T, m)))
    return float(-np.log2(purity))


def schmidt(psi: StateVector, left: Iterable[str], cutoff: float | None = None):
    """Schmidt decomposition across ``left`` | rest.

    Returns a list of ``(coefficient, left_vector, right_vector)`` with
    nonincreasing coefficients above ``cutoff``.
    """
    cutoff = get_tolerances().eig_cutoff if cutoff is None else cutoff
    left = list(left)
    for lab in left:
        psi.layout.index(lab)
    right = [lab for lab in psi.layout.labels if lab not in left]
    if not left or not right:
        raise ValidationError("Schmidt bipartition must split the layout into two nonempty parts")
    ll, rl = psi.layout.select(left), psi.layout.select(right)
    m = reorder(psi, left + right).amplitudes.reshape(ll.dim, rl.dim)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    out = []
    for k in range(s.size):
        if s[k] <= cutoff:
            break
        out.append((float(s[k]), StateVector(ll, u[:, k]), StateVector(rl, vh[k])))
    return out
