"""Instance specifications and the standard test corpus.

An instance spec is a plain dict, the same shape the CLI reads from JSON::

    {"noise": {"kind": "erasure", "n_in": 3, "erased": [2]},
     "encoder": {"kind": "haar", "seed": 7},
     "d_A": 2, "d_B": 4}
"""

from __future__ import annotations

import copy

from .channels import amplitude_damping, erasure_noise, identity_channel, pauli_noise
from .decoupling import ProtocolInstance, make_instance
from .exceptions import ValidationError
from .validation import check_positive_int

__all__ = ["noise_from_spec", "instance_from_spec", "spec_name", "standard_corpus", "decoder_corpus",
           "pauli_sweep_specs", "erasure_sweep_specs", "IDENTITY_SPEC", "ERASURE_SEED7_SPEC"]

NOISE_KINDS = ("identity", "pauli", "damping", "erasure")


def _field(d: dict, key: str, path: str):
    if key not in d:
        raise ValidationError("missing required field", f"{path}.{key}")
    return d[key]


def noise_from_spec(spec: dict, path: str = "noise"):
    if not isinstance(spec, dict):
        raise ValidationError("expected an object", path)
    kind = _field(spec, "kind", path)
    if kind == "identity":
        n = check_positive_int(spec.get("n", 1), f"{path}.n")
        return identity_channel(2**n)
    if kind == "pauli":
        return pauli_noise(_field(spec, "p", path), check_positive_int(spec.get("n", 1), f"{path}.n"))
    if kind == "damping":
        return amplitude_damping(_field(spec, "gamma", path), check_positive_int(spec.get("n", 1), f"{path}.n"))
    if kind == "erasure":
        n_in = check_positive_int(_field(spec, "n_in", path), f"{path}.n_in")
        erased = _field(spec, "erased", path)
        if not isinstance(erased, (list, tuple)):
            raise ValidationError("expected a list of qubit indices", f"{path}.erased")
        return erasure_noise(n_in, erased)
    raise ValidationError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}", f"{path}.kind")


def _encoder_from_spec(spec: dict, path: str = "encoder"):
    if not isinstance(spec, dict):
        raise ValidationError("expected an object", path)
    kind = _field(spec, "kind", path)
    if kind == "identity":
        return "identity"
    if kind == "haar":
        seed = spec.get("seed")
        if seed is None:
            raise ValidationError("a seed is required for a Haar-random encoder", f"{path}.seed")
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ValidationError(f"expected an integer seed, got {seed!r}", f"{path}.seed")
        return ("haar", seed)
    raise ValidationError(f"unknown encoder kind {kind!r}", f"{path}.kind")


def spec_name(spec: dict) -> str:
    n, e = spec["noise"], spec["encoder"]
    parts = [n["kind"]]
    if n["kind"] == "pauli":
        parts.append("p=" + ",".join(f"{x:g}" for x in n["p"]))
    if n["kind"] == "damping":
        parts.append(f"g={n['gamma']:g}")
    if n["kind"] == "erasure":
        parts.append(f"{n['n_in']}-{len(n['erased'])}@" + ",".join(str(i) for i in n["erased"]))
    else:
        parts.append(f"n={n.get('n', 1)}")
    parts.append(e["kind"] + (f"{e['seed']}" if e["kind"] == "haar" else ""))
    parts.append(f"A{spec['d_A']}B{spec.get('d_B', 1)}")
    return "/".join(parts)


def instance_from_spec(spec: dict) -> ProtocolInstance:
    if not isinstance(spec, dict):
        raise ValidationError("expected an object", "instance")
    noise = noise_from_spec(_field(spec, "noise", "instance"))
    encoder = _encoder_from_spec(_field(spec, "encoder", "instance"))
    d_a = check_positive_int(_field(spec, "d_A", "instance"), "d_A")
    d_b = check_positive_int(spec.get("d_B", 1), "d_B")
    qubit = bool(spec.get("qubit", True))
    return make_instance(encoder, noise, d_a, d_b, qubit=qubit, name=spec.get("name") or spec_name(spec),
                         spec=copy.deepcopy(spec))


def _spec(noise: dict, enc: dict, d_a: int, d_b: int = 1) -> dict:
    return {"noise": noise, "encoder": enc, "d_A": d_a, "d_B": d_b}


ID = {"kind": "identity"}
IDENTITY_SPEC = _spec({"kind": "identity", "n": 1}, ID, 2, 1)
ERASURE_SEED7_SPEC = _spec({"kind": "erasure", "n_in": 3, "erased": [2]}, {"kind": "haar", "seed": 7}, 2, 4)


def _haar(seed):
    return {"kind": "haar", "seed": seed}


DEPOL = [0.25, 0.25, 0.25, 0.25]
BIASED = [0.7, 0.1, 0.1, 0.1]
BITFLIP = [0.5, 0.5, 0.0, 0.0]


def standard_corpus() -> list[dict]:
    """Instance specs used for the post-selection and projector checks."""
    return [
        IDENTITY_SPEC,
        _spec({"kind": "identity", "n": 2}, ID, 2, 2),
        _spec({"kind": "identity", "n": 2}, ID, 4, 1),
        _spec({"kind": "pauli", "p": BITFLIP, "n": 1}, ID, 2),
        _spec({"kind": "pauli", "p": DEPOL, "n": 1}, ID, 2),
        _spec({"kind": "pauli", "p": BIASED, "n": 1}, ID, 2),
        _spec({"kind": "pauli", "p": DEPOL, "n": 2}, _haar(11), 2, 1),
        _spec({"kind": "pauli", "p": BIASED, "n": 2}, _haar(12), 2, 1),
        _spec({"kind": "pauli", "p": BIASED, "n": 2}, _haar(13), 2, 2),
        _spec({"kind": "pauli", "p": BITFLIP, "n": 2}, _haar(14), 2, 2),
        _spec({"kind": "damping", "gamma": 0.3, "n": 1}, ID, 2),
        _spec({"kind": "damping", "gamma": 1.0, "n": 1}, ID, 2),
        _spec({"kind": "damping", "gamma": 0.3, "n": 2}, _haar(21), 2, 1),
        _spec({"kind": "damping", "gamma": 1.0, "n": 2}, _haar(22), 2, 2),
        _spec({"kind": "damping", "gamma": 0.3, "n": 2}, ID, 2, 2),
        ERASURE_SEED7_SPEC,
        _spec({"kind": "erasure", "n_in": 3, "erased": [2]}, _haar(31), 2, 1),
        _spec({"kind": "erasure", "n_in": 3, "erased": [0]}, _haar(32), 2, 2),
        _spec({"kind": "erasure", "n_in": 3, "erased": [0]}, ID, 2, 2),
        _spec({"kind": "erasure", "n_in": 3, "erased": [2]}, ID, 2, 2),
        _spec({"kind": "erasure", "n_in": 2, "erased": [1]}, _haar(41), 2, 1),
        _spec({"kind": "erasure", "n_in": 2, "erased": [0]}, _haar(42), 2, 2),
        _spec({"kind": "erasure", "n_in": 2, "erased": [0]}, ID, 2, 1),
        _spec({"kind": "erasure", "n_in": 2, "erased": [0, 1]}, ID, 2, 2),
    ]


def decoder_corpus() -> list[dict]:
    """Specs for the decoder runs (same as the standard corpus)."""
    return standard_corpus()


def pauli_sweep_specs(ps=(BIASED, DEPOL), ns=(1, 2, 3), seed: int = 101) -> list[dict]:
    """Grid of ``(k, e)`` with ``k + e <= n`` for each Pauli vector and block size."""
    out = []
    for p in ps:
        for n in ns:
            for k in range(1, n + 1):
                for e in range(0, n - k + 1):
                    out.append(_spec({"kind": "pauli", "p": list(p), "n": n}, _haar(seed), 2**k, 2**e))
    return out


def erasure_sweep_specs(cases=((3, (2,)), (4, (3,)), (4, (2, 3)), (5, (3, 4))), seed: int = 202) -> list[dict]:
    """Grid of ``(k, e)`` with ``k + e <= n_in`` for each erasure pattern."""
    out = []
    for n_in, erased in cases:
        for k in range(1, n_in + 1):
            for e in range(0, n_in - k + 1):
                out.append(_spec({"kind": "erasure", "n_in": n_in, "erased": list(erased)}, _haar(seed), 2**k, 2**e))
    return out
