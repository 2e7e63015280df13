import math

import numpy as np
import pytest
from sklearn.base import clone

from qsvt_decoders import tolerance_context
from qsvt_decoders.decoders import (
    GYKDecoder,
    PetzLikeDecoder,
    PetzRecovery,
    barnum_knill_check,
    choose_t,
    decode_gyk,
    decode_petzlike,
    omega_targ,
    petz_exact,
    targ_check,
)
from qsvt_decoders.decoupling import decoupling_epsilon
from qsvt_decoders.exceptions import InvariantViolation, NotFittedError, ValidationError
from qsvt_decoders.tensor import trace_distance

from conftest import DECODER_CAP


@pytest.mark.parametrize("cls", [GYKDecoder, PetzLikeDecoder])
def test_identity_recovery(cls, identity_inst):
    dec = cls(delta=1e-3).fit(identity_inst)
    assert dec.recovery_error() <= 0.0448
    assert dec.epsilon_ == pytest.approx(0.0, abs=1e-14)


def test_identity_degrees(identity_inst):
    assert GYKDecoder(delta=0.5).fit(identity_inst).t_ == 3
    assert PetzLikeDecoder(delta=0.5).fit(identity_inst).t_ == 1


@pytest.mark.parametrize("fn", [decode_gyk, decode_petzlike])
def test_erasure_within_bound(fn, erasure7):
    run = fn(erasure7, 1e-3)
    assert run.recovery_error <= math.sqrt(run.epsilon) + math.sqrt(2e-3) + 1e-6
    assert run.oracle_gap <= 1e-6


@pytest.mark.parametrize("delta", [1e-2, 1e-3])
def test_decoders_agree(delta, erasure7):
    a, b = decode_gyk(erasure7, delta), decode_petzlike(erasure7, delta)
    d = trace_distance(a.output, b.output)
    assert d <= 2 * math.sqrt(2 * delta) + 2 * math.sqrt(a.epsilon) + 1e-6


def test_dephasing_bound(dephasing_inst):
    for fn in (decode_gyk, decode_petzlike):
        run = fn(dephasing_inst, 1e-2)
        assert run.margin >= -1e-6


def test_corpus_bounds(decoder_runs):
    for i, kind, d, run in decoder_runs.all(deltas=(1e-3,)):
        assert run.recovery_error <= run.bound + 1e-6, (decoder_runs.corpus[i].name, kind)


def test_as_dict_keys(erasure7):
    d = decode_gyk(erasure7, 1e-2).as_dict()
    for key in ("t", "beta", "epsilon", "recovery_error", "bound", "phase_residual", "dilation_fingerprint"):
        assert key in d


# exact Petz map


def test_petz_identity(identity_inst):
    rec = PetzRecovery().fit(identity_inst)
    assert rec.recovery_error() <= 1e-9
    assert rec.reference_fixed_point_error() <= 1e-9


def test_petz_erasure(erasure7):
    run = petz_exact(erasure7)
    assert run.recovery_error <= 2 * run.epsilon**0.25
    assert 0 < run.trace_before_normalization <= 1 + 1e-9


def test_petz_fixed_point_corpus(corpus):
    with tolerance_context(dim_cap=DECODER_CAP):
        for inst in corpus[:8]:
            assert PetzRecovery().fit(inst).reference_fixed_point_error() <= 1e-9


def test_petz_transform_normalises(erasure7):
    rec = PetzRecovery().fit(erasure7)
    out = rec.transform(erasure7.omega.rho_rdb)
    assert out.trace().real == pytest.approx(1.0)


@pytest.mark.parametrize("kind", ["gyk", "petzlike"])
def test_barnum_knill(kind, erasure7):
    other = (decode_gyk if kind == "gyk" else decode_petzlike)(erasure7, 1e-3)
    holds, margin = barnum_knill_check(erasure7, other)
    assert holds and margin >= -1e-8


def test_barnum_knill_rejects_petz(erasure7):
    with pytest.raises(ValidationError):
        barnum_knill_check(erasure7, petz_exact(erasure7))


# ideal post-selected target


def test_targ_check(corpus):
    for inst in corpus[:10]:
        dist, root = targ_check(inst)
        assert dist <= root + 1e-9


def test_omega_targ_normalised(erasure7):
    assert omega_targ(erasure7).norm == pytest.approx(1.0, abs=1e-10)


# degree choice


def test_beta_ratio(corpus):
    for inst in corpus:
        b_g, _ = choose_t(inst, 1e-2, "gyk")
        b_p, _ = choose_t(inst, 1e-2, "petzlike")
        ratio = math.sqrt(inst.d_a * inst.d_d / (inst.d_b * inst.d_e))
        if b_g < 1 and b_p < 1:
            assert b_p / b_g == pytest.approx(ratio, rel=1e-9)


@pytest.mark.parametrize("kind", ["gyk", "petzlike"])
def test_halving_delta_monotone(kind, erasure7):
    ts = [choose_t(erasure7, d, kind)[1].degree for d in (0.1, 0.05, 0.025, 0.0125, 0.00625)]
    assert ts == sorted(ts)


def test_unknown_kind(erasure7):
    with pytest.raises(ValidationError):
        choose_t(erasure7, 0.1, "uhlmann")


# estimator protocol


def test_get_params_and_clone():
    dec = GYKDecoder(delta=0.05, cap=512)
    assert dec.get_params() == {"delta": 0.05, "cap": 512, "check_bound": True, "check_oracle": True}
    c = clone(dec)
    assert c.get_params() == dec.get_params() and c is not dec


def test_set_params(identity_inst):
    dec = PetzLikeDecoder().set_params(delta=0.5)
    assert dec.fit(identity_inst).t_ == 1


@pytest.mark.parametrize("cls", [GYKDecoder, PetzLikeDecoder, PetzRecovery])
def test_not_fitted(cls, identity_inst):
    with pytest.raises(NotFittedError):
        cls().transform(identity_inst.omega.rho_rdb)


def test_transform_matches_fit(erasure7):
    dec = GYKDecoder(delta=1e-2).fit(erasure7)
    out = dec.transform(erasure7.omega.rho_rdb)
    assert np.allclose(out.matrix, dec.run_.output.matrix)


def test_rejects_bad_delta(identity_inst):
    with pytest.raises(ValidationError):
        GYKDecoder(delta=0.0).fit(identity_inst)


def test_bound_violation_raises(erasure7):
    # a negative slack makes every bound fail
    with tolerance_context(bound_slack=-1.0):
        with pytest.raises(InvariantViolation):
            GYKDecoder(delta=1e-2).fit(erasure7)
        run = GYKDecoder(delta=1e-2, check_bound=False, check_oracle=False).fit(erasure7).run_
    assert run.epsilon == pytest.approx(decoupling_epsilon(erasure7.omega))


def test_transform_rejects_array(erasure7):
    dec = GYKDecoder(delta=1e-2).fit(erasure7)
    with pytest.raises(ValidationError):
        dec.transform(np.eye(2))
