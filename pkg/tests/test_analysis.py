import math

import pytest

from qsvt_decoders import analysis
from qsvt_decoders.analysis import complexity_report, crossover_sweep, unitary_cost_formula
from qsvt_decoders.corpus import DEPOL, erasure_sweep_specs, instance_from_spec, pauli_sweep_specs
from qsvt_decoders.decoders import decode_gyk, decode_petzlike
from qsvt_decoders.exceptions import InvariantViolation


def spec(noise, d_a=2, d_b=1, seed=5):
    return instance_from_spec({"noise": noise, "encoder": {"kind": "haar", "seed": seed}, "d_A": d_a, "d_B": d_b})


ERASE_ONE = {"kind": "erasure", "n_in": 3, "erased": [2]}


@pytest.mark.parametrize("e,winner,strict", [(0, "petzlike", True), (1, "petzlike", True), (2, "gyk", False)])
def test_erasure_three_to_two(e, winner, strict):
    rep = complexity_report(spec(ERASE_ONE, 2, 2**e), 1e-3, cap=2**14)
    assert rep.predicted_winner == winner and rep.strict == strict
    assert rep.agrees
    assert rep.crossover_rhs == pytest.approx(-1.0)


@pytest.mark.parametrize("e", [0, 1])
def test_pauli_favours_gyk(e):
    rep = complexity_report(spec({"kind": "pauli", "p": DEPOL, "n": 2}, 2, 2**e), 1e-3)
    assert rep.predicted_winner == "gyk"
    assert rep.t_gyk <= rep.t_pl


def test_damping_favours_gyk_when_e_ge_k():
    rep = complexity_report(spec({"kind": "damping", "gamma": 0.4, "n": 2}, 2, 2), 1e-3)
    assert rep.predicted_winner == "gyk" and rep.t_gyk <= rep.t_pl


def test_erasure_without_side_info_favours_petzlike():
    rep = complexity_report(spec({"kind": "erasure", "n_in": 2, "erased": [1]}, 2, 1), 1e-3)
    assert rep.predicted_winner == "petzlike" and rep.realized_winner == "petzlike"


def test_degenerate_identity(identity_inst):
    rep = complexity_report(identity_inst, 1e-3)
    assert rep.degenerate and rep.kappa == 0


def test_report_fields(erasure7):
    rep = complexity_report(erasure7, 1e-3)
    d = rep.as_dict()
    assert d["t_petz_scale_note"] == "formula only"
    assert d["t_petz_scale"] == pytest.approx(math.sqrt(erasure7.dilation.rank / rep.lambda_min))
    assert rep.k + rep.e <= rep.n_in


def test_cost_formula(erasure7):
    f = unitary_cost_formula(complexity_report(erasure7, 1e-3))
    assert set(f) == {"gyk", "petzlike"} and all(s.startswith("O(") for s in f.values())


def test_degree_ratio_tracks_beta(corpus):
    for inst in corpus:
        rep = complexity_report(inst, 1e-3)
        ratio = math.sqrt(inst.d_a * inst.d_d / (inst.d_b * inst.dilation.rank))
        assert 0.5 <= (rep.t_gyk / rep.t_pl) / ratio <= 2.0, inst.name


def test_pauli_sweep():
    table = crossover_sweep([instance_from_spec(s) for s in pauli_sweep_specs()])
    assert len(table) == 20 and not table.skipped
    assert not table.failures and table.strict_rows


def test_erasure_sweep_skips_over_cap():
    table = crossover_sweep([instance_from_spec(s) for s in erasure_sweep_specs()])
    assert len(table) + len(table.skipped) == 41
    assert all("reason" in s and s["name"] for s in table.skipped)
    assert not table.failures


def test_sweep_raises_on_failure(monkeypatch):
    insts = [spec(ERASE_ONE, 2, 1)]
    monkeypatch.setattr(analysis, "_predicted", lambda lhs, rhs: "gyk")
    monkeypatch.setattr(analysis.ComplexityReport, "agrees", property(lambda self: False))
    with pytest.raises(InvariantViolation):
        crossover_sweep(insts, cap=2**14)
    assert len(crossover_sweep(insts, cap=2**14, check=False).failures) == 1


def test_padded_environment_observation():
    # padding E to a power of two (the default, rank 3 -> 4) has no quantitative target; sanity checks only
    base = {"noise": {"kind": "pauli", "p": [0.4, 0.3, 0.3, 0.0], "n": 1}, "encoder": {"kind": "identity"},
            "d_A": 2, "d_B": 1}
    plain, padded = instance_from_spec({**base, "qubit": False}), instance_from_spec(base)
    assert (plain.d_e, padded.d_e) == (3, 4)
    assert padded.omega.lambda_min == pytest.approx(plain.omega.lambda_min)
    a, b = complexity_report(plain, 1e-3), complexity_report(padded, 1e-3)
    assert (a.t_gyk, a.t_pl) == (b.t_gyk, b.t_pl)
    runs = {}
    for name, inst in (("plain", plain), ("padded", padded)):
        runs[name] = [decode_gyk(inst, 1e-3), decode_petzlike(inst, 1e-3)]
    print({k: [(r.t, round(r.recovery_error, 6)) for r in v] for k, v in runs.items()})
    assert runs["padded"][1].t >= runs["plain"][1].t
    for r in runs["plain"] + runs["padded"]:
        assert r.margin >= -1e-6
