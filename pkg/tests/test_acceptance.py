"""Acceptance criteria; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s``; the lines are also
repeated in the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from qsvt_decoders import tolerance_context
from qsvt_decoders.analysis import crossover_sweep
from qsvt_decoders.cli import main
from qsvt_decoders.corpus import (
    ERASURE_SEED7_SPEC,
    IDENTITY_SPEC,
    erasure_sweep_specs,
    instance_from_spec,
    pauli_sweep_specs,
    standard_corpus,
)
from qsvt_decoders.decoders import (
    PetzRecovery,
    barnum_knill_check,
    decode_gyk,
    decode_petzlike,
    petz_exact,
)
from qsvt_decoders.protocols import gyk_postselect, make_problem, petzlike_postselect, postselect, projector_identities
from qsvt_decoders.qsvt import _PHASE_CACHE, make_sign_poly, qsp_scalar_eval
from qsvt_decoders.tensor import (
    DenseOperator,
    SystemLayout,
    apply_operator,
    basis_state,
    contract,
    max_entangled,
    reduced_density,
    reorder,
    tensor_product,
    trace_distance,
)

from conftest import DECODER_CAP, DELTAS

KINDS = ("gyk", "petzlike")
DECODE = {"gyk": decode_gyk, "petzlike": decode_petzlike}


@pytest.fixture(scope="module")
def decoder_table(corpus):
    """Fresh decoder runs with per-pass wall time: ``{(kind, delta): (seconds, runs)}``."""
    table = {}
    with tolerance_context(dim_cap=DECODER_CAP):
        for kind in KINDS:
            for delta in DELTAS:
                t0 = time.perf_counter()
                runs = [DECODE[kind](inst, delta, cap=None) for inst in corpus]
                table[kind, delta] = (time.perf_counter() - t0, runs)
    return table


@pytest.fixture(scope="module")
def petz_runs(corpus):
    with tolerance_context(dim_cap=DECODER_CAP):
        return [petz_exact(inst) for inst in corpus]


def test_ac01_postselection_formulas(acceptance):
    t0 = time.perf_counter()
    insts = [instance_from_spec(s) for s in standard_corpus()]
    worst = 0.0
    for inst in insts:
        for kind in KINDS:
            r = postselect(make_problem(inst, kind))
            worst = max(worst, abs(r.p_succ - r.formula_p), abs(r.fidelity_to_mes - r.formula_f))
    dt = time.perf_counter() - t0
    ok = len(insts) >= 20 and worst <= 1e-9 and dt <= 10
    assert acceptance(1, "post-selection closed forms", ok, f"{len(insts)} instances, max dev {worst:.1e}, {dt:.2f} s")


def test_ac02_identity_exact(acceptance, identity_inst):
    g, p = gyk_postselect(identity_inst), petzlike_postselect(identity_inst)
    devs = [abs(g.p_succ - 0.25), abs(g.fidelity_to_mes - 1), abs(p.p_succ - 1), abs(p.fidelity_to_mes - 1)]
    assert acceptance(2, "identity instance exact values", max(devs) <= 1e-12, f"max dev {max(devs):.1e}")


def test_ac03_projector_identities(acceptance, corpus):
    worst, where = 0.0, ""
    for inst in corpus:
        for kind in KINDS:
            for key, val in projector_identities(make_problem(inst, kind)).items():
                if val > worst:
                    worst, where = val, f"{inst.name} {kind} {key}"
    assert acceptance(3, "projector product identities", worst <= 1e-8, f"max {worst:.1e} at {where}")


def test_ac04_protocol_equivalence(acceptance, corpus):
    keep = ["R", "E", "E'", "R'"]
    worst = max(
        trace_distance(reduced_density(gyk_postselect(i).post_state, keep),
                       reduced_density(petzlike_postselect(i).post_state, keep))
        for i in corpus
    )
    assert acceptance(4, "protocol output equivalence", worst <= 1e-9, f"max trace distance {worst:.1e}")


def test_ac05_sign_polynomial(acceptance):
    bad, ratio = [], 0.0
    for beta in (0.1, 0.2, 0.3, 0.4):
        for delta in (1e-2, 1e-3, 1e-4):
            poly = make_sign_poly(beta, delta)
            err = poly.grid_errors(2001)
            limit = 20 * (1 / beta) * math.log(1 / delta)
            ratio = max(ratio, poly.degree / limit)
            if err["max_abs"] > 1 or err["max_sign_err"] > delta or poly.degree > limit:
                bad.append((beta, delta))
    assert acceptance(5, "sign polynomial bounds and degree", not bad,
                      f"12 points, max t / (20 ln(1/delta)/beta) = {ratio:.3f}")


def test_ac06_phase_correctness(acceptance, decoder_table):
    x = np.linspace(-1, 1, 2001)
    dev = max(float(np.abs(qsp_scalar_eval(ph.array(), x) - poly(x)).max()) for poly, ph in _PHASE_CACHE.values())
    gap = max(r.oracle_gap for _, runs in decoder_table.values() for r in runs)
    ok = dev <= 1e-6 and gap <= 1e-6
    assert acceptance(6, "QSP phases and circuit vs oracle", ok,
                      f"{len(_PHASE_CACHE)} cached sets, max dev {dev:.1e}, max oracle gap {gap:.1e}")


def test_ac07_decoder_bounds(acceptance, decoder_table, identity_inst):
    worst_margin = min(r.margin for _, runs in decoder_table.values() for r in runs)
    slowest = max(dt for dt, _ in decoder_table.values())
    ident = max(DECODE[k](identity_inst, 1e-3).recovery_error for k in KINDS)
    ok = worst_margin >= -1e-6 and ident <= 0.0448 and slowest <= 120
    assert acceptance(7, "decoder recovery bounds", ok,
                      f"min margin {worst_margin:.2e}, identity error {ident:.4f}, slowest pass {slowest:.1f} s")


def test_ac08_petz(acceptance, corpus, petz_runs, identity_inst):
    margin = min(r.bound - r.recovery_error for r in petz_runs)
    rec = PetzRecovery().fit(identity_inst)
    with tolerance_context(dim_cap=DECODER_CAP):
        fixed = max(PetzRecovery().fit(i).reference_fixed_point_error() for i in corpus)
    ok = margin >= -1e-6 and rec.recovery_error() <= 1e-9 and fixed <= 1e-9
    assert acceptance(8, "Petz map bound and fixed point", ok,
                      f"min margin {margin:.2e}, identity error {rec.recovery_error():.1e}, fixed point {fixed:.1e}")


def test_ac09_barnum_knill(acceptance, corpus, decoder_table, petz_runs):
    margins = [barnum_knill_check(inst, run, petz)[1]
               for _, runs in decoder_table.values()
               for inst, run, petz in zip(corpus, runs, petz_runs)]
    ok = min(margins) >= -1e-8
    assert acceptance(9, "Barnum-Knill fidelity inequality", ok, f"{len(margins)} pairs, min margin {min(margins):.2e}")


def test_ac10_crossover(acceptance):
    details, ok = [], True
    for family, specs in (("pauli", pauli_sweep_specs()), ("erasure", erasure_sweep_specs())):
        table = crossover_sweep([instance_from_spec(s) for s in specs], 1e-3, cap=2**16, check=False)
        ok &= len(table) >= 12 and not table.failures and not table.skipped
        details.append(f"{family}: {len(table)} points, {len(table.strict_rows)} strict, "
                       f"{len(table.failures)} disagree, {len(table.skipped)} skipped")
    assert acceptance(10, "crossover criterion in the strict regime", ok, "; ".join(details))


def _sides(m, d_a, d_b, d_e, d_d):
    """Both sides of the MES transpose identity as ``(B'D) x (AE')`` matrices."""
    lay = SystemLayout.of
    lop = DenseOperator(m, lay(("E", d_e), ("D", d_d)), lay(("A", d_a), ("B", d_b)))
    lt = DenseOperator(m.T, lay(("A'", d_a), ("B'", d_b)), lay(("E'", d_e), ("D'", d_d)))
    left = np.zeros((d_b * d_d, d_a * d_e), dtype=complex)
    right = np.zeros_like(left)
    for a in range(d_a):
        for e in range(d_e):
            inp = basis_state(lay(("A", d_a), ("E'", d_e)), a, e)
            psi = apply_operator(lop, tensor_product(inp, max_entangled(d_b, ("B", "B'"))))
            out = reorder(contract(max_entangled(d_e, ("E", "E'")), psi), ["B'", "D"])
            left[:, a * d_e + e] = out.amplitudes
            psi = apply_operator(lt, tensor_product(inp, max_entangled(d_d, ("D", "D'"))))
            out = reorder(contract(max_entangled(d_a, ("A", "A'")), psi), ["B'", "D"])
            right[:, a * d_e + e] = math.sqrt(d_a * d_d / (d_b * d_e)) * out.amplitudes
    return left, right


def test_ac11_mes_transpose_identity(acceptance):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        dims = rng.integers(1, 5, size=4)
        shape = (dims[2] * dims[3], dims[0] * dims[1])
        m = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        left, right = _sides(m, *dims)
        # closed form: L[(e', d), (a, b')] / sqrt(d_B d_E)
        d_a, d_b, d_e, d_d = dims
        ref = m.reshape(d_e, d_d, d_a, d_b).transpose(3, 1, 2, 0).reshape(d_b * d_d, d_a * d_e)
        ref = ref / math.sqrt(d_b * d_e)
        worst = max(worst, np.abs(left - right).max(), np.abs(left - ref).max())
    assert acceptance(11, "MES transpose identity", worst <= 1e-10, f"100 draws, max entry dev {worst:.1e}")


def test_ac12_determinism(acceptance, tmp_path):
    configs = {
        "identity": {"schema": 1, **IDENTITY_SPEC, "tasks": ["postselect", "decode_gyk", "complexity"]},
        "erasure": {"schema": 1, **ERASURE_SEED7_SPEC, "deltas": [1e-2, 1e-3],
                    "tasks": ["postselect", "decode_gyk", "decode_petzlike", "petz_exact", "complexity"]},
        "multi": {"schema": 1, "instances": [IDENTITY_SPEC, ERASURE_SEED7_SPEC, {**ERASURE_SEED7_SPEC, "d_B": 2}],
                  "tasks": ["postselect", "decode_petzlike"]},
    }
    same = []
    for name, cfg in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        outs = []
        for i, jobs in enumerate(("1", "1", "4")):
            out = tmp_path / f"{name}-{i}"
            assert main(["run", "--config", str(path), "--out", str(out), "--jobs", jobs]) == 0
            outs.append((out / "report.json").read_bytes())
        same.append(outs[0] == outs[1] == outs[2])
    assert acceptance(12, "byte-identical reruns", all(same),
                      f"{len(configs)} configs, 3 runs each (jobs 1, 1, 4)")
