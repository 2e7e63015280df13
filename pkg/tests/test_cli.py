import csv
import json

import pytest

from qsvt_decoders.analysis import crossover_sweep
from qsvt_decoders.cli import dumps, load_config, main, parse_config
from qsvt_decoders.corpus import ERASURE_SEED7_SPEC, IDENTITY_SPEC, instance_from_spec, pauli_sweep_specs
from qsvt_decoders.exceptions import ValidationError


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


IDENTITY_CFG = {"schema": 1, **IDENTITY_SPEC, "tasks": ["postselect"]}
ERASURE_CFG = {"schema": 1, **ERASURE_SEED7_SPEC, "deltas": [1e-3], "tasks": ["decode_gyk", "petz_exact"]}


def test_identity_postselect_csv(tmp_path):
    assert main(["run", "--config", write(tmp_path, IDENTITY_CFG), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "summary.csv")
    gyk = next(r for r in rows if r["kind"] == "gyk")
    assert float(gyk["p_succ"]) == pytest.approx(0.25, abs=1e-12)
    assert float(gyk["fidelity"]) == pytest.approx(1.0, abs=1e-12)


def test_erasure_decode_report(tmp_path):
    assert main(["run", "--config", write(tmp_path, ERASURE_CFG), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    dec = rep["instances"][0]["decoders"]
    run = dec["decode_gyk"][0]
    assert run["recovery_error"] <= run["bound"]
    assert dec["petz_exact"]["recovery_error"] <= dec["petz_exact"]["bound"]
    assert run["barnum_knill"]["holds"]
    assert run["dilation_fingerprint"] and run["phase_cache_key"]
    assert rep["tolerances"]["bound_slack"] == 1e-6
    assert rep["version"].startswith("0.1.0+g")


@pytest.mark.parametrize("cfg", [IDENTITY_CFG, ERASURE_CFG], ids=["identity", "erasure"])
def test_rerun_is_byte_identical(tmp_path, cfg):
    path = write(tmp_path, cfg)
    main(["run", "--config", path, "--out", str(tmp_path / "a")])
    main(["run", "--config", path, "--out", str(tmp_path / "b")])
    for f in ("report.json", "summary.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_identical_across_thread_counts(tmp_path):
    cfg = {"schema": 1, "instances": [IDENTITY_SPEC, ERASURE_SEED7_SPEC,
                                      {**ERASURE_SEED7_SPEC, "d_B": 2}], "tasks": ["postselect", "complexity"]}
    path = write(tmp_path, cfg)
    main(["run", "--config", path, "--out", str(tmp_path / "a"), "--jobs", "1"])
    main(["run", "--config", path, "--out", str(tmp_path / "b"), "--jobs", "3"])
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_qsp_subcommand(tmp_path):
    cache = tmp_path / "cache.json"
    rc = main(["qsp", "--beta", "0.3", "--delta", "0.01", "--out", str(tmp_path / "o"), "--export-cache", str(cache)])
    assert rc == 0
    q = json.loads((tmp_path / "o" / "report.json").read_text())["qsp"]
    assert q["grid_residual"] <= 1e-6 and q["t"] == len(q["phases"]["phases"])
    assert q["phase_cache_key"] in json.loads(cache.read_text())["cache"]


def test_compare_matches_sweep(tmp_path):
    assert main(["compare", "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "summary.csv")
    table = crossover_sweep([instance_from_spec(s) for s in pauli_sweep_specs()], 1e-3, check=False)
    assert len(rows) == len(table)
    for row, ref in zip(rows, table):
        assert row["instance"] == ref.name
        assert int(row["t_gyk"]) == ref.t_gyk and int(row["t_pl"]) == ref.t_pl
        assert row["predicted_winner"] == ref.predicted_winner


def test_protocol_preset(tmp_path):
    cfg = {"schema": 1, **IDENTITY_SPEC}
    assert main(["protocol", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    ps = rep["instances"][0]["postselect"]
    assert ps["petzlike"]["p_succ"] == pytest.approx(1.0)
    assert max(ps["gyk"]["projector_identities"].values()) <= 1e-8


def test_sweep_subcommand(tmp_path):
    cfg = {"schema": 1, "sweep": {"family": "pauli", "ns": [1, 2]}}
    assert main(["sweep", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    sw = json.loads((tmp_path / "o" / "report.json").read_text())["sweep"]
    assert sw["strict_failures"] == [] and len(sw["rows"]) == 8


# errors and exit codes


def test_missing_seed_exit_2(tmp_path, capsys):
    cfg = {"schema": 1, **ERASURE_SEED7_SPEC, "encoder": {"kind": "haar"}}
    assert main(["decode", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
    assert "encoder.seed" in capsys.readouterr().err


def test_seed_override_fills_missing(tmp_path):
    cfg = {"schema": 1, **ERASURE_SEED7_SPEC, "encoder": {"kind": "haar"}}
    assert main(["protocol", "--config", write(tmp_path, cfg), "--seed", "7", "--out", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("patch,field", [
    ({"schema": 2}, "schema"),
    ({"deltas": [0.0]}, "deltas[0]"),
    ({"tasks": ["fly"]}, "tasks[0]"),
    ({"tolerances": {"nope": 1}}, "tolerances.nope"),
    ({"bogus": 1}, "bogus"),
    ({"d_A": 3}, "d_A"),
])
def test_validation_exit_2(tmp_path, capsys, patch, field):
    cfg = {**IDENTITY_CFG, **patch}
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
    assert field in capsys.readouterr().err


def test_bad_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert main(["run", "--config", str(p)]) == 2


def test_cap_exit_3(tmp_path, capsys):
    assert main(["decode", "--config", write(tmp_path, ERASURE_CFG), "--cap", "32", "--out", str(tmp_path / "o")]) == 3


def test_invariant_exit_4(tmp_path, capsys):
    cfg = {**ERASURE_CFG, "tolerances": {"bound_slack": -1.0}}
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 4
    assert "exceeds bound" in capsys.readouterr().err


def test_run_requires_config():
    assert main(["run"]) == 2


# config and serialisation


def test_parse_inline_and_list():
    a = parse_config({"schema": 1, **IDENTITY_SPEC})
    b = parse_config({"schema": 1, "instances": [IDENTITY_SPEC]})
    assert a.instances == b.instances


def test_parse_rejects_both_forms():
    with pytest.raises(ValidationError):
        parse_config({"schema": 1, "instances": [IDENTITY_SPEC], **IDENTITY_SPEC})


def test_load_config_missing(tmp_path):
    with pytest.raises(ValidationError):
        load_config(tmp_path / "none.json")


def test_dumps_is_canonical():
    assert dumps({"b": float("nan"), "a": 0.1}) == '{\n  "a": 0.1,\n  "b": null\n}\n'
    x = 1 / 3
    assert json.loads(dumps({"x": x}))["x"] == x
