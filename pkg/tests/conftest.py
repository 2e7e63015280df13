import numpy as np
import pytest

from qsvt_decoders import tolerance_context
from qsvt_decoders.corpus import ERASURE_SEED7_SPEC, IDENTITY_SPEC, instance_from_spec, standard_corpus
from qsvt_decoders.decoders import decode_gyk, decode_petzlike, petz_exact

DECODER_CAP = 2**14
DELTAS = (1e-2, 1e-3)

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    """Callable ``(number, title, ok, detail)`` that records and prints one result line."""

    def report(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] AC{number:02d} {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus():
    return [instance_from_spec(s) for s in standard_corpus()]


@pytest.fixture(scope="session")
def identity_inst():
    return instance_from_spec(IDENTITY_SPEC)


@pytest.fixture(scope="session")
def erasure7():
    return instance_from_spec(ERASURE_SEED7_SPEC)


@pytest.fixture(scope="session")
def dephasing_inst():
    return instance_from_spec({"noise": {"kind": "pauli", "p": [0.5, 0.5, 0, 0], "n": 1},
                               "encoder": {"kind": "identity"}, "d_A": 2, "d_B": 1})


class DecoderRuns:
    """Lazily computed decoder runs over the corpus, shared across test modules."""

    def __init__(self, corpus):
        self.corpus = corpus
        self._runs = {}
        self._petz = {}

    def run(self, i, kind, delta):
        key = (i, kind, delta)
        if key not in self._runs:
            fn = decode_gyk if kind == "gyk" else decode_petzlike
            with tolerance_context(dim_cap=DECODER_CAP):
                self._runs[key] = fn(self.corpus[i], delta, cap=None)
        return self._runs[key]

    def petz(self, i):
        if i not in self._petz:
            with tolerance_context(dim_cap=DECODER_CAP):
                self._petz[i] = petz_exact(self.corpus[i])
        return self._petz[i]

    def all(self, deltas=DELTAS):
        for i in range(len(self.corpus)):
            for kind in ("gyk", "petzlike"):
                for d in deltas:
                    yield i, kind, d, self.run(i, kind, d)


@pytest.fixture(scope="session")
def decoder_runs(corpus):
    return DecoderRuns(corpus)
