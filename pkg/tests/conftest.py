import pathlib

import pytest

from tmfsim import compile_machine, load_machine

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"

MACHINE_NAMES = ("unary", "succ", "palin", "diverge")

# Machines equipped with both fault rules and checkpoint marks; these are the
# ones the fault/failure sweeps run over.
SWEEP_NAMES = ("unary", "succ")


def corpus_meta(name: str) -> str:
    return str(CORPUS / f"{name}.meta")


@pytest.fixture(scope="session")
def corpus():
    """name -> (validated machine, input word from the corpus word file)."""
    return {name: load_machine(corpus_meta(name)) for name in MACHINE_NAMES}


@pytest.fixture(scope="session")
def compiled_corpus(corpus):
    return {name: (compile_machine(machine), word) for name, (machine, word) in corpus.items()}


@pytest.fixture
def unary(compiled_corpus):
    return compiled_corpus["unary"]


@pytest.fixture
def succ(compiled_corpus):
    return compiled_corpus["succ"]


@pytest.fixture
def palin(compiled_corpus):
    return compiled_corpus["palin"]


@pytest.fixture
def diverge(compiled_corpus):
    return compiled_corpus["diverge"]
