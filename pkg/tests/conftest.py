import pytest

from stexify.cli import DATA_DIR
from stexify.registry import Registry
from stexify.semantics import SymbolContext
from stexify.synth import VerbalizationSet
from stexify.terms import SubtypeLattice, load_typed_symbols


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def registry(data_dir):
    return Registry.load(data_dir / "registry" / "MANIFEST")


@pytest.fixture(scope="session")
def lattice(data_dir):
    return SubtypeLattice.load(data_dir / "lattice.json")


@pytest.fixture(scope="session")
def typed_symbols(data_dir):
    return load_typed_symbols(data_dir / "typed_symbols.jsonl")


@pytest.fixture(scope="session")
def ctx(registry, typed_symbols, lattice):
    return SymbolContext(registry, typed_symbols, lattice)


@pytest.fixture(scope="session")
def templates(data_dir):
    return VerbalizationSet.load(data_dir / "verbalizations.json")
