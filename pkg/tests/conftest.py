from importlib import resources

import pytest

from scrumtrainer.adaptation import compile_rules
from scrumtrainer.ils import load_instrument
from scrumtrainer.syllabus import default_pack_path, load_content_pack


@pytest.fixture(scope="session")
def graph():
    return load_content_pack(default_pack_path())


@pytest.fixture(scope="session")
def rules(graph):
    return compile_rules(graph)


@pytest.fixture(scope="session")
def instrument():
    return load_instrument(str(resources.files("scrumtrainer.packs") / "ils_instrument.json"))
