import pytest

from atomip.encoding import build_level_scheme, build_templates
from atomip.instances import load_instance


@pytest.fixture(scope="session")
def p1():
    return load_instance("p1")


@pytest.fixture(scope="session")
def p2():
    return load_instance("p2")


@pytest.fixture(scope="session")
def p3():
    return load_instance("p3")


@pytest.fixture(scope="session")
def p4():
    return load_instance("p4")


@pytest.fixture(scope="session")
def p1_encoding(p1):
    scheme = build_level_scheme(p1)
    return scheme, build_templates(p1, scheme)
