import pytest

import termgen


@pytest.fixture(scope="session")
def corpus500():
    return termgen.corpus(500)


@pytest.fixture()
def ctx():
    return termgen.make_context()
