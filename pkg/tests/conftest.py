import pytest

from sms_controller.corpus import parse_corpus
from sms_controller.engine import Pipeline, build_seed_ontology
from sms_controller.preprocess import fixture_path, fixture_text, load_lexicon
from sms_controller.sim import Resources
from sms_controller.taxonomy import load_taxonomy


@pytest.fixture(scope="session")
def graph():
    with fixture_path("taxonomy-small.tsv").open("rb") as fh:
        return load_taxonomy(fh)


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon()


@pytest.fixture
def pipeline(graph, lexicon):
    return Pipeline(graph, lexicon)


@pytest.fixture(scope="session")
def seed_corpus():
    return parse_corpus(fixture_text("spam-seed-100.tsv"))


@pytest.fixture(scope="session")
def stream_corpus():
    return parse_corpus(fixture_text("stream-500.tsv"))


@pytest.fixture
def seed_ontology(graph, lexicon, seed_corpus):
    return build_seed_ontology([x.message for x in seed_corpus], Pipeline(graph, lexicon))


@pytest.fixture
def resources(graph, lexicon, seed_corpus):
    return Resources(Pipeline(graph, lexicon), [x.message for x in seed_corpus])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
