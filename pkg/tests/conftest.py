import random
import sys

import pytest

from stagedlong import Dataset, VariableSchema, build_event_tree, load_example

DEPRESSION_ORDER = ["Treatment", "Diagnosis", "Week1", "Week2", "Week4"]


def random_dataset(rng, n_vars, max_cats=3, n_rows=40, missing=0.0, shared_labels=False):
    schema = []
    for i in range(n_vars):
        k = rng.randint(2, max_cats)
        cats = tuple("abcdef"[:k]) if shared_labels else tuple(f"v{i}c{j}" for j in range(k))
        schema.append(VariableSchema(f"V{i}", cats))
    rows = []
    for _ in range(n_rows):
        row = []
        for var in schema:
            if rng.random() < missing:
                row.append(None)
            else:
                row.append(rng.choice(var.categories))
        rows.append(tuple(row))
    return Dataset(tuple(schema), tuple(rows))


def random_tree(rng, n_vars, **kw):
    data = random_dataset(rng, n_vars, **kw)
    return build_event_tree(data, list(data.names))


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture(scope="session")
def depression():
    return load_example("depression")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS, key=lambda l: int(l.split()[1].rstrip("]"))):
        terminalreporter.write_line(line)
