"""Shared fixtures: the TV survey database and a toy transactions database."""

import pathlib

import pytest

from ermine import load_instance_dir, load_schema_file, parse_query, parse_query_file

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
TV_DIR = FIXTURES / "tv_survey"
BASKET_DIR = FIXTURES / "itemsets"


@pytest.fixture(scope="session")
def tv_schema():
    return load_schema_file(TV_DIR / "schema.json")


@pytest.fixture(scope="session")
def tv(tv_schema):
    return load_instance_dir(tv_schema, TV_DIR / "data")


@pytest.fixture(scope="session")
def queries(tv_schema):
    """The named fixture queries F1, F2, G1, G2."""
    return parse_query_file((TV_DIR / "queries.erq").read_text(), tv_schema)


@pytest.fixture(scope="session")
def baskets():
    schema = load_schema_file(BASKET_DIR / "schema.json")
    return load_instance_dir(schema, BASKET_DIR / "data")


@pytest.fixture()
def combine(tv_schema, queries):
    """Parse a declaration that may reference the named fixture queries."""

    def parse(text):
        return parse_query(text, tv_schema, queries)

    return parse
