import numpy as np
import pytest

from privelet.oracle import random_hierarchy, random_schema
from privelet.schema import Hierarchy, Schema, ordinal_attribute


def rel_err(actual: np.ndarray, expected: np.ndarray) -> float:
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(expected))) if expected.size else 1.0)
    return float(np.max(np.abs(actual - expected))) / scale


def hierarchy_from_seed(seed: int, height: int | None = None, max_fanout: int = 4) -> Hierarchy:
    rng = np.random.default_rng(seed)
    if height is None:
        height = int(rng.integers(2, 6))
    return Hierarchy(random_hierarchy(rng, height, max_fanout=max_fanout))


@pytest.fixture
def fig_hierarchy() -> Hierarchy:
    """Two groups of three leaves: the shape of the worked transform
    example (root fanout 2, level-2 fanout 3)."""
    return Hierarchy(
        {
            "label": "root",
            "children": [
                {"label": "L", "children": [{"label": "v1"}, {"label": "v2"}, {"label": "v3"}]},
                {"label": "R", "children": [{"label": "v4"}, {"label": "v5"}, {"label": "v6"}]},
            ],
        }
    )


@pytest.fixture
def medical_schema() -> Schema:
    """Age groups x has-diabetes, the running 5x2 example."""
    return Schema(
        (
            ordinal_attribute("age", ("<30", "30-39", "40-49", "50-59", ">=60")),
            ordinal_attribute("diabetes", ("yes", "no")),
        )
    )


def mixed_schema_from_seed(seed: int, max_dims: int = 4, max_size: int = 4096) -> Schema:
    return random_schema(np.random.default_rng(seed), max_dims=max_dims, max_size=max_size)
