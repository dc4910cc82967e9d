import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privelet import haar, multidim, nominal, queries
from privelet.data import FrequencyMatrix, three_level_hierarchy
from privelet.schema import NOMINAL, ORDINAL, Schema, nominal_attribute, ordinal_attribute

from conftest import mixed_schema_from_seed, rel_err


def mixed_446_schema() -> Schema:
    return Schema(
        (
            ordinal_attribute("x", range(4)),
            ordinal_attribute("y", range(4)),
            nominal_attribute(
                "z",
                {
                    "label": "root",
                    "children": [
                        {"label": "L", "children": [{"label": "a"}, {"label": "b"}, {"label": "c"}]},
                        {"label": "R", "children": [{"label": "d"}, {"label": "e"}, {"label": "f"}]},
                    ],
                },
            ),
        )
    )


def compose_1d_oracle(matrix: FrequencyMatrix, split=()) -> tuple[np.ndarray, np.ndarray]:
    """Sequential per-vector composition using the one-dimensional
    modules with explicit Python loops: the definition of the
    multi-dimensional transform."""
    values = np.array(matrix.entries, dtype=np.float64)
    weights = np.ones_like(values)
    for axis, attr in enumerate(matrix.schema):
        if attr.name in split:
            continue
        moved = np.moveaxis(values, axis, -1)
        w_moved = np.moveaxis(weights, axis, -1)
        flat = moved.reshape(-1, moved.shape[-1])
        w_flat = w_moved.reshape(-1, w_moved.shape[-1])
        if attr.kind == ORDINAL:
            out_len = attr.storage_size
            wvec = haar.weight_vector(out_len)
        else:
            out_len = attr.hierarchy.num_nodes
            wvec = nominal.weight_vector(attr.hierarchy)
        out = np.empty((flat.shape[0], out_len))
        w_out = np.empty_like(out)
        for i in range(flat.shape[0]):
            if attr.kind == ORDINAL:
                out[i] = haar.forward(flat[i]).values
            else:
                out[i] = nominal.forward(flat[i], attr.hierarchy).values
            shared = w_flat[i, 0]
            assert np.all(w_flat[i] == shared), "equal-weight slice invariant"
            w_out[i] = shared * wvec
        new_shape = moved.shape[:-1] + (out_len,)
        values = np.moveaxis(out.reshape(new_shape), -1, axis)
        weights = np.moveaxis(w_out.reshape(new_shape), -1, axis)
    return values, weights


def test_2x2_dataflow():
    schema = Schema((ordinal_attribute("r", range(2)), ordinal_attribute("c", range(2))))
    entries = np.array([[1.0, 2.0], [3.0, 4.0]])
    matrix = FrequencyMatrix(schema, entries, 10)

    # step 1 transforms vectors along the first dimension
    v1, w1 = multidim.transform_axis(entries, np.ones((2, 2)), schema.attributes[0], axis=0)
    assert v1[0].tolist() == [2.0, 3.0]  # per-column bases (means)
    assert v1[1].tolist() == [-1.0, -1.0]  # per-column details
    assert np.all(w1[0] == 2.0) and np.all(w1[1] == 2.0)

    # step 2 finishes: the global base is the mean of all four entries
    coeffs = multidim.forward(matrix)
    assert coeffs.values[0, 0] == 2.5
    assert coeffs.weights[0, 0] == 4.0  # both steps multiply their base weights
    assert coeffs.weight_at((0, 0)) == 4.0


def test_8x8_base_weight():
    schema = Schema((ordinal_attribute("a", range(8)), ordinal_attribute("b", range(8))))
    matrix = FrequencyMatrix(schema, np.ones((8, 8)), 64)
    coeffs = multidim.forward(matrix)
    assert coeffs.weight_at((0, 0)) == 64.0
    with pytest.raises(ValueError):
        coeffs.weight_at((0, 9))


def test_zero_matrix():
    schema = mixed_446_schema()
    matrix = FrequencyMatrix(schema, np.zeros(schema.dims), 0)
    coeffs = multidim.forward(matrix)
    assert np.all(coeffs.values == 0.0)
    assert np.all(coeffs.weights > 0.0)


def test_matches_sequential_1d_composition():
    schema = mixed_446_schema()
    rng = np.random.default_rng(8)
    matrix = FrequencyMatrix(schema, rng.integers(0, 20, size=schema.dims).astype(float), 100)
    for split in [(), ("y",), ("x", "z")]:
        coeffs = multidim.forward(matrix, split=split)
        values, weights = compose_1d_oracle(matrix, split=split)
        assert rel_err(coeffs.values, values) < 1e-12
        assert rel_err(coeffs.weights, weights) < 1e-12


def test_round_trip_padded_medical(medical_schema):
    rng = np.random.default_rng(0)
    entries = np.zeros(medical_schema.dims)
    entries[:5, :] = rng.integers(0, 9, size=(5, 2))
    matrix = FrequencyMatrix(medical_schema, entries, int(entries.sum()))
    back = multidim.inverse(multidim.forward(matrix))
    assert rel_err(back.entries, matrix.entries) < 1e-9


def test_dc_component_gives_constant_matrix():
    schema = Schema((ordinal_attribute("a", range(4)), ordinal_attribute("b", range(8))))
    values = np.zeros(schema.dims)
    values[0, 0] = 6.25
    coeffs = multidim.CoefficientMatrix(
        schema=schema, values=values, weights=multidim.forward(
            FrequencyMatrix(schema, np.zeros(schema.dims), 0)
        ).weights, split=(), tuple_count=0,
    )
    back = multidim.inverse(coeffs)
    assert np.allclose(back.entries, 6.25)


def test_one_dimensional_reduction():
    s_ord = Schema((ordinal_attribute("a", range(16)),))
    m = FrequencyMatrix(s_ord, np.arange(16, dtype=float), 120)
    coeffs = multidim.forward(m)
    assert np.array_equal(coeffs.weights, haar.weight_vector(16))
    assert np.array_equal(coeffs.values, haar.forward(np.arange(16, dtype=float)).values)

    s_nom = Schema((nominal_attribute("a", three_level_hierarchy("v", 9, 3)),))
    h = s_nom.attributes[0].hierarchy
    m = FrequencyMatrix(s_nom, np.arange(9, dtype=float), 36)
    coeffs = multidim.forward(m)
    assert np.array_equal(coeffs.weights, nominal.weight_vector(h))
    assert np.array_equal(coeffs.values, nominal.forward_batch(np.arange(9, dtype=float), h))


def test_equal_weight_slices_hold_after_each_step():
    schema = mixed_446_schema()
    rng = np.random.default_rng(4)
    values = rng.integers(0, 9, size=schema.dims).astype(float)
    weights = np.ones_like(values)
    for axis, attr in enumerate(schema):
        # before the step, any vector along a not-yet-processed axis is
        # constant in weight
        for later in range(axis, len(schema)):
            moved = np.moveaxis(weights, later, -1)
            assert np.all(moved == moved[..., :1])
        values, weights = multidim.transform_axis(values, weights, attr, axis)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_round_trip_random_schemas(seed):
    schema = mixed_schema_from_seed(seed)
    rng = np.random.default_rng(seed + 1)
    matrix = FrequencyMatrix(schema, rng.uniform(0, 50, size=schema.dims), 100)
    back = multidim.inverse(multidim.forward(matrix))
    assert rel_err(back.entries, matrix.entries) < 1e-9


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_linearity(seed):
    schema = mixed_schema_from_seed(seed, max_size=512)
    rng = np.random.default_rng(seed + 2)
    a = rng.integers(0, 50, size=schema.dims).astype(float)
    b = rng.integers(0, 50, size=schema.dims).astype(float)
    fa = multidim.forward(FrequencyMatrix(schema, a, 1)).values
    fb = multidim.forward(FrequencyMatrix(schema, b, 1)).values
    fab = multidim.forward(FrequencyMatrix(schema, a + b, 2)).values
    assert rel_err(fa + fb, fab) < 1e-9


def expansion_oracle(coeffs: multidim.CoefficientMatrix, query: queries.RangeQuery) -> float:
    """Answer a query from coefficient space by expanding every covered
    entry through its per-dimension reconstruction formula and summing
    the resulting per-coefficient multipliers."""
    schema = coeffs.schema
    factors = []
    for axis, attr in enumerate(schema):
        lo, hi = queries.storage_spans(query, schema)[axis]
        size = coeffs.dims[axis]
        g = np.zeros(size)
        if attr.name in coeffs.split:
            g[lo : hi + 1] = 1.0
        elif attr.kind == ORDINAL:
            m = attr.storage_size
            depth = m.bit_length() - 1
            for j in range(lo, hi + 1):
                g[0] += 1.0
                for level in range(1, depth + 1):
                    anc = (1 << (level - 1)) + (j >> (depth - level + 1))
                    sign = 1.0 if (j >> (depth - level)) & 1 == 0 else -1.0
                    g[anc] += sign
        else:
            h = attr.hierarchy
            for j in range(lo, hi + 1):
                nid = int(h.leaf_ids[j])
                g[nid] += 1.0
                mult = 1.0
                node = nid
                while node != 0:
                    parent = int(h.parents[node])
                    mult /= h.fanout[parent]
                    g[parent] += mult
                    node = parent
        factors.append(g)
    # contract the coefficient tensor against the per-dimension vectors
    acc = coeffs.values
    for g in reversed(factors):
        acc = acc @ g
    return float(acc)


def test_query_answers_match_expansion_oracle():
    schema = mixed_446_schema()
    rng = np.random.default_rng(12)
    matrix = FrequencyMatrix(schema, rng.integers(0, 9, size=schema.dims).astype(float), 50)
    coeffs = multidim.forward(matrix)
    # perturb coefficients like noise would, then restore valid groups
    noisy_values = coeffs.values + rng.normal(0, 3, size=coeffs.values.shape)
    for axis, attr in enumerate(schema):
        if attr.kind == NOMINAL:
            moved = np.moveaxis(noisy_values, axis, -1)
            fixed = nominal.mean_subtract_batch(moved, attr.hierarchy)
            noisy_values = np.moveaxis(fixed, -1, axis)
    noisy = multidim.CoefficientMatrix(
        schema=schema, values=noisy_values, weights=coeffs.weights,
        split=(), tuple_count=coeffs.tuple_count,
    )
    reconstructed = multidim.inverse(noisy)
    for q in queries.generate_workload(schema, 40, seed=3):
        direct = queries.evaluate(q, reconstructed)
        expanded = expansion_oracle(noisy, q)
        assert direct == pytest.approx(expanded, rel=1e-9, abs=1e-9)
