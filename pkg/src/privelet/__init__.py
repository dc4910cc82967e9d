"""Differentially private publication of frequency matrices through
wavelet transforms, with range-count query evaluation, closed-form
noise-variance bounds, and brute-force verification oracles."""

from .data import (
    Dataset,
    FrequencyMatrix,
    build_frequency_matrix,
    generate_synthetic,
    read_dataset_csv,
    synthetic_schema,
    three_level_hierarchy,
    write_dataset_csv,
)
from .mechanisms import (
    METHOD_BASIC,
    METHOD_PRIVELET,
    METHOD_PRIVELET_PLUS,
    PrivacyBudget,
    PublishResult,
    basic_publish,
    budget_for,
    epsilon_for,
    laplace_sample,
    privelet_plus_publish,
    privelet_publish,
    publish,
    sensitivity_factor,
    suggest_split,
    variance_bound,
    variance_factor,
)
from .multidim import CoefficientMatrix
from .queries import (
    Interval,
    QueryMetrics,
    RangeQuery,
    Subtree,
    compute_metrics,
    coverage,
    evaluate,
    generate_workload,
    relative_error,
    selectivity,
)
from .schema import (
    AttributeSchema,
    Hierarchy,
    Schema,
    ValidationError,
    load_schema,
    nominal_attribute,
    ordinal_attribute,
    save_schema,
    validate_hierarchy,
)

__version__ = "0.1.0"
