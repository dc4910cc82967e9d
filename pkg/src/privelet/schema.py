"""Attribute schemas and nominal hierarchies.

Ordinal attributes carry an ordered domain and are padded to a power of
two for transform purposes.  Nominal attributes carry a hierarchy tree;
the left-to-right leaf order induces the storage order of the matrix
dimension, so every internal node covers a contiguous index range.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

ORDINAL = "ordinal"
NOMINAL = "nominal"


class ValidationError(ValueError):
    """Raised when schemas, hierarchies, datasets or queries are malformed."""


def next_power_of_two(k: int) -> int:
    if k < 1:
        raise ValueError(f"expected a positive size, got {k}")
    return 1 << (k - 1).bit_length()


class Hierarchy:
    """Tree over a nominal domain: leaves are domain values, internal
    nodes summarize their subtrees.

    Nodes are numbered in breadth-first order (root = 0), which makes the
    children of any node a contiguous id range and keeps each level
    contiguous.  Leaves are additionally ordered depth-first left to
    right; that order is the storage order of the matrix dimension.
    """

    def __init__(self, root: dict):
        self.spec = root
        labels: list[str] = []
        parents: list[int] = []
        child_specs: list[list[dict]] = []
        queue = [(root, -1)]
        while queue:
            node, parent = queue.pop(0)
            node_id = len(labels)
            labels.append(str(node.get("label", f"n{node_id}")))
            parents.append(parent)
            kids = node.get("children") or []
            child_specs.append(kids)
            for kid in kids:
                queue.append((kid, node_id))
        # second pass: children ids (BFS numbering makes them contiguous)
        self.num_nodes = len(labels)
        self.labels = tuple(labels)
        self.parents = np.array(parents, dtype=np.int64)
        self.fanout = np.zeros(self.num_nodes, dtype=np.int64)
        for nid in range(self.num_nodes):
            if parents[nid] >= 0:
                self.fanout[parents[nid]] += 1
        self.children_start = np.zeros(self.num_nodes, dtype=np.int64)
        # children of node i start right after all children of nodes < i
        acc = 1
        for nid in range(self.num_nodes):
            self.children_start[nid] = acc
            acc += self.fanout[nid]

        self.depth = np.zeros(self.num_nodes, dtype=np.int64)
        for nid in range(1, self.num_nodes):
            self.depth[nid] = self.depth[self.parents[nid]] + 1
        self.height = int(self.depth.max()) + 1  # root at level 1

        # levels are contiguous in BFS ids
        self.level_bounds: list[tuple[int, int]] = []
        for level in range(1, self.height + 1):
            ids = np.nonzero(self.depth == level - 1)[0]
            self.level_bounds.append((int(ids[0]), int(ids[-1]) + 1))

        # sibling groups: BFS ids make parents[1:] non-decreasing, so the
        # non-root nodes split into contiguous runs sharing a parent
        if self.num_nodes > 1:
            p = self.parents[1:]
            self.group_starts = np.nonzero(np.diff(p, prepend=p[0] - 1))[0]
            self.group_sizes = np.diff(np.append(self.group_starts, len(p)))
        else:
            self.group_starts = np.empty(0, dtype=np.int64)
            self.group_sizes = np.empty(0, dtype=np.int64)

        # depth-first leaf order and per-node covered leaf spans
        self.leaf_ids = np.array(self._dfs_leaves(), dtype=np.int64)
        self.leaf_count = len(self.leaf_ids)
        self.leaf_span = np.zeros((self.num_nodes, 2), dtype=np.int64)
        pos_of = {int(nid): i for i, nid in enumerate(self.leaf_ids)}
        self._compute_spans(0, pos_of)
        self.leaf_labels = tuple(self.labels[i] for i in self.leaf_ids)

    def _dfs_leaves(self) -> list[int]:
        order: list[int] = []
        stack = [0]
        while stack:
            nid = stack.pop()
            if self.fanout[nid] == 0:
                order.append(nid)
            else:
                lo = self.children_start[nid]
                stack.extend(range(lo + self.fanout[nid] - 1, lo - 1, -1))
        return order

    def _compute_spans(self, nid: int, pos_of: dict[int, int]) -> tuple[int, int]:
        if self.fanout[nid] == 0:
            p = pos_of[nid]
            self.leaf_span[nid] = (p, p + 1)
            return p, p + 1
        lo_c = self.children_start[nid]
        spans = [self._compute_spans(c, pos_of) for c in range(lo_c, lo_c + self.fanout[nid])]
        lo = min(s[0] for s in spans)
        hi = max(s[1] for s in spans)
        self.leaf_span[nid] = (lo, hi)
        return lo, hi

    def children_of(self, nid: int) -> range:
        lo = int(self.children_start[nid])
        return range(lo, lo + int(self.fanout[nid]))

    def node_path(self, nid: int) -> str:
        """Slash-joined labels from the root's children down to the node."""
        parts: list[str] = []
        while nid > 0:
            parts.append(self.labels[nid])
            nid = int(self.parents[nid])
        return "/".join(reversed(parts))

    def resolve_path(self, path: str) -> int:
        """Inverse of node_path; empty path is the root."""
        nid = 0
        for part in [p for p in path.split("/") if p]:
            matches = [c for c in self.children_of(nid) if self.labels[c] == part]
            if not matches:
                raise ValidationError(f"no child {part!r} under {self.labels[nid]!r}")
            if len(matches) > 1:
                raise ValidationError(f"ambiguous label {part!r} under {self.labels[nid]!r}")
            nid = matches[0]
        return nid

    def to_spec(self) -> dict:
        def rebuild(nid: int) -> dict:
            kids = [rebuild(c) for c in self.children_of(nid)]
            node: dict = {"label": self.labels[nid]}
            if kids:
                node["children"] = kids
            return node

        return rebuild(0)


def validate_hierarchy(h: Hierarchy) -> list[str]:
    """Return all invariant violations (empty list means valid).

    Internal nodes with a single child are rejected: the coefficient
    weight f/(2f-2) is undefined at fanout 1.
    """
    errors: list[str] = []
    if h.height < 2:
        errors.append("height < 2: a hierarchy needs a root and at least one leaf level")
    singles = [h.labels[i] for i in range(h.num_nodes) if h.fanout[i] == 1]
    for label in singles:
        errors.append(f"internal node {label!r} has exactly 1 child (fanout >= 2 required)")
    seen: set[str] = set()
    for label in h.leaf_labels:
        if label in seen:
            errors.append(f"duplicate leaf value {label!r}")
        seen.add(label)
    for nid in range(h.num_nodes):
        kids = list(h.children_of(nid))
        kid_labels = [h.labels[c] for c in kids]
        if len(set(kid_labels)) != len(kid_labels):
            errors.append(f"duplicate sibling labels under {h.labels[nid]!r}")
    return errors


@dataclass(frozen=True)
class AttributeSchema:
    """One attribute: its kind, ordered domain, and (if nominal) hierarchy."""

    name: str
    kind: str
    values: tuple
    hierarchy: Hierarchy | None = None

    def __post_init__(self):
        if self.kind not in (ORDINAL, NOMINAL):
            raise ValidationError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if len(self.values) == 0:
            raise ValidationError(f"attribute {self.name!r}: empty domain")
        if self.kind == ORDINAL:
            if self.hierarchy is not None:
                raise ValidationError(f"ordinal attribute {self.name!r} must not carry a hierarchy")
        else:
            if self.hierarchy is None:
                raise ValidationError(f"nominal attribute {self.name!r} needs a hierarchy")
            problems = validate_hierarchy(self.hierarchy)
            if problems:
                raise ValidationError(
                    f"attribute {self.name!r}: invalid hierarchy: " + "; ".join(problems)
                )
            if self.hierarchy.leaf_labels != tuple(str(v) for v in self.values):
                raise ValidationError(
                    f"attribute {self.name!r}: hierarchy leaves must equal the domain values"
                )

    @property
    def domain_size(self) -> int:
        return len(self.values)

    @property
    def padded_size(self) -> int:
        if self.kind != ORDINAL:
            raise ValueError("padded_size is defined for ordinal attributes only")
        return next_power_of_two(self.domain_size)

    @property
    def storage_size(self) -> int:
        """Matrix dimension size: padded for ordinal, leaf count for nominal."""
        return self.padded_size if self.kind == ORDINAL else self.domain_size


def nominal_attribute(name: str, hierarchy_spec: dict) -> AttributeSchema:
    h = Hierarchy(hierarchy_spec)
    return AttributeSchema(name=name, kind=NOMINAL, values=h.leaf_labels, hierarchy=h)


def ordinal_attribute(name: str, values) -> AttributeSchema:
    return AttributeSchema(name=name, kind=ORDINAL, values=tuple(values))


@dataclass(frozen=True)
class Schema:
    attributes: tuple[AttributeSchema, ...]

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate attribute names")

    def __iter__(self):
        return iter(self.attributes)

    def __len__(self):
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.storage_size for a in self.attributes)

    @property
    def size(self) -> int:
        """Total entry count m of the frequency matrix, padding included."""
        return int(np.prod(self.dims, dtype=np.int64))

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.attributes:
            if a.name == name:
                return a
        raise ValidationError(f"unknown attribute {name!r}")

    def axis_of(self, name: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == name:
                return i
        raise ValidationError(f"unknown attribute {name!r}")

    def to_spec(self) -> dict:
        out = []
        for a in self.attributes:
            if a.kind == ORDINAL:
                out.append({"name": a.name, "kind": ORDINAL, "values": list(a.values)})
            else:
                out.append({"name": a.name, "kind": NOMINAL, "hierarchy": a.hierarchy.to_spec()})
        return {"attributes": out}

    def content_hash(self) -> str:
        blob = json.dumps(self.to_spec(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def schema_from_spec(spec: dict) -> Schema:
    attrs = []
    for item in spec.get("attributes", []):
        name = item.get("name")
        kind = item.get("kind")
        if name is None or kind is None:
            raise ValidationError("each attribute needs 'name' and 'kind'")
        if kind == ORDINAL:
            values = item.get("values")
            if isinstance(values, dict) and "range" in values:
                lo, hi = values["range"]
                values = list(range(int(lo), int(hi) + 1))
            if not values:
                raise ValidationError(f"attribute {name!r}: missing domain values")
            attrs.append(ordinal_attribute(name, values))
        elif kind == NOMINAL:
            hier = item.get("hierarchy")
            if not hier:
                raise ValidationError(f"attribute {name!r}: missing hierarchy")
            attrs.append(nominal_attribute(name, hier))
        else:
            raise ValidationError(f"attribute {name!r}: unknown kind {kind!r}")
    return Schema(attributes=tuple(attrs))


def load_schema(path) -> Schema:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"schema file {path}: not valid JSON ({exc})") from exc
    return schema_from_spec(spec)


def save_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_spec(), fh, indent=2, sort_keys=True)
        fh.write("\n")
