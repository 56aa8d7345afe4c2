"""TOML model files.

    [data]
    graph = "edges.tsv"          # optional, the CLI --graph wins
    attrs = "attrs.csv"
    directed = false
    n = 36                       # vertex count when no graph is given

    [[terms]]
    kind = "edges"

    [[terms]]
    kind = "nodematch"
    attr = "office"

    [order]
    mode = "vertex-entry"        # or "uniform"
    group_column = "seniority"   # vertices sharing a value enter as one group
    group_order = "ascending"

    [[moments]]                  # GMM statistics h(y)
    kind = "two-stars"

    [fit]
    r = 1000

    theta = [...]                # top level; simulation parameters or theta0

Relative paths are resolved against the directory holding the file.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .estimate import FitConfig, MomentSpec
from .gof import STATISTICS
from .graph import Graph
from .io import read_attributes, read_edge_list
from .ordering import OrderSpec
from .sampler import ModelSpec
from .terms import REGISTRY, TermSpec


class ConfigError(ValueError):
    pass


TOP_KEYS = {"data", "terms", "order", "moments", "fit", "theta"}
DATA_KEYS = {"graph", "attrs", "directed", "n"}
ORDER_KEYS = {"mode", "groups", "group_column", "group_order"}
FIT_KEYS = {f.name for f in dataclasses.fields(FitConfig)} - {"theta0"}


@dataclass
class ParsedConfig:
    model: ModelSpec
    moments: MomentSpec | None
    fit: FitConfig
    graph: Graph | None
    text: str
    theta_given: bool
    path: Path


def _unknown(section: str, got, allowed):
    extra = sorted(set(got) - set(allowed))
    if extra:
        where = f"[{section}]" if section else "top level"
        raise ConfigError(f"unknown key {extra[0]!r} in {where}; allowed: {sorted(allowed)}")


def _resolve(base: Path, p):
    p = Path(p)
    return p if p.is_absolute() else base / p


def _build_stat(entry: dict, where: str, template: Graph, moment: bool):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError(f"{where}: every entry needs a 'kind'")
    kind = entry["kind"]
    params = {k: v for k, v in entry.items() if k != "kind"}
    if moment and kind in STATISTICS:
        if params:
            raise ConfigError(f"{where}: statistic {kind!r} takes no parameters, got {sorted(params)}")
        return STATISTICS[kind]()
    if kind not in REGISTRY:
        known = sorted(REGISTRY) + (sorted(STATISTICS) if moment else [])
        raise ConfigError(f"{where}.kind: unknown term kind {kind!r}; known kinds: {known}")
    try:
        term = TermSpec(kind, params).build()
    except TypeError as exc:
        raise ConfigError(f"{where}: bad parameters for {kind!r}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    attr = params.get("attr")
    if attr is not None and attr not in template.attrs:
        raise ConfigError(f"{where}.attr: vertex attribute {attr!r} not found; "
                          f"available: {sorted(template.attrs)}")
    try:
        term.validate(template)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return term


def _order(sec: dict, labels, attrs) -> OrderSpec:
    _unknown("order", sec, ORDER_KEYS)
    mode = sec.get("mode", "uniform")
    if mode == "uniform":
        if set(sec) - {"mode"}:
            raise ConfigError("[order]: groups only apply to mode = \"vertex-entry\"")
        return OrderSpec.uniform()
    if mode != "vertex-entry":
        raise ConfigError(f"[order].mode: expected 'uniform' or 'vertex-entry', got {mode!r}")
    if "groups" in sec and "group_column" in sec:
        raise ConfigError("[order]: give either 'groups' or 'group_column', not both")
    index = {v: k for k, v in enumerate(labels)}
    if "groups" in sec:
        groups = []
        for gi, grp in enumerate(sec["groups"]):
            try:
                groups.append([index[str(v)] for v in grp])
            except KeyError as exc:
                raise ConfigError(f"[order].groups[{gi}]: unknown vertex {exc.args[0]!r}") from None
        spec = OrderSpec.vertex_entry(groups)
    elif "group_column" in sec:
        col = sec["group_column"]
        if col not in attrs:
            raise ConfigError(f"[order].group_column: vertex attribute {col!r} not found")
        direction = sec.get("group_order", "ascending")
        if direction not in ("ascending", "descending"):
            raise ConfigError(f"[order].group_order: expected 'ascending' or 'descending', got {direction!r}")
        values = attrs[col]
        levels = np.unique(values)
        if direction == "descending":
            levels = levels[::-1]
        spec = OrderSpec.vertex_entry([np.flatnonzero(values == lv).tolist() for lv in levels])
    else:
        if "group_order" in sec:
            raise ConfigError("[order].group_order needs group_column")
        spec = OrderSpec.vertex_entry()
    try:
        spec.validate(len(labels))
    except ValueError as exc:
        raise ConfigError(f"[order].groups: {exc}") from None
    return spec


def parse_config(path, graph_path=None, attrs_path=None, seed: int | None = None,
                 require_graph: bool = False) -> ParsedConfig:
    path = Path(path)
    raw = path.read_bytes()
    text = raw.decode("utf-8")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    _unknown("", doc, TOP_KEYS)
    base = path.parent
    data = doc.get("data", {})
    _unknown("data", data, DATA_KEYS)
    directed = bool(data.get("directed", False))

    attrs_file = Path(attrs_path) if attrs_path else (_resolve(base, data["attrs"]) if "attrs" in data else None)
    graph_file = Path(graph_path) if graph_path else (_resolve(base, data["graph"]) if "graph" in data else None)
    labels, attrs = None, {}
    if attrs_file is not None:
        labels, attrs = read_attributes(attrs_file)
    elif "n" in data:
        # vertices 0..n-1, so isolates survive an edge list round trip
        labels = [str(i) for i in range(int(data["n"]))]
    graph = None
    if graph_file is not None:
        graph = read_edge_list(graph_file, labels, directed, attrs)
        labels = graph.labels
    elif require_graph:
        raise ConfigError("no observed graph: pass --graph or set [data].graph")
    if labels is None:
        if "n" not in data:
            raise ConfigError("[data].n is needed when neither a graph nor an attribute file is given")
        labels = [str(i) for i in range(int(data["n"]))]
    elif "n" in data and int(data["n"]) != len(labels):
        raise ConfigError(f"[data].n = {data['n']} but the data have {len(labels)} vertices")
    template = Graph(len(labels), directed, labels=labels, attrs=attrs)

    terms_sec = doc.get("terms")
    if not terms_sec:
        raise ConfigError("model needs at least one [[terms]] entry")
    terms = [_build_stat(t, f"terms[{k}]", template, False) for k, t in enumerate(terms_sec)]
    order = _order(doc.get("order", {}), labels, attrs)

    theta_given = "theta" in doc
    theta = np.asarray(doc.get("theta", np.zeros(len(terms))), dtype=float)
    if theta.size != len(terms):
        raise ConfigError(f"theta: {theta.size} values for {len(terms)} terms")
    try:
        model = ModelSpec(tuple(terms), theta, order, len(labels), directed, attrs, tuple(labels))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    moments = None
    if "moments" in doc:
        stats = [_build_stat(t, f"moments[{k}]", template, True) for k, t in enumerate(doc["moments"])]
        moments = MomentSpec(tuple(stats))

    fit_sec = dict(doc.get("fit", {}))
    _unknown("fit", fit_sec, FIT_KEYS)
    if seed is not None:
        fit_sec["master_seed"] = seed
    if theta_given:
        fit_sec["theta0"] = theta.tolist()
    try:
        fit = FitConfig(**fit_sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[fit]: {exc}") from None
    return ParsedConfig(model, moments, fit, graph, text, theta_given, path)
