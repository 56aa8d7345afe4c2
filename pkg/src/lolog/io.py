"""Edge lists (TSV) and vertex attribute tables (CSV)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .graph import Graph


def read_attributes(path) -> tuple[list[str], dict]:
    """Vertex labels (first column) and attribute columns.

    A column becomes float when every entry parses as a number, otherwise it
    stays categorical (strings).
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: attribute file is empty")
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise ValueError(f"{path}: duplicate column names in header")
    labels = []
    cols = {name: [] for name in header[1:]}
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, found {len(r)}")
        labels.append(r[0].strip())
        for name, v in zip(header[1:], r[1:]):
            cols[name].append(v.strip())
    if len(set(labels)) != len(labels):
        raise ValueError(f"{path}: duplicate vertex labels")
    attrs = {name: _column(vals) for name, vals in cols.items()}
    return labels, attrs


def _column(vals):
    try:
        return np.array([float(v) for v in vals])
    except ValueError:
        return np.array(vals, dtype=object).astype(str)


def read_edge_list(path, labels=None, directed: bool = False, attrs=None) -> Graph:
    """Two whitespace- or tab-separated vertex labels per line; '#' starts a comment.

    With ``labels`` the vertex set is fixed (isolates allowed) and unknown
    labels are an error; otherwise vertices are numbered in order of first
    appearance.
    """
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected two vertex labels")
            a, b = parts[0].strip(), parts[1].strip()
            if a == b:
                raise ValueError(f"{path}:{lineno}: self-loop on vertex {a!r}")
            pairs.append((a, b, lineno))
    if labels is None:
        labels = []
        seen = set()
        for a, b, _ in pairs:
            for v in (a, b):
                if v not in seen:
                    seen.add(v)
                    labels.append(v)
    index = {v: k for k, v in enumerate(labels)}
    edges = []
    for a, b, lineno in pairs:
        try:
            edges.append((index[a], index[b]))
        except KeyError as exc:
            raise ValueError(f"{path}:{lineno}: vertex {exc.args[0]!r} is not in the attribute table") from None
    if not labels:
        raise ValueError(f"{path}: no vertices")
    return Graph.from_edges(len(labels), edges, directed, labels=labels, attrs=attrs)


def write_edge_list(graph: Graph, path) -> None:
    e = graph.edges()
    lines = [f"{graph.labels[i]}\t{graph.labels[j]}" for i, j in e.tolist()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def write_attributes(graph: Graph, path, extra=None) -> None:
    """Labels plus attribute columns; ``extra`` adds columns (name -> values)."""
    cols = dict(graph.attrs)
    cols.update(extra or {})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + list(cols))
        for k, lab in enumerate(graph.labels):
            w.writerow([lab] + [_cell(cols[c][k]) for c in cols])


def _cell(v):
    if isinstance(v, (float, np.floating)) and float(v).is_integer():
        return str(int(v))
    return str(v)
