"""Reading and writing tensors and tricluster sets.

Two tensor formats are supported:

* long-form CSV with header ``obs,var,ctx,value`` (one row per non-missing
  cell). Labels are indexed in first-appearance order. Axis labels without
  any observed cell, domains and the temporal flag cannot be expressed in
  the CSV itself, so :func:`write_tensor` also writes a ``<path>.meta.json``
  sidecar which :func:`read_tensor` picks up when present.
* tensor JSON: ``{"obs", "vars", "ctxs", "temporal", "domains", "cells"}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from .exceptions import DomainMismatchError, ParseError
from .tensor import ORDINAL, REAL, Pattern, Tensor3, Tricluster, VariableDomain

CSV_HEADER = ["obs", "var", "ctx", "value"]


def _format_value(t, j, v):
    dom = t.domains[j]
    if dom.is_ordinal:
        return dom.categories[int(v)]
    return repr(float(v))


def _is_int(s):
    try:
        int(s)
    except ValueError:
        return False
    return True


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _infer_domain(raw_values):
    """Domain for a variable read without metadata.

    Any non-integer number makes the variable real-valued; otherwise it is
    ordinal with integer labels sorted numerically, or string labels sorted
    lexically.
    """
    vals = set(raw_values)
    if vals and all(_is_float(v) for v in vals) and not all(_is_int(v) for v in vals):
        return VariableDomain.real()
    if vals and all(_is_int(v) for v in vals):
        labels = sorted(vals, key=int)
    else:
        labels = sorted(vals)
    return VariableDomain.ordinal(labels or ["0"])


def _decode(dom, raw, locus):
    if dom.is_ordinal:
        try:
            return float(dom.code(raw))
        except DomainMismatchError as exc:
            raise DomainMismatchError(f"{locus}: {exc}") from None
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise DomainMismatchError(f"{locus}: {raw!r} is not a real number") from None
    if math.isnan(value):
        raise DomainMismatchError(f"{locus}: NaN is not a valid cell value")
    return value


def _assemble(records, obs, vars_, ctxs, domains, temporal, kind=None):
    """Build a tensor from ``(locus, obs, var, ctx, raw)`` records."""
    index = [{lab: i for i, lab in enumerate(axis)} for axis in (obs, vars_, ctxs)]
    if domains is None:
        per_var = {v: [] for v in vars_}
        for _, _, v, _, raw in records:
            per_var[v].append(raw)
        if kind == REAL:
            domains = [VariableDomain.real() for _ in vars_]
        elif kind == ORDINAL:
            domains = []
            for v in vars_:
                vals = set(per_var[v])
                labels = sorted(vals, key=int) if vals and all(map(_is_int, vals)) else sorted(vals)
                domains.append(VariableDomain.ordinal(labels or ["0"]))
        else:
            domains = [_infer_domain(per_var[v]) for v in vars_]
    values = np.full((len(obs), len(vars_), len(ctxs)), np.nan)
    seen = set()
    for locus, o, v, c, raw in records:
        try:
            i, j, k = index[0][o], index[1][v], index[2][c]
        except KeyError as exc:
            raise ParseError(f"unknown label {exc.args[0]!r}", locus) from None
        if (i, j, k) in seen:
            raise ParseError(f"duplicate cell ({o}, {v}, {c})", locus)
        seen.add((i, j, k))
        values[i, j, k] = _decode(domains[j], raw, locus)
    return Tensor3(values, tuple(domains), temporal, obs, vars_, ctxs)


def _meta_path(path):
    return Path(str(path) + ".meta.json")


def read_csv(source, meta=None, kind=None, temporal=False):
    """Read a long-form CSV tensor.

    Parameters
    ----------
    source : path or text file object
    meta : dict, optional
        Axis labels, domains and temporal flag (the sidecar contents). Read
        from ``<path>.meta.json`` automatically when ``source`` is a path.
    kind : {"ordinal", "real"}, optional
        Force every variable's domain kind when no metadata is available.
    temporal : bool
        Temporal flag when no metadata is available.
    """
    if isinstance(source, (str, os.PathLike)):
        if meta is None and _meta_path(source).exists():
            meta = json.loads(_meta_path(source).read_text(encoding="utf-8"))
        with open(source, newline="", encoding="utf-8") as fh:
            return _read_csv_stream(fh, meta, kind, temporal)
    return _read_csv_stream(source, meta, kind, temporal)


def _read_csv_stream(fh, meta, kind, temporal=False):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", "line 1") from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise ParseError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}", "line 1")
    records = []
    axes = ({}, {}, {})
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", f"line {lineno}")
        o, v, c, raw = (cell.strip() for cell in row)
        if raw == "":
            continue
        for axis, lab in zip(axes, (o, v, c)):
            axis.setdefault(lab, len(axis))
        records.append((f"line {lineno}", o, v, c, raw))
    if meta is not None:
        obs, vars_, ctxs = (list(meta[key]) for key in ("obs", "vars", "ctxs"))
        domains = [VariableDomain.from_dict(d) for d in meta["domains"]]
        temporal = bool(meta.get("temporal", False))
    else:
        obs, vars_, ctxs = (list(a) for a in axes)
        domains = None
    if not obs or not vars_ or not ctxs:
        raise ParseError("no cells found", "line 2")
    return _assemble(records, obs, vars_, ctxs, domains, temporal, kind)


def _meta(t):
    return {
        "obs": list(t.obs_labels),
        "vars": list(t.var_labels),
        "ctxs": list(t.ctx_labels),
        "temporal": t.temporal,
        "domains": [d.to_dict() for d in t.domains],
    }


def write_csv(t, sink, write_meta=True):
    """Write ``t`` as long-form CSV; a path sink also gets a metadata sidecar."""
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", newline="", encoding="utf-8") as fh:
            _write_csv_stream(t, fh)
        if write_meta:
            _meta_path(sink).write_text(json.dumps(_meta(t), indent=1) + "\n", encoding="utf-8")
    else:
        _write_csv_stream(t, sink)


def _write_csv_stream(t, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i, j, k in zip(*np.nonzero(~np.isnan(t.values))):
        w.writerow(
            [t.obs_labels[i], t.var_labels[j], t.ctx_labels[k], _format_value(t, j, t.values[i, j, k])]
        )


def tensor_to_json(t):
    doc = _meta(t)
    doc["cells"] = [
        [int(i), int(j), int(k), _json_value(t, j, t.values[i, j, k])]
        for i, j, k in zip(*np.nonzero(~np.isnan(t.values)))
    ]
    return doc


def _json_value(t, j, v):
    dom = t.domains[j]
    return dom.categories[int(v)] if dom.is_ordinal else float(v)


def tensor_from_json(doc):
    try:
        obs, vars_, ctxs = ([str(x) for x in doc[key]] for key in ("obs", "vars", "ctxs"))
        cells = doc["cells"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"missing field {exc}", "tensor JSON") from None
    domains = doc.get("domains")
    if domains is not None:
        if len(domains) != len(vars_):
            raise ParseError(f"{len(domains)} domains for {len(vars_)} variables", "domains")
        domains = [VariableDomain.from_dict(d) for d in domains]
    records = []
    for n, cell in enumerate(cells):
        locus = f"cells[{n}]"
        if not isinstance(cell, list) or len(cell) != 4:
            raise ParseError("cell must be [i, j, k, value]", locus)
        i, j, k, raw = cell
        try:
            labels = (obs[int(i)], vars_[int(j)], ctxs[int(k)])
        except (IndexError, ValueError, TypeError):
            raise ParseError(f"index out of range in {cell}", locus) from None
        if raw is None:
            continue
        if domains is not None and domains[int(j)].is_ordinal:
            raw = str(raw)
        records.append((locus, *labels, raw))
    if domains is None:
        records = [(loc, o, v, c, str(raw)) for loc, o, v, c, raw in records]
    return _assemble(records, obs, vars_, ctxs, domains, bool(doc.get("temporal", False)))


def read_json(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return _load_json(fh, tensor_from_json)
    return _load_json(source, tensor_from_json)


def _load_json(fh, convert):
    try:
        doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno}") from None
    return convert(doc)


def write_json(t, sink):
    text = json.dumps(tensor_to_json(t), separators=(",", ":")) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def _format_of(path, fmt):
    if fmt is not None:
        return fmt
    return "json" if str(path).lower().endswith(".json") else "csv"


def read_tensor(source, fmt=None, **kwargs) -> Tensor3:
    """Read a tensor; the format defaults to the file extension.

    Keyword arguments go to :func:`read_csv` (JSON carries its own metadata).
    """
    if _format_of(source, fmt) == "json":
        return read_json(source)
    return read_csv(source, **kwargs)


def write_tensor(t: Tensor3, sink, fmt=None):
    if _format_of(sink, fmt) == "json":
        write_json(t, sink)
    else:
        write_csv(t, sink)


# -- triclusters ------------------------------------------------------------


def _resolve(items, labels, axis, locus):
    lookup = {lab: i for i, lab in enumerate(labels)}
    out = []
    for item in items:
        if isinstance(item, bool):
            raise ParseError(f"invalid {axis} entry {item!r}", locus)
        if isinstance(item, int):
            if not 0 <= item < len(labels):
                raise ParseError(f"{axis} index {item} out of range", locus)
            out.append(item)
        elif isinstance(item, str) and item in lookup:
            out.append(lookup[item])
        else:
            raise ParseError(f"unknown {axis} label {item!r}", locus)
    return out


def triclusters_from_json(doc, t=None):
    """Parse a tricluster document; string labels are resolved against ``t``.

    Returns a list of ``(id, Tricluster, pattern_or_None)``. ``pattern`` is
    present for planting manifests.
    """
    try:
        entries = doc["triclusters"]
    except (KeyError, TypeError):
        raise ParseError("missing 'triclusters' list", "tricluster JSON") from None
    out = []
    for n, entry in enumerate(entries):
        locus = f"triclusters[{n}]"
        try:
            raw = [entry[key] for key in ("I", "J", "K")]
        except (KeyError, TypeError):
            raise ParseError("tricluster needs I, J and K", locus) from None
        if t is not None:
            idx = [
                _resolve(r, labels, axis, locus)
                for r, labels, axis in zip(raw, (t.obs_labels, t.var_labels, t.ctx_labels), "IJK")
            ]
        else:
            if not all(isinstance(x, int) and not isinstance(x, bool) for r in raw for x in r):
                raise ParseError("labels need a tensor to resolve against", locus)
            idx = raw
        try:
            tc = Tricluster(*idx, contiguous=bool(entry.get("contiguous", False)))
        except ValueError as exc:
            raise ParseError(str(exc), locus) from None
        pattern = None
        if "pattern" in entry:
            pattern = _pattern_from_json(entry["pattern"], tc, t, locus)
        out.append((entry.get("id", n), tc, pattern))
    return out


def _pattern_from_json(rows, tc, t, locus):
    if len(rows) != len(tc.var_idx) or any(len(r) != len(tc.ctx_idx) for r in rows):
        raise ParseError("pattern shape does not match J x K", locus)
    if t is None:
        codes = [[int(c) for c in r] for r in rows]
    else:
        codes = [[t.domains[j].code(c) for c in r] for j, r in zip(tc.var_idx, rows)]
    return Pattern(tc.var_idx, tc.ctx_idx, np.array(codes))


def read_triclusters(source, t=None):
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return _load_json(fh, lambda d: triclusters_from_json(d, t))
    return _load_json(source, lambda d: triclusters_from_json(d, t))


def triclusters_to_json(triclusters, t=None, patterns=None, labels=False):
    """Document for a list of triclusters; patterns make it a manifest."""
    entries = []
    for n, tc in enumerate(triclusters):
        if labels and t is not None:
            entry = {
                "I": [t.obs_labels[i] for i in tc.obs_idx],
                "J": [t.var_labels[j] for j in tc.var_idx],
                "K": [t.ctx_labels[k] for k in tc.ctx_idx],
            }
        else:
            entry = {"I": list(tc.obs_idx), "J": list(tc.var_idx), "K": list(tc.ctx_idx)}
        entry["contiguous"] = tc.contiguous
        if patterns is not None:
            pat = patterns[n]
            entry["pattern"] = pat.labels(t) if t is not None else pat.values.tolist()
        entries.append(entry)
    return {"triclusters": entries}


def write_triclusters(triclusters, sink, t=None, patterns=None, labels=False):
    text = json.dumps(triclusters_to_json(triclusters, t, patterns, labels), indent=1) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def dumps_csv(t):
    buf = io.StringIO()
    _write_csv_stream(t, buf)
    return buf.getvalue()
