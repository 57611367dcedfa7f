"""Plain-text table files.

A table file is a short header followed by one record per cell::

    # anything after '#' is a comment
    table: observed            # observed | full
    cardinalities: 2 2
    values: probability        # probability | count
    names: X1 X2               # optional
    labels: yes,no | yes,no    # optional, one group per variable
    00  1,1  0.168
    01  1,*  0.24
    11  *,*  0.10

Records are ``pattern values weight`` separated by whitespace. The pattern
is a string over {0,1} (1 = missing); values are comma-separated 1-based
categories with ``*`` in the missing coordinates (full tables give every
value). Cells that are not listed are zero. Count files are normalized
when read as observed tables.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np

from .errors import TableFormatError
from .tables import MISSING, CategorySpace, FullTable, MissPattern, ObservedTable

_HEADER_KEYS = ("table", "cardinalities", "values", "names", "labels", "p")


def fmt(x: float) -> str:
    """17 significant digits: lossless round trip for doubles."""
    return format(float(x), ".17g")


class CountTable:
    """Nonnegative integer counts over observed-data cells (materialized layout)."""

    def __init__(self, space: CategorySpace, counts):
        counts = np.asarray(counts)
        if counts.shape != space.materialized_shape:
            raise TableFormatError(f"count table shape {counts.shape} does not match {space.materialized_shape}")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise TableFormatError("counts must be nonnegative integers")
        if counts.sum() < 1:
            raise TableFormatError("count table is empty")
        self.space = space
        self.counts = counts.astype(np.int64)
        self.counts.flags.writeable = False

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_observed(self) -> ObservedTable:
        return ObservedTable(self.space, self.counts.astype(float))


def _parse(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TableFormatError(f"{path}: {exc.strerror}") from exc
    header: dict[str, str] = {}
    records = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        if sep and key.strip().lower() in _HEADER_KEYS:
            if records:
                raise TableFormatError(f"{path}:{lineno}: header line after cell records")
            header[key.strip().lower()] = rest.strip()
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TableFormatError(f"{path}:{lineno}: expected 'pattern values weight', got {raw!r}")
        records.append((lineno, *parts))

    if "cardinalities" not in header:
        raise TableFormatError(f"{path}: missing 'cardinalities:' header")
    try:
        cards = tuple(int(c) for c in header["cardinalities"].replace(",", " ").split())
    except ValueError as exc:
        raise TableFormatError(f"{path}: bad cardinalities {header['cardinalities']!r}") from exc
    if "p" in header and int(header["p"]) != len(cards):
        raise TableFormatError(f"{path}: p = {header['p']} but {len(cards)} cardinalities given")
    names = tuple(header["names"].split()) if "names" in header else None
    labels = None
    if "labels" in header:
        labels = tuple(tuple(s.strip() for s in grp.split(",")) for grp in header["labels"].split("|"))
    try:
        space = CategorySpace(cards, names, labels)
    except ValueError as exc:
        raise TableFormatError(f"{path}: {exc}") from exc
    kind = header.get("table", "observed").lower()
    values = header.get("values", "probability").lower()
    if kind not in ("observed", "full") or values not in ("probability", "count"):
        raise TableFormatError(f"{path}: unsupported table/values header ({kind}, {values})")
    return path, space, kind, values, records


def _fill(path, space, kind, values, records):
    p = space.p
    shape = space.materialized_shape if kind == "observed" else space.full_shape
    arr = np.zeros(shape)
    seen = set()
    for lineno, pat_s, val_s, w_s in records:
        try:
            pat = MissPattern.from_string(pat_s)
        except ValueError as exc:
            raise TableFormatError(f"{path}:{lineno}: {exc}") from exc
        vals = val_s.split(",")
        if len(pat) != p or len(vals) != p:
            raise TableFormatError(f"{path}:{lineno}: expected {p} coordinates")
        idx = []
        for j, (b, v, c) in enumerate(zip(pat.bits, vals, space.cardinalities)):
            if kind == "observed" and b:
                if v != MISSING:
                    raise TableFormatError(f"{path}:{lineno}: variable {j + 1} is missing but has value {v!r}")
                idx.append(c)
                continue
            try:
                iv = int(v)
            except ValueError:
                raise TableFormatError(f"{path}:{lineno}: variable {j + 1} needs a category, got {v!r}") from None
            if not 1 <= iv <= c:
                raise TableFormatError(f"{path}:{lineno}: category {iv} out of range 1..{c} for variable {j + 1}")
            idx.append(iv - 1)
        if kind == "full":
            idx += list(pat.bits)
        key = tuple(idx)
        if key in seen:
            raise TableFormatError(f"{path}:{lineno}: duplicate cell")
        seen.add(key)
        try:
            w = float(w_s)
        except ValueError:
            raise TableFormatError(f"{path}:{lineno}: weight {w_s!r} is not a number") from None
        if not math.isfinite(w) or w < 0:
            raise TableFormatError(f"{path}:{lineno}: weight must be finite and nonnegative")
        if values == "count" and w != int(w):
            raise TableFormatError(f"{path}:{lineno}: count {w_s!r} is not an integer")
        arr[key] = w
    if arr.sum() <= 0:
        raise TableFormatError(f"{path}: table has no positive mass")
    return arr


def read_observed(path) -> ObservedTable:
    path, space, kind, values, records = _parse(path)
    if kind != "observed":
        raise TableFormatError(f"{path}: expected an observed table, found '{kind}'")
    return ObservedTable(space, _fill(path, space, kind, values, records))


def read_full(path) -> FullTable:
    path, space, kind, values, records = _parse(path)
    if kind != "full":
        raise TableFormatError(f"{path}: expected a full table, found '{kind}'")
    return FullTable(space, _fill(path, space, kind, values, records))


def read_counts(path) -> CountTable:
    path, space, kind, values, records = _parse(path)
    if kind != "observed" or values != "count":
        raise TableFormatError(f"{path}: expected an observed table of counts")
    return CountTable(space, _fill(path, space, kind, values, records))


def _header(space: CategorySpace, kind: str, values: str, comment: str | None) -> list[str]:
    lines = [f"# {line}" for line in (comment or "").splitlines()]
    lines += [f"table: {kind}", "cardinalities: " + " ".join(map(str, space.cardinalities)), f"values: {values}"]
    if space.names:
        lines.append("names: " + " ".join(space.names))
    if space.labels:
        lines.append("labels: " + " | ".join(",".join(lab) for lab in space.labels))
    return lines


def format_observed(table: ObservedTable | CountTable, comment: str | None = None) -> str:
    if isinstance(table, CountTable):
        lines = _header(table.space, "observed", "count", comment)
        cells = ObservedTable(table.space, np.ones(table.space.materialized_shape)).cells()
        flat = table.counts.ravel()
        for (pat, vals, _), n in zip(cells, flat):
            lines.append(f"{pat} {','.join(map(str, vals))} {int(n)}")
    else:
        lines = _header(table.space, "observed", "probability", comment)
        for pat, vals, w in table.cells():
            lines.append(f"{pat} {','.join(map(str, vals))} {fmt(w)}")
    return "\n".join(lines) + "\n"


def format_full(table: FullTable, comment: str | None = None) -> str:
    lines = _header(table.space, "full", "probability", comment)
    for pat, vals, w in table.cells():
        lines.append(f"{pat} {','.join(map(str, vals))} {fmt(w)}")
    return "\n".join(lines) + "\n"


def write_observed(table, path, comment: str | None = None) -> None:
    Path(path).write_text(format_observed(table, comment))


def write_full(table: FullTable, path, comment: str | None = None) -> None:
    Path(path).write_text(format_full(table, comment))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
