"""Delimited-text datasets on the u- or x-scale."""
from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .copula import EPS
from .fileio import atomic_write_text
from .rvine import CopulaSample

log = logging.getLogger(__name__)

SCALES = ("u", "x")


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    source: str
    names: tuple
    scale: str
    data: np.ndarray

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def d(self):
        return self.data.shape[1]

    @property
    def sample(self):
        return CopulaSample(self.data, self.names)


def pseudo_observations(x):
    """Column-wise ranks divided by ``n + 1`` (ties get average ranks)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise DataError(f"expected a two-dimensional array, got shape {x.shape}")
    n = x.shape[0]
    for k in range(x.shape[1]):
        if n > 1 and np.ptp(x[:, k]) == 0.0:
            raise DataError(f"column {k + 1} is constant; its rank transform is degenerate")
    return stats.rankdata(x, axis=0) / (n + 1.0)


def _sniff(text):
    head = text[:4096]
    try:
        return csv.Sniffer().sniff(head, delimiters=",;\t ").delimiter
    except csv.Error:
        return ","


def parse_delimited(text, source="<string>"):
    """Header row plus numeric rows -> (names, n x d array)."""
    delim = _sniff(text)
    reader = csv.reader(io.StringIO(text), delimiter=delim, skipinitialspace=True)
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{source}: no header row")
    names = tuple(c.strip() for c in rows[0])
    if len(set(names)) != len(names):
        raise DataError(f"{source}: duplicate column names")
    d = len(names)
    out = np.empty((len(rows) - 1, d))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != d:
            raise DataError(f"{source}: line {r} has {len(row)} fields, expected {d}")
        for c, cell in enumerate(row):
            try:
                out[r - 2, c] = float(cell)
            except ValueError:
                raise DataError(f"{source}: non-numeric value {cell!r} at line {r}, "
                                f"column {c + 1} ({names[c]})") from None
    return names, out


def ingest(path, scale="u"):
    """Read a delimited file with a header row.

    u-scale values must lie in [0, 1]; exact 0 or 1 are clamped to
    ``[eps, 1 - eps]`` with a warning.  x-scale columns are replaced by their
    ranks over ``n + 1``.
    """
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}, got {scale!r}")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    names, x = parse_delimited(text, os.fspath(path))
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))[0]
        raise DataError(f"{path}: non-finite value at line {bad[0] + 2}, column {bad[1] + 1}")
    if scale == "x":
        u = pseudo_observations(x)
    else:
        if x.size and (x.min() < 0.0 or x.max() > 1.0):
            bad = np.argwhere((x < 0.0) | (x > 1.0))[0]
            raise DataError(f"{path}: u-scale value {x[bad[0], bad[1]]} outside [0, 1] at "
                            f"line {bad[0] + 2}, column {bad[1] + 1}")
        edge = (x < EPS) | (x > 1.0 - EPS)
        if edge.any():
            log.warning("%s: %d u-scale values at the boundary clamped to [%g, 1 - %g]",
                        path, int(edge.sum()), EPS, EPS)
        u = np.clip(x, EPS, 1.0 - EPS)
    return Dataset(os.fspath(path), names, scale, u)


def format_delimited(data, names, delimiter=","):
    data = np.asarray(data, dtype=float).reshape(-1, len(names))
    buf = io.StringIO()
    buf.write(delimiter.join(names) + "\n")
    for row in data:
        buf.write(delimiter.join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def write_delimited(path, data, names, delimiter=","):
    atomic_write_text(path, format_delimited(data, names, delimiter))
