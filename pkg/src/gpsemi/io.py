"""Tables and run metadata.

Tables are delimiter-separated text with a one-line header and every number
written with 17 significant digits, so identical runs give identical bytes.
Metadata is a JSON document with sorted keys and no timestamps.
"""
import json
import os

import numpy as np

__all__ = ["write_table", "read_table", "write_metadata", "read_metadata", "code_version"]

FMT = "%.17g"


def code_version():
    from . import __version__
    return __version__


def write_table(path, columns, delimiter=","):
    """Write ``columns`` (name -> 1D array, equal lengths) as a table."""
    names = list(columns)
    if not names:
        raise ValueError("no columns")
    cols = [np.asarray(columns[n], float).ravel() for n in names]
    length = cols[0].size
    if any(c.size != length for c in cols):
        raise ValueError("columns have different lengths")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    data = np.column_stack(cols) if length else np.zeros((0, len(cols)))
    with open(path, "w", newline="\n") as fh:
        fh.write(delimiter.join(names) + "\n")
        np.savetxt(fh, data, fmt=FMT, delimiter=delimiter)


def read_table(path, delimiter=None):
    """Read a table written by :func:`write_table` into name -> array.

    The delimiter is sniffed from the header (comma, tab or whitespace) when
    not given.
    """
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
    if delimiter is None:
        delimiter = "," if "," in header else ("\t" if "\t" in header else None)
    names = header.split(delimiter) if delimiter else header.split()
    data = np.loadtxt(path, delimiter=delimiter, skiprows=1, ndmin=2)
    if data.size and data.shape[1] != len(names):
        raise ValueError(f"{path}: header has {len(names)} names but rows have {data.shape[1]} fields")
    return {n.strip(): (data[:, i] if data.size else np.zeros(0)) for i, n in enumerate(names)}


def _default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_metadata(path, meta):
    """JSON metadata; ``code_version`` is added when missing."""
    meta = dict(meta)
    meta.setdefault("code_version", code_version())
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def read_metadata(path):
    with open(path) as fh:
        return json.load(fh)
