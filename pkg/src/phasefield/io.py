"""
Files: atomic JSON reports, RFC-4180 CSV tables, plot scripts and a binary
container for sampled transform fields.

Binary layout (little-endian)::

    b"PFGF"  u32 version  u32 n  u64 m
    f64[m * 2n]  X samples
    per Xi axis (2n of them): f64 center, f64 half_width, i64 points
    u8 has_weights  [f64[m] weights]
    complex64[m * prod(points)] values
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grids import Axis, PhaseGrid

MAGIC = b"PFGF"
FORMAT_VERSION = 1


# -- JSON ----------------------------------------------------------------------

def to_jsonable(obj):
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Canonical text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(config):
    """SHA-256 of the canonical compact form of a config mapping."""
    text = json.dumps(to_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write_bytes(path, data):
    """Write through a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj):
    return atomic_write_bytes(path, dumps(obj).encode("utf-8"))


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- CSV -----------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_text(header, rows):
    """RFC-4180 text (CRLF line ends, minimal quoting, ``.`` decimals)."""
    import io as _io
    buf = _io.StringIO(newline="")
    w = csv.writer(buf, dialect="excel", lineterminator="\r\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    return atomic_write_bytes(path, csv_text(header, rows).encode("utf-8"))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def diag_field_csv(field_):
    return csv_text(field_.csv_header, field_.rows())


def matrix_samples_csv(samples):
    """Rows ``x, xi, y, eta, modulus, route`` for :class:`MatrixElementSample` records."""
    rows = [[*np.ravel(s.X), *np.ravel(s.Xi), float(s.modulus), s.route] for s in samples]
    return csv_text(("x", "xi", "y", "eta", "modulus", "route"), rows)


# -- plot scripts --------------------------------------------------------------

def plot_script(csv_name, x, y, title, logy=False, group=None):
    """Text of a standalone matplotlib script plotting two CSV columns."""
    lines = [
        "import csv",
        "import matplotlib.pyplot as plt",
        "",
        f"with open({csv_name!r}, newline='') as fh:",
        "    rows = list(csv.DictReader(fh))",
    ]
    if group:
        lines += [
            "groups = {}",
            "for r in rows:",
            f"    groups.setdefault(r[{group!r}], []).append(r)",
            "for key, rs in sorted(groups.items()):",
            f"    plt.plot([float(r[{x!r}]) for r in rs], [float(r[{y!r}]) for r in rs], '.', label=key)",
            "plt.legend()",
        ]
    else:
        lines += [f"plt.plot([float(r[{x!r}]) for r in rows], [float(r[{y!r}]) for r in rows], '.')"]
    if logy:
        lines.append("plt.yscale('log')")
    lines += [f"plt.xlabel({x!r})", f"plt.ylabel({y!r})", f"plt.title({title!r})",
              f"plt.savefig({(Path(csv_name).stem + '.png')!r}, dpi=120)", ""]
    return "\n".join(lines)


def write_plot_script(path, csv_name, x, y, title, logy=False, group=None):
    return atomic_write_bytes(path, plot_script(csv_name, x, y, title, logy, group).encode("utf-8"))


# -- binary field container -----------------------------------------------------

def field_bytes(field_):
    """Serialize a :class:`GstftField`; values are stored as complex64."""
    X = np.ascontiguousarray(field_.X_samples, dtype="<f8")
    m, two_n = X.shape
    parts = [MAGIC, struct.pack("<IIQ", FORMAT_VERSION, two_n // 2, m), X.tobytes()]
    for ax in field_.Xi_grid.axes:
        parts.append(struct.pack("<ddq", ax.center, ax.half_width, ax.points))
    w = field_.X_weights
    parts.append(struct.pack("<B", 0 if w is None else 1))
    if w is not None:
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(field_.values, dtype="<c8").tobytes())
    return b"".join(parts)


def save_field(path, field_):
    return atomic_write_bytes(path, field_bytes(field_))


def field_from_bytes(data):
    """Inverse of :func:`field_bytes`.

    Raises
    ------
    ValueError
        On a bad magic, unknown version or truncated payload.
    """
    from .gstft import GstftField

    view = memoryview(data)
    if bytes(view[:4]) != MAGIC:
        raise ValueError("not a field container")
    ver, n, m = struct.unpack_from("<IIQ", view, 4)
    if ver != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {ver}")
    off = 4 + 16
    need = lambda k: _check(view, off + k)
    need(8 * m * 2 * n)
    X = np.frombuffer(view, "<f8", m * 2 * n, off).reshape(m, 2 * n)
    off += 8 * m * 2 * n
    axes = []
    for _ in range(2 * n):
        need(24)
        c, hw, p = struct.unpack_from("<ddq", view, off)
        axes.append(Axis(c, hw, int(p)))
        off += 24
    grid = PhaseGrid(tuple(axes))
    need(1)
    (flag,) = struct.unpack_from("<B", view, off)
    off += 1
    w = None
    if flag:
        need(8 * m)
        w = np.frombuffer(view, "<f8", m, off).copy()
        off += 8 * m
    count = m * grid.size
    need(8 * count)
    vals = np.frombuffer(view, "<c8", count, off).astype(complex).reshape((m,) + grid.shape)
    off += 8 * count
    if off != len(view):
        raise ValueError("trailing bytes in field container")
    return GstftField(X.copy(), grid, vals, w)


def _check(view, end):
    if end > len(view):
        raise ValueError("truncated field container")


def load_field(path):
    return field_from_bytes(Path(path).read_bytes())
