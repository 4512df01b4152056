"""Matrix files.

Text: a ``d n`` header line, then d*n whitespace-separated values in
column-major order. Binary: two little-endian uint64 (d, n) followed by
d*n little-endian float64 values, column-major.
"""

from pathlib import Path

import numpy as np

from .sampling import InvalidArgument

_HEADER = np.dtype("<u8")
_VALUES = np.dtype("<f8")


def _is_binary(path, fmt):
    if fmt == "auto":
        return Path(path).suffix in (".bin", ".f64")
    if fmt not in ("text", "binary"):
        raise InvalidArgument(f"unknown matrix format {fmt!r}")
    return fmt == "binary"


def save_matrix(path, X, fmt="auto"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgument("only 2-D matrices can be saved")
    d, n = X.shape
    flat = X.ravel(order="F")
    if _is_binary(path, fmt):
        with open(path, "wb") as fh:
            fh.write(np.array([d, n], dtype=_HEADER).tobytes())
            fh.write(flat.astype(_VALUES).tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"{d} {n}\n")
            np.savetxt(fh, flat, fmt="%.17g")


def load_matrix(path, fmt="auto"):
    if _is_binary(path, fmt):
        raw = Path(path).read_bytes()
        if len(raw) < 16:
            raise InvalidArgument("binary matrix file shorter than its header")
        d, n = (int(v) for v in np.frombuffer(raw[:16], dtype=_HEADER))
        vals = np.frombuffer(raw[16:], dtype=_VALUES)
    else:
        with open(path) as fh:
            head = fh.readline().split()
            if len(head) != 2:
                raise InvalidArgument("text matrix header must be 'd n'")
            d, n = int(head[0]), int(head[1])
            vals = np.array(fh.read().split(), dtype=np.float64)
    if vals.size != d * n:
        raise InvalidArgument(f"expected {d * n} values, found {vals.size}")
    return vals.reshape((d, n), order="F").copy()
