"""Cube files, matrix CSVs and PGM band exports.

A cube file is one JSON header line (terminated by ``\\n``) immediately
followed by the raw little-endian float64 payload in first-index-fastest
order. Header keys: ``format``, ``version``, ``dims``, ``axes``, ``dtype``,
``order`` and optionally ``wavelengths``.
"""
import csv
import json
import re
from pathlib import Path

import numpy as np

FORMAT = "tvunmix-cube"
AXES = ["row", "col", "band"]


class CubeFileError(ValueError):
    pass


def write_cube(cube, path, wavelengths=None, axes=None):
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim != 3:
        raise ValueError(f"expected a 3-D array, got shape {cube.shape}")
    header = {
        "format": FORMAT,
        "version": 1,
        "dims": list(cube.shape),
        "axes": list(axes or AXES),
        "dtype": "<f8",
        "order": "F",
    }
    if wavelengths is not None:
        header["wavelengths"] = [float(w) for w in wavelengths]
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(cube.astype("<f8").tobytes(order="F"))


def read_cube_header(path):
    cube, header = _read(path)
    return header


def read_cube(path, with_header=False):
    cube, header = _read(path)
    return (cube, header) if with_header else cube


def _read(path):
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CubeFileError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CubeFileError(f"{path}: malformed header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise CubeFileError(f"{path}: not a {FORMAT} file")
    dims = header.get("dims")
    if (not isinstance(dims, list) or len(dims) != 3
            or not all(isinstance(d, int) and d >= 1 for d in dims)):
        raise CubeFileError(f"{path}: invalid dims {dims!r}")
    if header.get("dtype") != "<f8" or header.get("order") != "F":
        raise CubeFileError(f"{path}: unsupported dtype/order")
    payload = raw[nl + 1:]
    expected = 8 * dims[0] * dims[1] * dims[2]
    if len(payload) != expected:
        raise CubeFileError(
            f"{path}: payload has {len(payload)} bytes, expected {expected} "
            f"for dims {dims}")
    cube = np.frombuffer(payload, dtype="<f8").reshape(dims, order="F").astype(np.float64)
    return cube, header


def write_matrix_csv(mat, path, column_names=None):
    """Matrix as CSV: header row of column names, one row per matrix row."""
    mat = np.asarray(mat, dtype=np.float64)
    names = column_names or [f"c{j}" for j in range(mat.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in mat:
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    return np.array([[float(c) for c in r] for r in rows[1:]]).reshape(-1, len(names)), names


def band_to_gray(slice2d):
    """Min-max map a 2-D slice to uint8; constant slices become 128."""
    s = np.asarray(slice2d, dtype=np.float64)
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        return np.full(s.shape, 128, dtype=np.uint8), lo, hi
    img = np.rint((s - lo) / (hi - lo) * 255.0)
    return np.clip(img, 0, 255).astype(np.uint8), lo, hi


def export_band(cube, band, path):
    """Write band ``band`` (0-based) as binary PGM plus a ``.json`` sidecar.

    Image rows follow the cube's first axis. The sidecar records the
    normalization bounds.
    """
    cube = np.asarray(cube, dtype=np.float64)
    if not 0 <= band < cube.shape[2]:
        raise ValueError(f"band {band} out of range 0..{cube.shape[2] - 1}")
    img, lo, hi = band_to_gray(cube[:, :, band])
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes(order="C"))
    side = {"band": int(band), "min": lo, "max": hi, "width": w, "height": h}
    Path(str(path) + ".json").write_text(json.dumps(side, sort_keys=True, indent=2) + "\n")
    return img


def read_pgm(path):
    raw = Path(path).read_bytes()
    match = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if match is None:
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in match.groups())
    data = raw[match.end():match.end() + w * h]
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w), maxval
