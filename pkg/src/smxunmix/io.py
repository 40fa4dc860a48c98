"""On-disk formats: binary cube (SMXC), binary model (SMXM), spectral
library CSV and PGM map rasters.  All writes are atomic (temp + rename)."""
import csv
import json
import os
import struct
import tempfile

import numpy as np

from .datagen import AbundanceMap, HsiCube, SpectralLibrary
from .errors import (BadMagicError, ContractError, FormatError, LibraryParseError,
                     TruncatedFileError, VersionMismatchError)
from .model import ACTIVATIONS, ModelParams, encoder_sizes, nonlinear_sizes

CUBE_MAGIC = b"SMXC"
MODEL_MAGIC = b"SMXM"
CUBE_VERSION = 1
MODEL_VERSION = 1
LAYOUT_BSQ = 0

_CUBE_HEADER = struct.Struct("<4sIIIII")  # magic, version, B, height, width, layout
_MODEL_HEADER = struct.Struct("<4sIIIId")  # magic, version, B, R, activation, slope
_U32 = struct.Struct("<I")


def atomic_write(path, data):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


def _check_magic(buf, magic, header, version):
    if len(buf) < 4 or buf[:4] != magic:
        raise BadMagicError(f"expected magic {magic!r}, found {bytes(buf[:4])!r}")
    if len(buf) < header.size:
        raise TruncatedFileError("file ends inside the header")
    fields = header.unpack_from(buf)
    if fields[1] != version:
        raise VersionMismatchError(f"format version {fields[1]}, this reader handles {version}")
    return fields


# --- cubes ---------------------------------------------------------------

def cube_to_bytes(cube):
    h, w = cube.layout
    parts = [_CUBE_HEADER.pack(CUBE_MAGIC, CUBE_VERSION, cube.bands, h, w, LAYOUT_BSQ),
             np.ascontiguousarray(cube.data, dtype="<f8").tobytes()]
    if cube.provenance is not None:
        blob = json.dumps(cube.provenance, sort_keys=True).encode("utf-8")
        parts += [_U32.pack(len(blob)), blob]
    return b"".join(parts)


def cube_from_bytes(buf):
    _, _, B, h, w, layout = _check_magic(buf, CUBE_MAGIC, _CUBE_HEADER, CUBE_VERSION)
    if layout != LAYOUT_BSQ:
        raise FormatError(f"unsupported layout tag {layout}")
    off = _CUBE_HEADER.size
    nbytes = B * h * w * 8
    if len(buf) < off + nbytes:
        raise TruncatedFileError(f"payload needs {nbytes} bytes, file has {len(buf) - off}")
    # band-major: row b is band b's raster, pixels in row-major order
    data = np.frombuffer(buf, dtype="<f8", count=B * h * w, offset=off).reshape(B, h * w)
    off += nbytes
    provenance = None
    if len(buf) > off:
        if len(buf) < off + 4:
            raise TruncatedFileError("file ends inside the provenance length")
        (n,) = _U32.unpack_from(buf, off)
        off += 4
        if len(buf) < off + n:
            raise TruncatedFileError("file ends inside the provenance block")
        if len(buf) > off + n:
            raise FormatError("trailing bytes after provenance block")
        provenance = json.loads(bytes(buf[off:off + n]).decode("utf-8"))
    return HsiCube(data.astype(np.float64), (h, w), provenance)


def write_cube(cube, path):
    atomic_write(path, cube_to_bytes(cube))


def read_cube(path):
    return cube_from_bytes(_read_bytes(path))


def write_abundances(amap, path):
    """Abundance maps are stored as R-band cubes."""
    write_cube(HsiCube(amap.values, amap.layout), path)


def read_abundances(path):
    c = read_cube(path)
    return AbundanceMap(c.data, c.layout)


# --- models --------------------------------------------------------------

def model_to_bytes(p):
    head = _MODEL_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, p.B, p.R,
                              ACTIVATIONS.index(p.activation), float(p.slope))
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in p.tensors())
    return head + body


def _model_shapes(B, R):
    es, ns = encoder_sizes(B, R), nonlinear_sizes(B, R)
    shapes = []
    for i in range(4):
        shapes += [(es[i + 1], es[i]), (es[i + 1],)]
    shapes.append((B, R))
    for i in range(3):
        shapes += [(ns[i + 1], ns[i]), (ns[i + 1],)]
    return shapes


def model_from_bytes(buf):
    _, _, B, R, act, slope = _check_magic(buf, MODEL_MAGIC, _MODEL_HEADER, MODEL_VERSION)
    if act >= len(ACTIVATIONS):
        raise FormatError(f"unknown activation tag {act}")
    shapes = _model_shapes(B, R)
    total = sum(int(np.prod(s)) for s in shapes)
    off = _MODEL_HEADER.size
    if len(buf) < off + 8 * total:
        raise TruncatedFileError("model file ends inside the tensor payload")
    if len(buf) > off + 8 * total:
        raise FormatError("trailing bytes after model tensors")
    arrays = []
    for s in shapes:
        k = int(np.prod(s))
        arrays.append(np.frombuffer(buf, "<f8", k, off).reshape(s).astype(np.float64))
        off += 8 * k
    return ModelParams.from_tensors(B, R, arrays, ACTIVATIONS[act], slope)


def write_model(p, path):
    atomic_write(path, model_to_bytes(p))


def read_model(path):
    return model_from_bytes(_read_bytes(path))


# --- spectral library CSV ------------------------------------------------

def write_library(lib, path):
    lines = [",".join(["wavelength_nm", *lib.names])]
    for j in range(lib.bands):
        row = [repr(float(lib.wavelengths[j]))]
        row += [repr(float(v)) for v in lib.spectra[j]]
        lines.append(",".join(row))
    atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def read_library(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise LibraryParseError("empty file", 1)
    header = [c.strip() for c in rows[0]]
    if len(header) < 2:
        raise LibraryParseError("header needs a wavelength column and at least one spectrum", 1)
    try:
        float(header[0])
        raise LibraryParseError("missing header row", 1)
    except ValueError:
        pass
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise LibraryParseError(f"expected {len(header)} fields, found {len(row)}", lineno)
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise LibraryParseError(str(exc), lineno) from None
        if len(values) > 1 and not values[-1][0] > values[-2][0]:
            raise LibraryParseError("wavelengths must be strictly increasing", lineno)
    if not values:
        raise LibraryParseError("no data rows", len(rows))
    arr = np.array(values)
    return SpectralLibrary(arr[:, 0], arr[:, 1:], header[1:])


# --- map rasters ---------------------------------------------------------

def map_to_pgm(values, layout, vmax=None):
    """Binary PGM bytes; values scaled linearly from [0, vmax] to [0, 255]."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if layout is None:
        raise ContractError("map layout is unknown")
    h, w = (int(v) for v in layout)
    if h * w != values.size:
        raise ContractError(f"layout {h}x{w} does not hold {values.size} values")
    if vmax is None:
        vmax = float(values.max()) if values.size else 0.0
    if vmax > 0:
        pix = np.clip(np.rint(values / vmax * 255.0), 0, 255).astype(np.uint8)
    else:
        pix = np.zeros(values.size, dtype=np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.tobytes()


def export_map(values, layout, path, vmax=None):
    atomic_write(path, map_to_pgm(values, layout, vmax))


def read_pgm(path):
    """Minimal P5 reader (maxval 255) returning an (h, w) uint8 array."""
    buf = _read_bytes(path)
    parts = buf.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) < 4:
        raise BadMagicError("not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise FormatError("only maxval 255 is supported")
    pix = np.frombuffer(parts[3], dtype=np.uint8)
    if pix.size != w * h:
        raise TruncatedFileError("PGM raster size mismatch")
    return pix.reshape(h, w)
