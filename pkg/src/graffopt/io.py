"""Matrix files and instance manifests.

A GRAFF v1 file starts with the ASCII line ``GRAFF v1 n k form=<form>``
where ``form`` is ``stiefel`` ((n+1) x (k+1) matrix), ``projection`` or
``matrix`` (both (n+1) x (n+1)). In text files the rows follow as
whitespace-separated decimals; in binary files the header line is followed
by the entries as little-endian float64 in row-major order.

Instance manifests are JSON documents listing the matrix files of an
instance together with a sha256 checksum of their contents.
"""
import hashlib
import json
from pathlib import Path

import numpy as np

from .coords import ProjectionPoint, StiefelPoint
from .errors import InvalidInput

MAGIC = "GRAFF v1"
FORMS = ("stiefel", "projection", "matrix")


def _shape(n, k, form):
    if form == "stiefel":
        return n + 1, k + 1
    if form in ("projection", "matrix"):
        return n + 1, n + 1
    raise InvalidInput(f"unknown form {form!r}")


def _header(n, k, form):
    return f"{MAGIC} {n} {k} form={form}"


def _parse_header(line):
    parts = line.strip().split()
    if len(parts) != 5 or " ".join(parts[:2]) != MAGIC or not parts[4].startswith("form="):
        raise InvalidInput(f"bad GRAFF header: {line!r}")
    n, k, form = int(parts[2]), int(parts[3]), parts[4][5:]
    if form not in FORMS:
        raise InvalidInput(f"unknown form {form!r}")
    return n, k, form


def _describe(obj, form, k):
    M = np.asarray(obj, dtype=float)
    if isinstance(obj, StiefelPoint):
        form, k = "stiefel", obj.k
    elif isinstance(obj, ProjectionPoint):
        form, k = "projection", obj.k
    if form is None:
        raise InvalidInput("form must be given for bare arrays")
    n = M.shape[0] - 1
    if form == "stiefel":
        k = M.shape[1] - 1
    if k is None:
        k = 0
    if M.shape != _shape(n, k, form):
        raise InvalidInput(f"shape {M.shape} does not match form {form}")
    return M, n, k, form


def write_matrix(path, obj, form=None, k=None, binary=False):
    """Write a point or matrix as a GRAFF v1 file."""
    M, n, k, form = _describe(obj, form, k)
    path = Path(path)
    header = _header(n, k, form)
    if binary:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii") + b"\n")
            fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(header + "\n")
            np.savetxt(fh, M, fmt="%.17g")
    return path


def read_matrix(path):
    """Read a GRAFF v1 file (text or binary).

    Returns
    -------
    StiefelPoint, ProjectionPoint or ndarray
        Depending on the ``form`` in the header.
    """
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise InvalidInput("missing GRAFF header")
    n, k, form = _parse_header(raw[:newline].decode("ascii", errors="replace"))
    shape = _shape(n, k, form)
    body = raw[newline + 1:]
    expected = shape[0] * shape[1] * 8
    if len(body) == expected and not _looks_textual(body):
        M = np.frombuffer(body, dtype="<f8").reshape(shape).astype(float)
    else:
        M = np.loadtxt(body.decode("ascii").splitlines(), ndmin=2)
        if M.shape != shape:
            raise InvalidInput(f"expected {shape} entries, got {M.shape}")
    if form == "stiefel":
        return StiefelPoint(M)
    if form == "projection":
        return ProjectionPoint(M, k)
    return M


def _looks_textual(body):
    try:
        text = body.decode("ascii")
    except UnicodeDecodeError:
        return False
    return all(ch in "0123456789+-.eEinfaINFA \t\r\n" for ch in text)


def checksum(paths):
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def save_instance(directory, inst, kind, binary=False):
    """Serialize a quadratic or mean instance with a JSON manifest.

    Parameters
    ----------
    directory : path-like
    inst : QuadraticInstance or MeanInstance
    kind : {"quadratic", "mean"}
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = "bin" if binary else "txt"
    if kind == "quadratic":
        files = [write_matrix(directory / f"M.{ext}", inst.M, "matrix", inst.k, binary)]
        m = 1
    elif kind == "mean":
        files = [write_matrix(directory / f"point{i}.{ext}", p, binary=binary)
                 for i, p in enumerate(inst.points)]
        m = len(files)
    else:
        raise InvalidInput(f"unknown instance kind {kind!r}")
    seed = inst.seed if isinstance(inst.seed, (int, type(None))) else str(inst.seed)
    manifest = {"kind": kind, "n": inst.n, "k": inst.k, "m": m, "seed": seed,
                "files": [f.name for f in files], "checksum": checksum(files)}
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_instance(manifest_path):
    """Load an instance saved by :func:`save_instance`, verifying its checksum."""
    from .problems import MeanInstance, QuadraticInstance

    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    files = [manifest_path.parent / name for name in manifest["files"]]
    if checksum(files) != manifest["checksum"]:
        raise InvalidInput("instance checksum mismatch")
    if manifest["kind"] == "quadratic":
        return QuadraticInstance(read_matrix(files[0]), manifest["n"], manifest["k"],
                                 manifest["seed"])
    return MeanInstance(tuple(read_matrix(f) for f in files), manifest["seed"])
