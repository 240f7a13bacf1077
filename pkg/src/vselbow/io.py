"""Output plumbing: atomic writes, provenance stamps, trajectory CSVs."""
import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import __version__
from .plant import format_log


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


# keys that change where or how fast a run executes, not what it computes
EXECUTION_KEYS = (("output_dir",), ("characterize", "parallel"))


def config_hash(doc) -> str:
    doc = json.loads(json.dumps(doc))
    for path in EXECUTION_KEYS:
        node = doc
        for key in path[:-1]:
            node = node.get(key, {})
        node.pop(path[-1], None)
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def provenance(doc, seed=0):
    return {"tool": "vselbow", "version": __version__, "config_sha256": config_hash(doc), "seed": int(seed)}


def stamp(prov) -> str:
    """One-line provenance comment for CSV headers."""
    return f"vselbow {prov['version']} config_sha256={prov['config_sha256']} seed={prov['seed']}"


def atomic_write(path, text):
    """Write ``text`` via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


def write_json(path, doc, prov):
    out = {"provenance": prov, **doc}
    return atomic_write(path, json.dumps(out, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_table(path, columns, rows, prov):
    return atomic_write(path, format_log(rows, columns, stamp(prov)))


def write_trajectory(path, traj, prov):
    return write_table(path, traj.columns, traj.rows, prov)


def read_table(path):
    """Read a CSV written by :func:`write_table`: ``(columns, rows)`` with floats."""
    columns, rows = None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if columns is None:
                columns = tuple(cells)
            else:
                rows.append(tuple(float(c) for c in cells))
    return columns, rows
