"""Shared plumbing: provenance headers, config hashing, delimited-file helpers.

Every artifact file starts with a `#` provenance line carrying the tool
version, a hash of the effective configuration and the seeds in play, so
reruns are diffable end to end.  Readers in this package skip `#` lines.
"""

import hashlib
from pathlib import Path

from hategraph import __version__


def config_hash(params: dict) -> str:
    """Stable 12-hex-digit hash of a flat parameter mapping."""
    blob = "\n".join(f"{k}={params[k]}" for k in sorted(params))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def provenance_line(stage: str, params: dict) -> str:
    seeds = {k: v for k, v in params.items() if "seed" in k}
    seed_part = " ".join(f"{k}={v}" for k, v in sorted(seeds.items()))
    return (
        f"# hategraph {__version__} stage={stage} "
        f"config_hash={config_hash(params)}"
        + (f" {seed_part}" if seed_part else "")
    )


def write_delimited(path, header: list[str], rows, stage: str, params: dict, sep=","):
    """Write provenance line + header + rows. Rows are pre-formatted strings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(provenance_line(stage, params) + "\n")
        fh.write(sep.join(header) + "\n")
        for row in rows:
            fh.write(sep.join(str(v) for v in row) + "\n")


def data_lines(path):
    """Yield (line_number, stripped_line) for non-blank, non-comment lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.rstrip("\n").rstrip("\r")
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            yield lineno, stripped


def fmt(x) -> str:
    """Round-trip float formatting (shortest repr), stable across reruns."""
    if isinstance(x, float):
        return repr(float(x))  # numpy scalars repr as np.float64(...)
    return str(x)
