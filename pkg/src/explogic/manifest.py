"""Run manifests: a JSON sidecar recording what produced each artifact.

The manifest is the only artifact allowed to differ between identical runs,
and only in its timestamp field; everything it describes (hashes, config,
seeds) must be byte-stable so any run can be audited or regenerated.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path

from . import __version__

MANIFEST_FORMAT = "explogic-manifest 1"


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def dataset_hash(paths) -> str:
    """One digest over several files, order-independent via sorted names."""
    h = hashlib.sha256()
    for p in sorted(Path(p).name for p in paths):
        h.update(p.encode())
    for p in sorted(paths, key=lambda p: Path(p).name):
        h.update(bytes.fromhex(file_sha256(p)))
    return h.hexdigest()


def write_manifest(
    path,
    command: str,
    config: dict | None = None,
    seeds: dict | None = None,
    model_hash: str | None = None,
    data_hash: str | None = None,
    artifacts: dict | None = None,
    extra: dict | None = None,
) -> dict:
    """Write the manifest JSON; artifact values are sha256 digests."""
    doc = {
        "format": MANIFEST_FORMAT,
        "command": command,
        "tool_version": __version__,
        "config": config or {},
        "seeds": seeds or {},
        "model_hash": model_hash,
        "dataset_hash": data_hash,
        "artifacts": artifacts or {},
        "created": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def hash_artifacts(paths) -> dict:
    return {Path(p).name: file_sha256(p) for p in paths}
