"""Line-delimited record I/O shared by every pipeline stage.

All on-disk artifacts are JSONL: one object per line, keys sorted, no
trailing whitespace. Writers are atomic (write to a temp file in the same
directory, then rename) so a failed run never leaves a partial artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator


def dumps_record(obj: Any) -> str:
    """Serialize one record deterministically (stable key order, no spaces)."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str | Path, records: Iterable[Any]) -> int:
    """Atomically write records to `path`; returns the number written."""
    path = Path(path)
    count = 0
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(dumps_record(record))
                handle.write("\n")
                count += 1
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return count


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    manifest_path: str | Path,
    config: dict,
    inputs: dict[str, str | Path],
    outputs: dict[str, str | Path],
) -> None:
    """Record config echo plus content hashes of inputs/outputs for exact replay."""
    manifest = {
        "config": config,
        "inputs": {name: sha256_file(p) for name, p in sorted(inputs.items())},
        "outputs": {name: sha256_file(p) for name, p in sorted(outputs.items())},
    }
    path = Path(manifest_path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    os.replace(tmp_name, path)


def derive_seed(seed: int, *scope: object) -> int:
    """Derive a stable per-scope seed so parallel units draw independent streams.

    Uses SHA-256 rather than hash() so results are identical across runs,
    platforms and PYTHONHASHSEED settings.
    """
    payload = "\x00".join([str(seed), *[str(part) for part in scope]])
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
