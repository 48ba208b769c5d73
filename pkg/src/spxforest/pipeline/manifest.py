"""Hash-chained stage manifests.

Every stage run writes ``manifests/<name>.txt`` listing the SHA-256 of each
input and output file (paths relative to the output directory) plus the hash
of each upstream manifest.  Before a stage reads upstream artifacts it checks
that the files still match their manifest.
"""

import hashlib
from pathlib import Path


class StaleArtifactError(RuntimeError):
    pass


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(root: Path, name: str) -> Path:
    return Path(root) / "manifests" / f"{name}.txt"


def write_manifest(root, name, outputs, upstream=(), inputs=(), extra=None):
    """Record ``outputs`` (relative to ``root``), external ``inputs`` and the
    hashes of ``upstream`` manifests."""
    root = Path(root)
    lines = [f"stage = {name}"]
    for k, v in sorted((extra or {}).items()):
        lines.append(f"info.{k} = {v}")
    for up in sorted(upstream):
        lines.append(f"upstream.{up} = {sha256(manifest_path(root, up))}")
    for p in sorted(inputs, key=str):
        lines.append(f"input.{Path(p).name} = {sha256(p)}")
    for rel in sorted(str(Path(o).relative_to(root)) for o in outputs):
        lines.append(f"output.{rel} = {sha256(root / rel)}")
    path = manifest_path(root, name)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(root, name) -> dict:
    path = manifest_path(root, name)
    out = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        k, v = line.split(" = ", 1)
        out[k] = v
    return out


def require(root, name, what):
    """Check manifest ``name`` exists and its outputs are unchanged.

    ``what`` describes the artifact for the error message.
    """
    root = Path(root)
    path = manifest_path(root, name)
    if not path.is_file():
        raise StaleArtifactError(f"missing upstream artifact: {what} (run that stage first)")
    m = read_manifest(root, name)
    for k, v in m.items():
        if not k.startswith("output."):
            continue
        f = root / k[len("output."):]
        if not f.is_file():
            raise StaleArtifactError(f"stale upstream artifact: {what}: {f} is missing")
        if sha256(f) != v:
            raise StaleArtifactError(f"stale upstream artifact: {what}: {f} changed since it was written")
    return m
