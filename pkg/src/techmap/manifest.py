"""Per-stage manifests for reproducibility checks.

Each stage writes manifest_<stage>.json recording the SHA-256 of every
input and output file plus the config hash and seed. No timestamps, so a
rerun with identical inputs produces an identical manifest. verify_chain
re-hashes everything and reports any drift, which also catches tampering
with intermediate files.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

STAGE_ORDER = ["ingest", "extract", "build", "analyze", "layout", "export"]


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def manifest_path(out_dir, stage: str) -> Path:
    return Path(out_dir) / f"manifest_{stage}.json"


def write_manifest(out_dir, stage: str, inputs: dict[str, Path],
                   outputs: dict[str, Path], config_hash: str, seed: int) -> dict:
    manifest = {
        "stage": stage,
        "seed": seed,
        "config_hash": config_hash,
        "inputs": {name: file_sha256(p) for name, p in sorted(inputs.items())},
        "outputs": {name: file_sha256(p) for name, p in sorted(outputs.items())},
    }
    with open(manifest_path(out_dir, stage), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def read_manifest(out_dir, stage: str) -> dict | None:
    path = manifest_path(out_dir, stage)
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def verify_chain(out_dir, input_dirs: dict[str, Path] | None = None) -> list[str]:
    """Re-hash recorded files for every stage manifest present.

    Input names that are plain file names are resolved inside out_dir (they
    are upstream outputs); absolute names are used as-is.
    """
    out_dir = Path(out_dir)
    errors: list[str] = []
    for stage in STAGE_ORDER:
        manifest = read_manifest(out_dir, stage)
        if manifest is None:
            continue
        for kind in ("inputs", "outputs"):
            for name, recorded in manifest[kind].items():
                candidate = Path(name)
                if not candidate.is_absolute():
                    candidate = out_dir / name
                if not candidate.exists():
                    errors.append(f"{stage}: {kind[:-1]} {name} is missing")
                    continue
                actual = file_sha256(candidate)
                if actual != recorded:
                    errors.append(
                        f"{stage}: {kind[:-1]} {name} hash mismatch "
                        f"(recorded {recorded[:12]}…, found {actual[:12]}…)"
                    )
    return errors
