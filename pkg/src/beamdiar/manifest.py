"""Run manifests: enough resolved configuration to reproduce any run."""

import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata

from .errors import DataError


def _versions() -> dict[str, str]:
    out = {"python": platform.python_version()}
    for pkg in ("beamdiar", "numpy", "scipy", "click", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    outputs: list[str]
    wall_clock_s: float
    versions: dict = field(default_factory=_versions)
    created: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


def save_manifest(path, manifest: RunManifest) -> None:
    with open(path, "w") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> RunManifest:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    try:
        return RunManifest(
            command=raw["command"],
            config=raw["config"],
            seed=raw.get("seed"),
            outputs=raw.get("outputs", []),
            wall_clock_s=raw.get("wall_clock_s", 0.0),
            versions=raw.get("versions", {}),
            created=raw.get("created", ""),
        )
    except KeyError as exc:
        raise DataError(f"manifest {path} is missing field {exc}") from exc
