import csv
import hashlib
import io
import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import yaml
from pydantic import BaseModel, ValidationError

from errors import InvalidArgumentError
from settings import Settings

logger = logging.getLogger(__name__)

ROOT_DIR = Path(__file__).resolve().parent.parent
CONFIG_PATH = ROOT_DIR / "config.yaml"
METADATA_PATH = ROOT_DIR / "metadata.yaml"
ENV_PREFIX = "CHAINGAUGE_"

PathLike = Union[str, Path]


def load_options(path: PathLike = CONFIG_PATH) -> Dict[str, Any]:
    """Default value of every option declared in ``config.yaml``."""
    path = Path(path)
    if not path.exists():
        logger.debug("%s not found, using built-in defaults", path)
        return {}
    config = yaml.safe_load(path.read_text()) or {}
    return {name: meta.get("default") for name, meta in (config.get("options") or {}).items()}


def read_user_config(path: PathLike) -> Dict[str, Any]:
    """Read a user configuration file, either in the ``options:`` layout or as a flat mapping."""
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as e:
        raise InvalidArgumentError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"config file {path} must hold a mapping")
    options = data.get("options")
    if isinstance(options, dict):
        return {k: (v.get("default") if isinstance(v, dict) else v) for k, v in options.items()}
    return data


def env_overrides(names: Iterable[str], environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    """
    Map ``CHAINGAUGE_<KEY>`` environment variables onto option names.

    Keys follow the form <key1>_<key2>..., upper-cased; empty values are ignored.
    """
    environ = os.environ if environ is None else environ
    overrides = {}
    for name in names:
        value = environ.get(ENV_PREFIX + name.replace("-", "_").replace(".", "_").upper(), "")
        if value != "":
            overrides[name] = value
    return overrides


def merged_options(
    config_path: Optional[PathLike] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> Dict[str, Any]:
    """config.yaml defaults < user config file < environment < explicit overrides."""
    options = load_options()
    if config_path is not None:
        options.update(read_user_config(config_path))
    names = set(options) | set(Settings.__fields__)
    options.update(env_overrides(names, environ))
    options.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return options


def config_valid_values(options: Mapping[str, Any]) -> Tuple[bool, str]:
    """Check every declared option has a value and that the whole set parses."""
    for name in load_options():
        if options.get(name) is None:
            return False, f"Config value {name} is not set"
    try:
        Settings.parse(**options)
    except (ValidationError, InvalidArgumentError) as e:
        return False, f"Config values are not valid: {e}"
    return True, ""


def resolve_settings(
    config_path: Optional[PathLike] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> Settings:
    """:raises InvalidArgumentError: if the merged configuration is incomplete or invalid."""
    options = merged_options(config_path, overrides, environ)
    valid, message = config_valid_values(options)
    if not valid:
        raise InvalidArgumentError(message)
    return Settings.parse(**options)


def tool_version() -> str:
    try:
        return str(yaml.safe_load(METADATA_PATH.read_text()).get("version", "unknown"))
    except (OSError, AttributeError, yaml.YAMLError):
        return "unknown"


def file_digest(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class RunManifest(BaseModel):
    """Everything needed to replay one command; ``created`` is not part of the replay."""

    command: str
    parameters: Dict[str, Any]
    seeds: Dict[str, int] = {}
    inputs: Dict[str, str] = {}
    tool_version: str
    created: Optional[str] = None

    @classmethod
    def for_run(
        cls,
        command: str,
        parameters: Mapping[str, Any],
        seeds: Mapping[str, int],
        inputs: Sequence[PathLike] = (),
    ) -> "RunManifest":
        return cls(
            command=command,
            parameters={k: _plain(v) for k, v in sorted(parameters.items())},
            seeds=dict(seeds),
            inputs={str(p): file_digest(p) for p in inputs},
            tool_version=tool_version(),
            created=datetime.now(timezone.utc).isoformat(),
        )

    def replay_view(self) -> dict:
        return self.dict(exclude={"created"})


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(path: PathLike, data: Any) -> None:
    Path(path).write_text(dump_json(data))


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    Path(path).write_text(format_csv(header, rows))


def manifest_path(output: PathLike) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(output: PathLike, manifest: RunManifest) -> Path:
    path = manifest_path(output)
    write_json(path, manifest.dict())
    return path
