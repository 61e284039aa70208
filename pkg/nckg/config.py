# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.

import dataclasses
import json
import os
from os.path import expanduser, expandvars
from typing import Any, Dict, List, Mapping, Optional, Tuple

from nckg import const
from nckg.client import GatewayConfig


def _env_config() -> List[str]:
    if "NCKG_CFG" in os.environ:
        return [os.environ["NCKG_CFG"]]
    return []


DEFAULT_FILE: str = os.path.expanduser("~/.nckg.json")

MOCK_PREFIX = "mock:"

GATEWAY_KEYS = [f.name for f in dataclasses.fields(GatewayConfig)]


class ConfigError(Exception):
    pass


class ConfigMissingError(ConfigError):
    pass


class ConfigDataError(ConfigError):
    pass


class ApiKeyMissingError(ConfigError):
    pass


def parse_backend(value: str) -> Tuple[str, Optional[str]]:
    """Split ``http`` or ``mock:<script.json>`` into (backend, script)."""
    if value == "http":
        return "http", None
    if value.startswith(MOCK_PREFIX) and len(value) > len(MOCK_PREFIX):
        return "mock", expanduser(expandvars(value[len(MOCK_PREFIX) :]))
    raise ConfigDataError(
        "Invalid backend %r: use 'http' or 'mock:<script.json>'" % value
    )


class NckgConfigParser(object):
    """Merge JSON configuration files; later files win.

    Explicitly named files must exist. The default locations (``NCKG_CFG``,
    then ``~/.nckg.json``) are read only when present.
    """

    def __init__(self, config_files: Optional[List[str]] = None) -> None:
        _files = list(config_files or _env_config())
        for file in _files:
            if not os.path.exists(file):
                raise ConfigMissingError("Config file not found: %s" % file)
        if not _files and os.path.exists(DEFAULT_FILE):
            _files = [DEFAULT_FILE]
        self.files = _files
        self.data: Dict[str, Any] = {"gateway": {}}
        for file in _files:
            try:
                with open(file, encoding="utf-8") as f:
                    content = json.load(f)
            except ValueError as e:
                raise ConfigDataError("Invalid JSON in %s: %s" % (file, e)) from e
            if not isinstance(content, dict):
                raise ConfigDataError("%s must hold a JSON object" % file)
            gateway = content.pop("gateway", {}) or {}
            if not isinstance(gateway, dict):
                raise ConfigDataError("'gateway' in %s must be an object" % file)
            unknown = set(gateway) - set(GATEWAY_KEYS)
            if unknown:
                raise ConfigDataError(
                    "Unknown gateway key(s) in %s: %s" % (file, ", ".join(sorted(unknown)))
                )
            self.data["gateway"].update(gateway)
            self.data.update(content)

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    @property
    def gateway(self) -> Dict[str, Any]:
        return dict(self.data["gateway"])


@dataclasses.dataclass(frozen=True)
class AppConfig(object):
    store_path: Optional[str] = None
    ontology_path: str = const.DEFAULT_ONTOLOGY_PATH
    gateway: GatewayConfig = dataclasses.field(
        default_factory=lambda: GatewayConfig(backend="http")
    )
    top_k: int = const.DEFAULT_TOP_K
    max_depth: int = const.DEFAULT_MAX_DEPTH
    output_dir: str = "."
    aliases_path: Optional[str] = None

    @classmethod
    def from_parser(
        cls,
        parser: NckgConfigParser,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "AppConfig":
        """Build the configuration from files, then apply flag overrides."""
        values: Dict[str, Any] = {
            k: parser.get(k)
            for k in (
                "store_path",
                "ontology_path",
                "top_k",
                "max_depth",
                "output_dir",
                "aliases_path",
            )
            if parser.get(k) is not None
        }
        gateway = parser.gateway
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        backend = overrides.pop("backend", None)
        values.update(overrides)
        if backend is not None:
            gateway["backend"], gateway["mock_script"] = parse_backend(backend)
        elif isinstance(gateway.get("backend"), str) and gateway["backend"].startswith(
            MOCK_PREFIX
        ):
            gateway["backend"], gateway["mock_script"] = parse_backend(gateway["backend"])

        for key in ("store_path", "ontology_path", "output_dir", "aliases_path"):
            if isinstance(values.get(key), str):
                values[key] = expanduser(expandvars(values[key]))
        try:
            values["gateway"] = GatewayConfig(**gateway)
            config = cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigDataError("Invalid configuration: %s" % e) from e
        config.validate()
        return config

    def validate(self) -> None:
        for key in ("top_k", "max_depth"):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigDataError("%s must be a positive integer, got %r" % (key, value))
        if not os.path.exists(self.ontology_path):
            raise ConfigDataError("Ontology file not found: %s" % self.ontology_path)
        if self.aliases_path and not os.path.exists(self.aliases_path):
            raise ConfigDataError("Alias table not found: %s" % self.aliases_path)

    def require_api_key(self) -> None:
        """Fail before any output when the http backend has no credentials."""
        if self.gateway.backend == "http" and self.gateway.api_key is None:
            raise ApiKeyMissingError(
                "The http backend needs an API key in the %s environment variable"
                % self.gateway.api_key_env
            )

    def load_aliases(self) -> Dict[str, str]:
        if not self.aliases_path:
            return {}
        try:
            with open(self.aliases_path, encoding="utf-8") as f:
                aliases = json.load(f)
        except (OSError, ValueError) as e:
            raise ConfigDataError("Cannot read alias table: %s" % e) from e
        if not isinstance(aliases, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in aliases.items()
        ):
            raise ConfigDataError("The alias table must map strings to strings")
        return aliases
