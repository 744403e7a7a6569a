"""Server configuration: one JSON file, validated with field-path errors.

Unknown keys are warned about and ignored so a config written for a
newer build still starts an older one; anything structurally wrong
fails fast with the offending field's path in the error.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

from .auth import ROLES
from .errors import ConfigInvalid

log = logging.getLogger(__name__)

SECRET_ENV_VAR = "WIZUNDRY_SECRET"

DEFAULT_LISTEN = "127.0.0.1:8714"
DEFAULT_PRESENCE_TTL_S = 30

_KNOWN_KEYS = {
    "listenAddress", "secret", "users", "stt", "tts",
    "dataDir", "staticDir", "presenceTtlSeconds",
}
STT_PROVIDERS = ("mock", "external")
TTS_PROVIDERS = ("mock",)


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    password: str
    role: str


@dataclass(frozen=True)
class ServerConfig:
    listen_address: str = DEFAULT_LISTEN
    secret: str = ""
    users: tuple[UserAccount, ...] = ()
    stt_provider: str = "mock"
    stt_command: Optional[tuple[str, ...]] = None
    tts_provider: str = "mock"
    data_dir: Optional[str] = None
    static_dir: Optional[str] = None
    presence_ttl_seconds: int = DEFAULT_PRESENCE_TTL_S

    @property
    def host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rsplit(":", 1)[1])


def load_config(path: str, env: Optional[dict] = None) -> ServerConfig:
    env = os.environ if env is None else env
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc}", field="") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}", field="") from exc
    if not isinstance(raw, dict):
        raise ConfigInvalid("config root must be an object", field="")

    for key in sorted(set(raw) - _KNOWN_KEYS):
        log.warning("ignoring unknown config key %r", key)

    listen = raw.get("listenAddress", DEFAULT_LISTEN)
    _check_listen(listen)

    secret = env.get(SECRET_ENV_VAR) or raw.get("secret", "")
    if not isinstance(secret, str) or not secret:
        raise ConfigInvalid("secret must be a non-empty string", field="secret")

    users = _check_users(raw.get("users", []))
    stt_provider, stt_command = _check_stt(raw.get("stt", {}))
    tts_provider = _check_tts(raw.get("tts", {}))

    data_dir = raw.get("dataDir")
    if data_dir is not None:
        if not isinstance(data_dir, str):
            raise ConfigInvalid("dataDir must be a string", field="dataDir")
        try:
            os.makedirs(data_dir, exist_ok=True)
            probe = os.path.join(data_dir, ".writable")
            with open(probe, "w"):
                pass
            os.unlink(probe)
        except OSError as exc:
            raise ConfigInvalid(f"dataDir not writable: {exc}", field="dataDir") from exc

    static_dir = raw.get("staticDir")
    if static_dir is not None and not isinstance(static_dir, str):
        raise ConfigInvalid("staticDir must be a string", field="staticDir")

    ttl = raw.get("presenceTtlSeconds", DEFAULT_PRESENCE_TTL_S)
    if not isinstance(ttl, int) or isinstance(ttl, bool) or ttl <= 0:
        raise ConfigInvalid("presenceTtlSeconds must be a positive integer",
                            field="presenceTtlSeconds")

    return ServerConfig(
        listen_address=listen,
        secret=secret,
        users=users,
        stt_provider=stt_provider,
        stt_command=stt_command,
        tts_provider=tts_provider,
        data_dir=data_dir,
        static_dir=static_dir,
        presence_ttl_seconds=ttl,
    )


def _check_listen(listen) -> None:
    if not isinstance(listen, str) or ":" not in listen:
        raise ConfigInvalid("listenAddress must look like host:port",
                            field="listenAddress")
    port = listen.rsplit(":", 1)[1]
    if not port.isdigit() or not (0 < int(port) < 65536):
        raise ConfigInvalid(f"bad port {port!r}", field="listenAddress")


def _check_users(raw_users) -> tuple[UserAccount, ...]:
    if not isinstance(raw_users, list):
        raise ConfigInvalid("users must be a list", field="users")
    users = []
    seen = set()
    for i, entry in enumerate(raw_users):
        where = f"users[{i}]"
        if not isinstance(entry, dict):
            raise ConfigInvalid("user entry must be an object", field=where)
        for key in sorted(set(entry) - {"userId", "password", "role"}):
            log.warning("ignoring unknown config key %r", f"{where}.{key}")
        user_id = entry.get("userId")
        if not isinstance(user_id, str) or not user_id:
            raise ConfigInvalid("userId must be a non-empty string",
                                field=f"{where}.userId")
        if user_id in seen:
            raise ConfigInvalid(f"duplicate userId {user_id!r}",
                                field=f"{where}.userId")
        seen.add(user_id)
        password = entry.get("password")
        if not isinstance(password, str):
            raise ConfigInvalid("password must be a string",
                                field=f"{where}.password")
        role = entry.get("role")
        if role not in ROLES:
            raise ConfigInvalid(f"role must be one of {sorted(ROLES)}",
                                field=f"{where}.role")
        users.append(UserAccount(user_id=user_id, password=password, role=role))
    return tuple(users)


def _check_stt(raw) -> tuple[str, Optional[tuple[str, ...]]]:
    if not isinstance(raw, dict):
        raise ConfigInvalid("stt must be an object", field="stt")
    for key in sorted(set(raw) - {"provider", "command"}):
        log.warning("ignoring unknown config key %r", f"stt.{key}")
    provider = raw.get("provider", "mock")
    if provider not in STT_PROVIDERS:
        raise ConfigInvalid(f"stt provider must be one of {STT_PROVIDERS}",
                            field="stt.provider")
    command = raw.get("command")
    if provider == "external":
        if (not isinstance(command, list) or not command
                or not all(isinstance(part, str) for part in command)):
            raise ConfigInvalid("external stt needs a non-empty command list",
                                field="stt.command")
        return provider, tuple(command)
    return provider, None


def _check_tts(raw) -> str:
    if not isinstance(raw, dict):
        raise ConfigInvalid("tts must be an object", field="tts")
    for key in sorted(set(raw) - {"provider"}):
        log.warning("ignoring unknown config key %r", f"tts.{key}")
    provider = raw.get("provider", "mock")
    if provider not in TTS_PROVIDERS:
        raise ConfigInvalid(f"tts provider must be one of {TTS_PROVIDERS}",
                            field="tts.provider")
    return provider
