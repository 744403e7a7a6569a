"""Signed-token authentication for admins, wizard operators, and end users.

Tokens are deliberately minimal: a base64url JSON payload plus an
HMAC-SHA256 signature over the payload bytes, joined by a dot. There is
no header segment — the algorithm is fixed, so encoding one would only
invite downgrade tricks. A token is valid until its expiry and may be
reused for any number of logins within that window.
"""

from __future__ import annotations

import base64
import binascii
import hmac
import hashlib
import json
from dataclasses import dataclass
from typing import Optional

from .errors import BadSignature, ExpiredToken, MalformedToken

ADMIN = "ADMIN"
WIZARD = "WIZARD"
END_USER = "END_USER"
ROLES = (ADMIN, WIZARD, END_USER)


@dataclass(frozen=True)
class Claims:
    user_id: str
    role: str
    issued_at: int  # ms
    expires_at: int  # ms
    trial_id: Optional[str] = None


def issue_token(
    user_id: str,
    role: str,
    secret: str,
    ttl_ms: int,
    now_ms: int,
    trial_id: Optional[str] = None,
) -> str:
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    if ttl_ms <= 0:
        raise ValueError("ttl must be positive")
    payload = {
        "userId": user_id,
        "role": role,
        "trialId": trial_id,
        "issuedAt": now_ms,
        "expiresAt": now_ms + ttl_ms,
    }
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return _b64(body) + "." + _b64(_sign(secret, body))


def verify_token(token: str, secret: str, now_ms: int) -> Claims:
    parts = token.split(".")
    if len(parts) != 2:
        raise MalformedToken("token must be payload.signature")
    try:
        body = _unb64(parts[0])
        signature = _unb64(parts[1])
    except (binascii.Error, ValueError) as exc:
        raise MalformedToken(f"bad base64: {exc}") from exc
    if not hmac.compare_digest(signature, _sign(secret, body)):
        raise BadSignature("token signature does not verify")
    try:
        payload = json.loads(body)
        claims = Claims(
            user_id=str(payload["userId"]),
            role=payload["role"],
            trial_id=payload["trialId"],
            issued_at=int(payload["issuedAt"]),
            expires_at=int(payload["expiresAt"]),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedToken(f"bad payload: {exc}") from exc
    if claims.role not in ROLES:
        raise MalformedToken(f"unknown role {claims.role!r}")
    if now_ms >= claims.expires_at:
        raise ExpiredToken("token expired")
    return claims


def _sign(secret: str, body: bytes) -> bytes:
    return hmac.new(secret.encode(), body, hashlib.sha256).digest()


def _b64(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode()


def _unb64(raw: str) -> bytes:
    padded = raw + "=" * (-len(raw) % 4)
    return base64.b64decode(padded, altchars=b"-_", validate=True)
