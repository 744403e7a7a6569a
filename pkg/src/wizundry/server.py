"""HTTP + socket gateway: the process face of one study server.

The admin API mirrors the management screens (create a trial with its
feature selection, list, enter, delete, download the log); `/ws`
upgrades to the room protocol and bridges frames to the hub. All trial
logic lives behind the hub — this module only translates transports.
"""

from __future__ import annotations

import asyncio
import hmac
import socket
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import protocol
from .auth import ADMIN, Claims, issue_token, verify_token
from .clock import Clock, SystemClock
from .config import ServerConfig
from .errors import (
    AuthFailed,
    BindFailed,
    DecodeError,
    Forbidden,
    WizundryError,
)
from .hub import Hub
from .protocol import Envelope
from .speech import MockTts, make_stt

TOKEN_TTL_MS = 12 * 3_600_000
TICK_INTERVAL_S = 0.25

_STATUS_BY_CODE = {
    "AUTH_FAILED": 401, "BAD_SIGNATURE": 401, "EXPIRED": 401, "MALFORMED": 401,
    "FORBIDDEN": 403,
    "UNKNOWN_TRIAL": 404, "UNKNOWN_ACTOR": 404,
    "TRIAL_CLOSED": 409, "DUPLICATE_END_USER": 409,
}


class LoginRequest(BaseModel):
    userId: str
    password: str
    trialId: Optional[str] = None


class CreateTrialRequest(BaseModel):
    name: str
    trialId: Optional[str] = None
    features: dict[str, list[str]] = Field(default_factory=dict)


class FeatureRequest(BaseModel):
    actorId: str
    features: list[str]


def create_app(config: ServerConfig, hub: Optional[Hub] = None,
               clock: Optional[Clock] = None) -> FastAPI:
    clock = clock or SystemClock()
    if hub is None:
        hub = Hub(
            secret=config.secret,
            data_dir=config.data_dir,
            clock=clock,
            stt_factory=lambda: make_stt(
                config.stt_provider,
                list(config.stt_command) if config.stt_command else None,
            ),
            tts_factory=MockTts,
        )

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        ticker = asyncio.create_task(_tick_forever(hub))
        try:
            yield
        finally:
            ticker.cancel()
            _drain(hub)

    app = FastAPI(lifespan=lifespan)
    app.state.hub = hub
    app.state.config = config

    @app.exception_handler(WizundryError)
    async def _wizundry_error(request: Request, exc: WizundryError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), **exc.details},
        )

    def _claims(request: Request) -> Claims:
        header = request.headers.get("authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise AuthFailed("missing bearer token")
        return verify_token(token, config.secret, now_ms=clock.now_ms())

    def _admin(request: Request) -> Claims:
        claims = _claims(request)
        if claims.role != ADMIN:
            raise Forbidden(f"requires {ADMIN}, token is {claims.role}")
        return claims

    # -- plain endpoints -----------------------------------------------------

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/auth/login")
    async def login(body: LoginRequest):
        for account in config.users:
            if account.user_id == body.userId and hmac.compare_digest(
                account.password, body.password
            ):
                now = clock.now_ms()
                token = issue_token(
                    account.user_id, account.role, config.secret,
                    ttl_ms=TOKEN_TTL_MS, now_ms=now, trial_id=body.trialId,
                )
                return {
                    "token": token,
                    "userId": account.user_id,
                    "role": account.role,
                    "expiresAt": now + TOKEN_TTL_MS,
                }
        raise AuthFailed("unknown user or wrong password")

    # -- trial administration ----------------------------------------------------

    @app.post("/trials", status_code=201)
    async def create_trial(body: CreateTrialRequest, request: Request):
        claims = _admin(request)
        trial = hub.create_trial(
            claims, body.name,
            feature_assignments=body.features, trial_id=body.trialId,
        )
        return _trial_dict(trial)

    @app.get("/trials")
    async def list_trials(request: Request):
        claims = _admin(request)
        return {"trials": [_trial_dict(t) for t in hub.registry.list_trials(claims)]}

    @app.delete("/trials/{trial_id}")
    async def delete_trial(trial_id: str, request: Request):
        claims = _admin(request)
        return _trial_dict(hub.delete_trial(claims, trial_id))

    @app.post("/trials/{trial_id}/features")
    async def assign_features(trial_id: str, body: FeatureRequest, request: Request):
        claims = _admin(request)
        closed = hub.assign_features(claims, trial_id, body.actorId, body.features)
        return {"actorId": body.actorId, "features": sorted(closed)}

    @app.get("/trials/{trial_id}/log.csv")
    async def download_log(trial_id: str, request: Request):
        _admin(request)
        runtime = hub.runtime_for(trial_id)
        return Response(
            content=runtime.log.export_csv(),
            media_type="text/csv",
            headers={"Content-Disposition":
                     f'attachment; filename="{trial_id}.log.csv"'},
        )

    # -- socket endpoint -------------------------------------------------------

    @app.websocket("/ws")
    async def websocket_endpoint(websocket: WebSocket):
        await websocket.accept()
        outbound: asyncio.Queue = asyncio.Queue()
        conn = hub.connect(outbound.put_nowait, auto_drain=True)

        async def writer():
            while True:
                envelope = await outbound.get()
                if envelope is None:  # flush sentinel: everything before it is out
                    return
                await websocket.send_text(protocol.encode(envelope).decode("utf-8"))

        writer_task = asyncio.create_task(writer())
        try:
            while conn.open:
                frame = await websocket.receive_text()
                try:
                    envelope = protocol.decode(frame.encode("utf-8"))
                except DecodeError as exc:
                    outbound.put_nowait(Envelope(
                        type=protocol.ERROR,
                        payload={"code": exc.code, "message": str(exc),
                                 "offset": exc.offset},
                    ))
                    continue
                hub.handle(conn, envelope)
        except WebSocketDisconnect:
            pass
        finally:
            hub.disconnect(conn)
            outbound.put_nowait(None)
            try:
                await asyncio.wait_for(writer_task, timeout=5)
            except Exception:
                writer_task.cancel()

    if config.static_dir:
        app.mount("/app", StaticFiles(directory=config.static_dir, html=True),
                  name="app")

    return app


def _trial_dict(trial) -> dict:
    return {
        "trialId": trial.trial_id,
        "name": trial.name,
        "status": trial.status,
        "createdAt": trial.created_at,
        "members": [
            {"actorId": m.actor_id, "role": m.role, "displayName": m.display_name}
            for m in sorted(trial.members.values(), key=lambda m: m.actor_id)
        ],
        "features": {actor: sorted(fs) for actor, fs in sorted(trial.features.items())},
    }


async def _tick_forever(hub: Hub) -> None:
    while True:
        await asyncio.sleep(TICK_INTERVAL_S)
        hub.tick()


def _drain(hub: Hub) -> None:
    """Shutdown path: mark still-open trials closed in their logs, flush."""
    for runtime in hub._runtimes.values():
        if runtime.trial.status != "CLOSED":
            runtime.log.append("server", "SERVER", "TRIAL_CLOSE",
                               {"reason": "SHUTDOWN"})
        runtime.log.close()


def serve(config: ServerConfig) -> None:
    """Blocking entry point; returns when the server is stopped."""
    import uvicorn

    try:
        sock = socket.create_server((config.host, config.port))
    except OSError as exc:
        raise BindFailed(
            f"cannot listen on {config.listen_address}: {exc}"
        ) from exc
    app = create_app(config)
    server = uvicorn.Server(uvicorn.Config(app, log_level="info"))
    server.run(sockets=[sock])
