"""Config loading, HTTP admin API, and the socket endpoint."""

import json

import pytest
from fastapi.testclient import TestClient

from wizundry import protocol
from wizundry.auth import ADMIN, END_USER, WIZARD
from wizundry.config import ServerConfig, UserAccount, load_config
from wizundry.errors import ConfigInvalid
from wizundry.eventlog import import_csv
from wizundry.protocol import Envelope
from wizundry.server import create_app


def write_config(tmp_path, **overrides):
    base = {
        "secret": "file-secret",
        "users": [
            {"userId": "root", "password": "rootpw", "role": "ADMIN"},
            {"userId": "w1", "password": "w1pw", "role": "WIZARD"},
        ],
    }
    base.update(overrides)
    path = tmp_path / "server.json"
    path.write_text(json.dumps(base))
    return str(path)


class TestConfig:
    def test_minimal_config_gets_defaults(self, tmp_path):
        cfg = load_config(write_config(tmp_path), env={})
        assert cfg.listen_address == "127.0.0.1:8714"
        assert cfg.host == "127.0.0.1"
        assert cfg.port == 8714
        assert cfg.stt_provider == "mock"
        assert cfg.tts_provider == "mock"
        assert cfg.presence_ttl_seconds == 30
        assert cfg.data_dir is None
        assert cfg.users[1] == UserAccount("w1", "w1pw", "WIZARD")

    def test_missing_secret_rejected_with_field_path(self, tmp_path):
        path = tmp_path / "server.json"
        path.write_text(json.dumps({"users": []}))
        with pytest.raises(ConfigInvalid) as exc:
            load_config(str(path), env={})
        assert exc.value.details["field"] == "secret"

    def test_env_var_overrides_file_secret(self, tmp_path):
        cfg = load_config(write_config(tmp_path),
                          env={"WIZUNDRY_SECRET": "from-env"})
        assert cfg.secret == "from-env"

    def test_env_var_satisfies_missing_secret(self, tmp_path):
        path = tmp_path / "server.json"
        path.write_text(json.dumps({"users": []}))
        cfg = load_config(str(path), env={"WIZUNDRY_SECRET": "s"})
        assert cfg.secret == "s"

    def test_unknown_keys_warned_and_ignored(self, tmp_path, caplog):
        with caplog.at_level("WARNING", logger="wizundry.config"):
            cfg = load_config(write_config(tmp_path, futureKnob=3), env={})
        assert "futureKnob" in caplog.text
        assert cfg.secret == "file-secret"

    @pytest.mark.parametrize(
        "overrides,field",
        [
            ({"listenAddress": "nodice"}, "listenAddress"),
            ({"listenAddress": "h:99999"}, "listenAddress"),
            ({"users": [{"userId": "", "password": "x", "role": "ADMIN"}]},
             "users[0].userId"),
            ({"users": [{"userId": "a", "password": "x", "role": "GOD"}]},
             "users[0].role"),
            ({"users": [{"userId": "a", "password": "x", "role": "ADMIN"},
                        {"userId": "a", "password": "y", "role": "WIZARD"}]},
             "users[1].userId"),
            ({"stt": {"provider": "whisperx"}}, "stt.provider"),
            ({"stt": {"provider": "external"}}, "stt.command"),
            ({"tts": {"provider": "espeak"}}, "tts.provider"),
            ({"presenceTtlSeconds": 0}, "presenceTtlSeconds"),
            ({"presenceTtlSeconds": "30"}, "presenceTtlSeconds"),
        ],
    )
    def test_invalid_fields_name_their_path(self, tmp_path, overrides, field):
        with pytest.raises(ConfigInvalid) as exc:
            load_config(write_config(tmp_path, **overrides), env={})
        assert exc.value.details["field"] == field

    def test_data_dir_created_and_probed(self, tmp_path):
        target = tmp_path / "deep" / "data"
        cfg = load_config(write_config(tmp_path, dataDir=str(target)), env={})
        assert cfg.data_dir == str(target)
        assert target.is_dir()

    def test_external_stt_command_round_trips(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, stt={"provider": "external", "command": ["rec", "--json"]},
        ), env={})
        assert cfg.stt_provider == "external"
        assert cfg.stt_command == ("rec", "--json")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            load_config(str(tmp_path / "absent.json"), env={})

    def test_garbage_json(self, tmp_path):
        path = tmp_path / "server.json"
        path.write_text("{nope")
        with pytest.raises(ConfigInvalid):
            load_config(str(path))


@pytest.fixture
def app_config(tmp_path):
    return ServerConfig(
        secret="test-secret",
        users=(
            UserAccount("root", "rootpw", ADMIN),
            UserAccount("w1", "w1pw", WIZARD),
            UserAccount("w2", "w2pw", WIZARD),
            UserAccount("u1", "u1pw", END_USER),
        ),
        data_dir=str(tmp_path / "data"),
    )


@pytest.fixture
def client(app_config):
    with TestClient(create_app(app_config)) as client:
        yield client


def login(client, user_id, password, trial_id=None):
    resp = client.post("/auth/login", json={
        "userId": user_id, "password": password, "trialId": trial_id})
    assert resp.status_code == 200, resp.text
    return resp.json()["token"]


def auth(token):
    return {"Authorization": f"Bearer {token}"}


class TestHttpApi:
    def test_healthz_is_public(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_login_returns_role_and_token(self, client):
        resp = client.post("/auth/login",
                           json={"userId": "w1", "password": "w1pw"})
        body = resp.json()
        assert body["role"] == WIZARD
        assert body["token"].count(".") == 1
        assert body["expiresAt"] > 0

    def test_login_rejects_wrong_password(self, client):
        resp = client.post("/auth/login",
                           json={"userId": "w1", "password": "nope"})
        assert resp.status_code == 401
        assert resp.json()["code"] == "AUTH_FAILED"

    def test_trial_lifecycle_over_http(self, client):
        token = login(client, "root", "rootpw")
        created = client.post("/trials", headers=auth(token), json={
            "name": "Session A",
            "features": {"w1": ["SPEECH_BOXES"], "w2": ["SUMMARY_NOTES"]},
        })
        assert created.status_code == 201
        trial = created.json()
        assert trial["status"] == "CREATED"
        # implication closure applied at creation
        assert trial["features"]["w2"] == ["COLLAB_EDITOR", "SUMMARY_NOTES"]

        listing = client.get("/trials", headers=auth(token)).json()["trials"]
        assert [t["trialId"] for t in listing] == [trial["trialId"]]

        updated = client.post(
            f"/trials/{trial['trialId']}/features", headers=auth(token),
            json={"actorId": "w1", "features": ["LABELS"]})
        assert updated.json()["features"] == ["COLLAB_EDITOR", "LABELS"]

        deleted = client.delete(f"/trials/{trial['trialId']}", headers=auth(token))
        assert deleted.json()["status"] == "CLOSED"

    def test_unknown_trial_is_404(self, client):
        token = login(client, "root", "rootpw")
        resp = client.delete("/trials/trial-404", headers=auth(token))
        assert resp.status_code == 404
        assert resp.json()["code"] == "UNKNOWN_TRIAL"

    def test_log_download_round_trips(self, client):
        token = login(client, "root", "rootpw")
        trial_id = client.post("/trials", headers=auth(token),
                               json={"name": "L"}).json()["trialId"]
        resp = client.get(f"/trials/{trial_id}/log.csv", headers=auth(token))
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/csv")
        events = import_csv(resp.content)
        assert events[0].event_type == "TRIAL_OPEN"

    @pytest.mark.parametrize("method,path,body", [
        ("POST", "/trials", {"name": "x"}),
        ("GET", "/trials", None),
        ("DELETE", "/trials/trial-1", None),
        ("POST", "/trials/trial-1/features", {"actorId": "w1", "features": []}),
        ("GET", "/trials/trial-1/log.csv", None),
    ])
    @pytest.mark.parametrize("who", ["none", "w1", "u1", "root"])
    def test_admin_endpoint_role_matrix(self, client, method, path, body, who):
        headers = {}
        if who != "none":
            headers = auth(login(client, who, f"{who}pw"))
        if who == "root":  # admin needs the trial (and actor slot) to exist
            client.post("/trials", headers=headers,
                        json={"name": "m", "trialId": "trial-1",
                              "features": {"w1": []}})
        resp = client.request(method, path, json=body, headers=headers)
        if who == "root":
            assert resp.status_code in (200, 201), resp.text
        elif who == "none":
            assert resp.status_code == 401
            assert resp.json()["code"] == "AUTH_FAILED"
        else:
            assert resp.status_code == 403
            assert resp.json()["code"] == "FORBIDDEN"

    def test_tampered_token_rejected(self, client):
        token = login(client, "root", "rootpw")
        bad = token[:-2] + ("aa" if not token.endswith("aa") else "bb")
        resp = client.get("/trials", headers=auth(bad))
        assert resp.status_code == 401


def ws_send(ws, env_type, payload):
    ws.send_text(protocol.encode(Envelope(type=env_type, payload=payload)).decode())


def ws_recv(ws):
    return protocol.decode(ws.receive_text().encode())


class TestWebSocket:
    def test_scripted_session_over_real_sockets(self, client):
        admin = login(client, "root", "rootpw")
        trial_id = client.post("/trials", headers=auth(admin),
                               json={"name": "WS"}).json()["trialId"]
        w1_token = login(client, "w1", "w1pw")
        w2_token = login(client, "w2", "w2pw")

        with client.websocket_connect("/ws") as w1, \
                client.websocket_connect("/ws") as w2:
            ws_send(w1, protocol.HELLO, {"token": w1_token, "trialId": trial_id})
            welcome = ws_recv(w1)
            assert welcome.type == protocol.WELCOME
            assert welcome.payload["actorId"] == "w1"
            ws_recv(w1)  # own MEMBER_JOINED

            ws_send(w2, protocol.HELLO, {"token": w2_token, "trialId": trial_id})
            assert ws_recv(w2).type == protocol.WELCOME
            ws_recv(w2)  # own MEMBER_JOINED
            assert ws_recv(w1).payload["actorId"] == "w2"  # w2's arrival

            from wizundry.crdt import new_doc
            doc = new_doc(replica=welcome.payload["replica"])
            ops = [op.to_dict() for op in doc.local_insert(0, "over the wire")]
            ws_send(w1, protocol.DOC_OP, {"ops": ops})

            echo = ws_recv(w1)
            relay = ws_recv(w2)
            assert echo.payload == relay.payload == {"ops": ops}
            assert echo.server_seq == relay.server_seq

        # LEAVE rows recorded when the sockets dropped
        log = client.app.state.hub.runtime_for(trial_id).log
        leaves = {e.actor_id for e in log.query(event_type="LEAVE")}
        assert leaves == {"w1", "w2"}

    def test_bad_token_over_socket(self, client):
        admin = login(client, "root", "rootpw")
        trial_id = client.post("/trials", headers=auth(admin),
                               json={"name": "WS"}).json()["trialId"]
        with client.websocket_connect("/ws") as ws:
            ws_send(ws, protocol.HELLO, {"token": "junk", "trialId": trial_id})
            reply = ws_recv(ws)
            assert reply.type == protocol.ERROR
            assert reply.payload["code"] == "AUTH_FAILED"

    def test_undecodable_frame_gets_offset_error(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text("not a frame")
            reply = ws_recv(ws)
            assert reply.type == protocol.ERROR
            assert reply.payload["code"] == "DECODE_ERROR"
            assert isinstance(reply.payload["offset"], int)

    def test_shutdown_marks_open_trials_closed(self, app_config):
        with TestClient(create_app(app_config)) as client:
            admin = login(client, "root", "rootpw")
            trial_id = client.post("/trials", headers=auth(admin),
                                   json={"name": "will stop"}).json()["trialId"]
            hub = client.app.state.hub
        # context exit ran shutdown: TRIAL_CLOSE appended, file flushed
        events = hub.runtime_for(trial_id).log.events()
        assert events[-1].event_type == "TRIAL_CLOSE"
        assert events[-1].payload == {"reason": "SHUTDOWN"}
