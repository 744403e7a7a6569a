"""A complete trial, scripted in-process.

Two operators and one participant run a short dictation session:
the participant speaks, one operator fixes the transcript mid-stream,
the other answers through a speech box, and the session ends with the
exported CSV record. Run with::

    python3 demos/scripted_trial.py
"""

import base64

from wizundry.auth import ADMIN, END_USER, WIZARD, Claims, issue_token
from wizundry.clock import ManualClock
from wizundry.crdt import new_doc
from wizundry import protocol
from wizundry.hub import Hub
from wizundry.protocol import Envelope

SECRET = "demo-secret"
FOREVER = 1 << 40


class Member:
    """One connected client: a sink, a token handshake, a local replica."""

    def __init__(self, hub, clock, user_id, role, display_name):
        self.inbox = []
        self.conn = hub.connect(self.inbox.append)
        self.hub = hub
        token = issue_token(user_id, role, SECRET, ttl_ms=FOREVER,
                            now_ms=clock.now_ms())
        self.send(protocol.HELLO, {"token": token, "trialId": "demo-trial",
                                   "displayName": display_name})
        welcome = self.inbox[0].payload
        self.doc = new_doc(replica=welcome["replica"])
        self.doc.apply_remote(welcome["ops"])
        self.cursor = len(self.inbox)

    def send(self, env_type, payload):
        self.hub.handle(self.conn, Envelope(type=env_type, payload=payload))

    def catch_up(self):
        for env in self.inbox[self.cursor:]:
            if env.type == protocol.DOC_OP:
                self.doc.apply_remote(env.payload["ops"])
        self.cursor = len(self.inbox)


def main():
    clock = ManualClock(start_ms=1_000_000)
    hub = Hub(secret=SECRET, clock=clock)
    admin = Claims(user_id="root", role=ADMIN, issued_at=0, expires_at=FOREVER)
    hub.create_trial(admin, "Demo dictation", trial_id="demo-trial")

    daisy = Member(hub, clock, "daisy", WIZARD, "Daisy")      # runs the mic
    lena = Member(hub, clock, "lena", WIZARD, "Lena")         # edits text
    participant = Member(hub, clock, "p01", END_USER, "P01")

    print("== the participant dictates ==")
    daisy.send(protocol.MIC_SET, {"on": True})
    for chunk in (b"please add milk ", b"to the shopping list\n"):
        clock.advance(300)
        participant.send(protocol.AUDIO_CHUNK,
                         {"data": base64.b64encode(chunk).decode()})
    lena.catch_up()
    print(repr(lena.doc.text()))

    print("== Lena fixes the transcript while the mic is still open ==")
    at = lena.doc.text().index("milk")
    ops = lena.doc.local_insert(at, "oat ")
    lena.send(protocol.DOC_OP, {"ops": [op.to_dict() for op in ops]})
    participant.catch_up()
    print(repr(participant.doc.text()))

    print("== Daisy answers through a preset speech box ==")
    daisy.send(protocol.MIC_SET, {"on": False})
    daisy.send(protocol.SPEECH_BOX_UPSERT,
               {"boxId": "ack", "kind": "PRESET", "text": "Added to your list."})
    daisy.send(protocol.SPEECH_PLAY, {"boxId": "ack"})
    clock.advance(5_000)
    hub.tick()  # the utterance finishes; everyone sees the speaker go idle
    heard = [e.payload for e in participant.inbox
             if e.type == protocol.SPEAKER_STATE]
    print("participant saw speaker states:", heard)

    print("== the record of the session ==")
    runtime = hub.runtime_for("demo-trial")
    for event in runtime.log.events():
        print(f"{event.seq:>3}  {event.actor_id:<6} {event.event_type}")
    csv_bytes = runtime.log.export_csv()
    print(f"CSV export: {len(csv_bytes)} bytes, replayable with "
          "wizundry.eventlog.replay_events")


if __name__ == "__main__":
    main()
