from .engine import EDITABLE, PRESET, SERVER_ACTOR, Effect, MicState, SpeechBox, SpeechEngine
from .providers import (
    FINAL,
    INTERIM,
    ExternalCommandStt,
    MockStt,
    MockTts,
    SttProvider,
    TranscriptEvent,
    TtsProvider,
    make_stt,
)
from .segmenter import finalize_segment

__all__ = [
    "EDITABLE", "PRESET", "SERVER_ACTOR", "Effect", "MicState", "SpeechBox",
    "SpeechEngine", "FINAL", "INTERIM", "ExternalCommandStt", "MockStt",
    "MockTts", "SttProvider", "TranscriptEvent", "TtsProvider", "make_stt",
    "finalize_segment",
]
