"""Multi-operator collaborative dictation backend.

A realtime server where several human operators steer one shared
transcript for a single end user: collaborative text editing on a
conflict-free replicated document, live cursors, microphone and
speech-output control, append-only event logging, and workload
analytics for the recorded sessions.
"""

__version__ = "0.1.0"
