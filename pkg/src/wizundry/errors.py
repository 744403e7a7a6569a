"""Error codes shared by the in-process API and the wire protocol.

Every operational failure carries a stable string code. In-process callers
see it as ``WizundryError.code``; protocol handlers convert the same code
into an ERROR envelope for the offending client.
"""

from __future__ import annotations


class WizundryError(Exception):
    """Base class for all operational errors. ``code`` is wire-stable."""

    code = "INTERNAL"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details


# crdt_doc
class IndexOutOfRange(WizundryError):
    code = "INDEX_OUT_OF_RANGE"


class UnknownItem(WizundryError):
    code = "UNKNOWN_ITEM"


class RangeInverted(WizundryError):
    code = "RANGE_INVERTED"


class MalformedOp(WizundryError):
    code = "MALFORMED_OP"


# annotations
class DuplicateLabel(WizundryError):
    code = "DUPLICATE_LABEL"


class EmptyName(WizundryError):
    code = "EMPTY_NAME"


class UnknownLabel(WizundryError):
    code = "UNKNOWN_LABEL"


class UnknownCategory(WizundryError):
    code = "UNKNOWN_CATEGORY"


class UnknownAnnotation(WizundryError):
    code = "UNKNOWN_ANNOTATION"


class EmptyNote(WizundryError):
    code = "EMPTY_NOTE"


# presence
class NotAWizard(WizundryError):
    code = "NOT_A_WIZARD"


class StaleSeq(WizundryError):
    code = "STALE_SEQ"


# session_auth
class BadSignature(WizundryError):
    code = "BAD_SIGNATURE"


class ExpiredToken(WizundryError):
    code = "EXPIRED"


class MalformedToken(WizundryError):
    code = "MALFORMED"


class Forbidden(WizundryError):
    code = "FORBIDDEN"


class TrialClosed(WizundryError):
    code = "TRIAL_CLOSED"


class DuplicateEndUser(WizundryError):
    code = "DUPLICATE_END_USER"


class UnknownTrial(WizundryError):
    code = "UNKNOWN_TRIAL"


class UnknownActor(WizundryError):
    code = "UNKNOWN_ACTOR"


class FeatureDisabled(WizundryError):
    code = "FEATURE_DISABLED"


# sync_protocol
class DecodeError(WizundryError):
    code = "DECODE_ERROR"

    def __init__(self, message: str = "", offset: int = 0, **details):
        super().__init__(message, offset=offset, **details)
        self.offset = offset


class AuthFailed(WizundryError):
    code = "AUTH_FAILED"


class UnknownType(WizundryError):
    code = "UNKNOWN_TYPE"


class SlowConsumer(WizundryError):
    code = "SLOW_CONSUMER"


# speech_pipeline
class EmptySegment(WizundryError):
    code = "EMPTY_SEGMENT"


class MicOff(WizundryError):
    code = "MIC_OFF"


class EmptyBox(WizundryError):
    code = "EMPTY_BOX"


class UnknownBox(WizundryError):
    code = "UNKNOWN_BOX"


# event_log
class StorageFull(WizundryError):
    code = "STORAGE_FULL"


# analytics
class InvalidScale(WizundryError):
    code = "INVALID_SCALE"


class EmptyInput(WizundryError):
    code = "EMPTY_INPUT"


# server_gateway
class ConfigInvalid(WizundryError):
    code = "CONFIG_INVALID"


class BindFailed(WizundryError):
    code = "BIND_FAILED"
