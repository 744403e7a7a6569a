"""Turning raw final transcripts into committed sentences.

The dictation flow commits one sentence per finalized segment; cleanup
is intentionally mechanical so the operators can predict exactly what
lands in the document.
"""

from __future__ import annotations

from ..errors import EmptySegment

_TERMINAL = (".", "!", "?")


def finalize_segment(raw: str) -> str:
    """Normalize a final transcript segment into a committed sentence.

    Leading/trailing whitespace is trimmed, internal whitespace runs
    collapse to single spaces, the first alphabetic character is
    uppercased, and a period is appended unless the text already ends
    in terminal punctuation.
    """
    collapsed = " ".join(raw.split())
    if not collapsed:
        raise EmptySegment("nothing to commit")
    for i, ch in enumerate(collapsed):
        if ch.isalpha():
            collapsed = collapsed[:i] + ch.upper() + collapsed[i + 1 :]
            break
    if not collapsed.endswith(_TERMINAL):
        collapsed += "."
    return collapsed
