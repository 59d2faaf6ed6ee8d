"""Case- and diacritic-insensitive text folding shared by vocabulary lookup
and the mock detector."""

from __future__ import annotations

import unicodedata


def fold(text: str) -> str:
    """Lowercase and strip combining marks: 'Auréole' -> 'aureole'."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return stripped.casefold().strip()
