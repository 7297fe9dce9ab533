from ._freeaccess import (
    MAX_PHASE,
    POISON,
    Set,
    bench,
    clear_tag,
    decode,
    encode,
    verify_alternation,
    verify_poison,
    verify_stuck,
    verify_swap,
)

__all__ = [
    "MAX_PHASE",
    "POISON",
    "Set",
    "bench",
    "clear_tag",
    "decode",
    "encode",
    "verify_alternation",
    "verify_poison",
    "verify_stuck",
    "verify_swap",
]
