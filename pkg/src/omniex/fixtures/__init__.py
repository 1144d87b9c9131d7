"""Bundled problem and scheme documents used by the tests and the docs.

figure1: three users holding raw packet subsets {w2,w3,w4}, {w1,w3},
{w1,w2,w4} of a four-packet file over F_5, with the classic hand-built
scheme (w4, w1+w3, w2).

example1: three users holding packet pairs (a,b), (a,c), (b,c) of a
three-packet file observed over a block of two instances, with the
one-symbol-per-user scheme (a1+b2, c1+a2, b1+c2).
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path

_NAMES = ("figure1", "figure1_scheme", "example1", "example1_scheme")


def path(name: str) -> Path:
    """Filesystem path of a bundled document (without the .json suffix)."""
    if name not in _NAMES:
        raise KeyError(f"unknown fixture {name!r}; have {_NAMES}")
    res = importlib.resources.files(__package__).joinpath(f"{name}.json")
    return Path(str(res))


def names() -> tuple[str, ...]:
    return _NAMES
