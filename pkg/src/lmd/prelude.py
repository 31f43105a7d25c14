"""The bundled prelude signature."""

from __future__ import annotations

import os
from functools import lru_cache
from importlib import resources

from .kernel import Signature
from .surface import parse_signature


def prelude_text() -> str:
    override = os.environ.get("LMD_PRELUDE_PATH")
    if override:
        with open(override, encoding="utf-8") as fh:
            return fh.read()
    return resources.files("lmd.corpus").joinpath("prelude.lmd").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _parse(text: str) -> Signature:
    return parse_signature(text)


def prelude_signature() -> Signature:
    return _parse(prelude_text())


def corpus_path(name: str) -> str:
    return str(resources.files("lmd.corpus").joinpath(name))
