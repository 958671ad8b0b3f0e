"""Load a model from either IR flavour, detecting which one a text is."""

from __future__ import annotations

from pathlib import Path

from .dsl import DslSyntaxError, ElaborationError, load as load_dsl
from .model import ModelGraph
from .netlist import IRKind, ParseError, SchemaError, read_netlist

# everything that means "this artifact did not yield a model"
LOAD_ERRORS = (DslSyntaxError, ElaborationError, ParseError, SchemaError)


def detect_kind(text: str, path: str | Path | None = None) -> IRKind:
    if path is not None:
        suffix = Path(path).suffix.lower()
        if suffix == ".fdl":
            return IRKind.DSL
        if suffix == ".json":
            return IRKind.NETLIST
    return IRKind.NETLIST if text.lstrip().startswith("{") else IRKind.DSL


def load_model(text: str, kind: IRKind | str | None = None, name: str = "model", strict: bool = True) -> ModelGraph:
    kind = IRKind(kind) if kind else detect_kind(text)
    if kind is IRKind.NETLIST:
        return read_netlist(text)
    return load_dsl(text, name, strict=strict)


def read_model(path: str | Path, strict: bool = True) -> ModelGraph:
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    return load_model(text, detect_kind(text, p), name=p.stem, strict=strict)
