"""Text model files for chains and lumpings.

The format is line-oriented: `#` starts a comment, blank lines are
skipped, and fields are whitespace-separated tokens (labels therefore
cannot contain whitespace).  Chain rows are labeled with their context
so a published transition matrix can be transcribed directly:

    format 1
    kind chain
    alphabet 1 2 3 4
    order 2
    row 1 1 : 0.5 0.5 0 0
    row 1 2 : 0 0 1 0
    ...

    format 1
    kind lumping
    domain 1 2 3
    codomain 1 2
    map 1 : 1
    map 2 : 2
    map 3 : 2

Rows must appear in context order (earliest symbol most significant)
and be complete.  Probabilities are serialized with 17 significant
digits, so parse(serialize(m)) reproduces m bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import (
    Alphabet,
    HigherOrderChain,
    LumpingFunction,
    ValidationReport,
    decode_context,
    validate_chain,
)

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Malformed model file; the message carries the line number."""

    def __init__(self, line_no: int | None, message: str):
        self.line_no = line_no
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(where + message)


class ModelValidationError(ValueError):
    """Structurally parseable chain that fails validation."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(
            "invalid chain: " + "; ".join(report.violations)
        )


@dataclass(frozen=True)
class ModelFile:
    kind: str  # "chain" | "lumping"
    format_version: int
    chain: HigherOrderChain | None = None
    lumping: LumpingFunction | None = None


def _tokens(text: str):
    """Yield (line_no, tokens) for every non-empty content line."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        yield line_no, line.split()


def _parse_float(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ModelFormatError(line_no, f"not a number: {token!r}") from None


def _split_row(tokens: list[str], line_no: int) -> tuple[list[str], list[str]]:
    if ":" not in tokens:
        raise ModelFormatError(line_no, "missing ':' separator")
    at = tokens.index(":")
    return tokens[:at], tokens[at + 1 :]


def parse_model(text: str) -> ModelFile:
    lines = list(_tokens(text))
    if not lines:
        raise ModelFormatError(None, "empty model file")
    header: dict[str, tuple[int, list[str]]] = {}
    body: list[tuple[int, list[str]]] = []
    for line_no, tokens in lines:
        key = tokens[0]
        if key in ("row", "map"):
            body.append((line_no, tokens))
        elif key in ("format", "kind", "alphabet", "order", "domain", "codomain"):
            if key in header:
                raise ModelFormatError(line_no, f"duplicate '{key}' line")
            header[key] = (line_no, tokens[1:])
        else:
            raise ModelFormatError(line_no, f"unknown directive {key!r}")

    def need(key: str) -> tuple[int, list[str]]:
        if key not in header:
            raise ModelFormatError(None, f"missing '{key}' line")
        return header[key]

    line_no, value = need("format")
    if len(value) != 1 or not value[0].isdigit():
        raise ModelFormatError(line_no, "format expects a single integer")
    version = int(value[0])
    if version != FORMAT_VERSION:
        raise ModelFormatError(line_no, f"unknown format version {version}")

    line_no, value = need("kind")
    if len(value) != 1 or value[0] not in ("chain", "lumping"):
        raise ModelFormatError(line_no, "kind must be 'chain' or 'lumping'")
    kind = value[0]

    if kind == "chain":
        return _parse_chain(version, header, body)
    return _parse_lumping(version, header, body)


def _parse_chain(version, header, body) -> ModelFile:
    line_no, symbols = header.get("alphabet", (None, []))
    if not symbols:
        raise ModelFormatError(line_no, "missing or empty 'alphabet' line")
    try:
        alphabet = Alphabet(tuple(symbols))
    except ValueError as exc:
        raise ModelFormatError(line_no, str(exc)) from None
    line_no, value = header.get("order", (None, []))
    if len(value) != 1 or not value[0].isdigit() or int(value[0]) < 1:
        raise ModelFormatError(line_no, "order expects a positive integer")
    order = int(value[0])
    for extra in ("domain", "codomain"):
        if extra in header:
            raise ModelFormatError(header[extra][0], f"'{extra}' not valid for a chain")

    m = alphabet.size
    expected_rows = m**order
    rows = np.empty((expected_rows, m))
    count = 0
    for line_no, tokens in body:
        if tokens[0] != "row":
            raise ModelFormatError(line_no, "'map' lines not valid for a chain")
        if count >= expected_rows:
            raise ModelFormatError(line_no, f"more than {expected_rows} rows")
        context, values = _split_row(tokens[1:], line_no)
        expected_context = list(decode_context(alphabet, order, count))
        if context != expected_context:
            raise ModelFormatError(
                line_no,
                f"row {count} must be context ({','.join(expected_context)}), "
                f"got ({','.join(context)})",
            )
        if len(values) != m:
            raise ModelFormatError(
                line_no, f"expected {m} probabilities, got {len(values)}"
            )
        rows[count] = [_parse_float(v, line_no) for v in values]
        count += 1
    if count != expected_rows:
        raise ModelFormatError(None, f"expected {expected_rows} rows, got {count}")
    return ModelFile(
        kind="chain",
        format_version=version,
        chain=HigherOrderChain(alphabet, order, rows),
    )


def _parse_lumping(version, header, body) -> ModelFile:
    line_no, symbols = header.get("domain", (None, []))
    if not symbols:
        raise ModelFormatError(line_no, "missing or empty 'domain' line")
    domain = Alphabet(tuple(symbols))
    line_no, symbols = header.get("codomain", (None, []))
    if not symbols:
        raise ModelFormatError(line_no, "missing or empty 'codomain' line")
    codomain = Alphabet(tuple(symbols))
    for extra in ("alphabet", "order"):
        if extra in header:
            raise ModelFormatError(
                header[extra][0], f"'{extra}' not valid for a lumping"
            )
    index_map = np.full(domain.size, -1, dtype=np.int64)
    for line_no, tokens in body:
        if tokens[0] != "map":
            raise ModelFormatError(line_no, "'row' lines not valid for a lumping")
        source, target = _split_row(tokens[1:], line_no)
        if len(source) != 1 or len(target) != 1:
            raise ModelFormatError(line_no, "map expects 'map SYMBOL : SYMBOL'")
        if source[0] not in domain:
            raise ModelFormatError(line_no, f"unknown domain symbol {source[0]!r}")
        if target[0] not in codomain:
            raise ModelFormatError(line_no, f"unknown codomain symbol {target[0]!r}")
        i = domain.index_of(source[0])
        if index_map[i] != -1:
            raise ModelFormatError(line_no, f"domain symbol {source[0]!r} mapped twice")
        index_map[i] = codomain.index_of(target[0])
    unmapped = [domain.symbols[i] for i in range(domain.size) if index_map[i] == -1]
    if unmapped:
        raise ModelFormatError(None, f"unmapped domain symbols: {unmapped}")
    try:
        lumping = LumpingFunction(domain, codomain, index_map)
    except ValueError as exc:
        raise ModelFormatError(None, str(exc)) from None
    return ModelFile(kind="lumping", format_version=version, lumping=lumping)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize_chain(chain: HigherOrderChain) -> str:
    lines = [
        f"format {FORMAT_VERSION}",
        "kind chain",
        "alphabet " + " ".join(chain.alphabet.symbols),
        f"order {chain.order}",
    ]
    for c in range(chain.n_contexts):
        context = " ".join(chain.context_symbols(c))
        values = " ".join(_fmt(v) for v in chain.transitions[c])
        lines.append(f"row {context} : {values}")
    return "\n".join(lines) + "\n"


def serialize_lumping(g: LumpingFunction) -> str:
    lines = [
        f"format {FORMAT_VERSION}",
        "kind lumping",
        "domain " + " ".join(g.domain.symbols),
        "codomain " + " ".join(g.codomain.symbols),
    ]
    for i, s in enumerate(g.domain.symbols):
        lines.append(f"map {s} : {g.codomain.symbols[g.index_map[i]]}")
    return "\n".join(lines) + "\n"


def serialize_model(model: ModelFile) -> str:
    if model.kind == "chain":
        return serialize_chain(model.chain)
    return serialize_lumping(model.lumping)


def load_model(
    path: str, validate: bool = True, renormalize: bool = False
) -> ModelFile:
    """Parse a model file from disk.

    Chains are validated by default (raising ModelValidationError with
    the violation list); renormalize=True instead rescales rows whose
    sums are off, for matrices typed in with limited precision.
    """
    with open(path, "r", encoding="utf-8") as fh:
        model = parse_model(fh.read())
    if model.kind == "chain":
        chain = model.chain
        if renormalize:
            sums = chain.transitions.sum(axis=1, keepdims=True)
            if np.any(sums <= 0):
                raise ModelValidationError(validate_chain(chain))
            chain = HigherOrderChain(
                chain.alphabet, chain.order, chain.transitions / sums
            )
            model = ModelFile("chain", model.format_version, chain=chain)
        if validate:
            report = validate_chain(chain)
            if not report.ok:
                raise ModelValidationError(report)
    return model
