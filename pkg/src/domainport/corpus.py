"""Corpus ingestion: tokenization and format parsers.

Three input formats are supported (CoNLL token-per-line, JSON-lines
with text fields, plain text) plus a tokenized JSON interchange form
that downstream stages and the CLI cache consume. All parsers produce
the same :class:`Corpus` structure, so later stages never care where
the text came from.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Sequence

from .errors import ConfigError, ParseError
from .hashing import stable_hash

logger = logging.getLogger(__name__)

SPLIT_MODES = ("whitespace", "unicode_word")

# word runs, or single non-space punctuation characters
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_WORD_START_RE = re.compile(r"\w", re.UNICODE)
_EDGE_PUNCT_RE = re.compile(r"^\W+|\W+$", re.UNICODE)


@dataclass(frozen=True)
class TokenizerConfig:
    """Controls how raw text becomes tokens.

    ``unicode_word`` mode extracts word-character runs and treats each
    punctuation character as its own token; ``whitespace`` mode splits
    on whitespace only. ``strip_punctuation`` drops punctuation tokens
    (or strips token edges in whitespace mode). ``ngram_order`` > 1
    makes feature extraction use token n-grams instead of unigrams.
    """

    lowercase: bool = True
    split_mode: str = "unicode_word"
    ngram_order: int = 1
    strip_punctuation: bool = True

    def __post_init__(self) -> None:
        if self.split_mode not in SPLIT_MODES:
            raise ConfigError(
                f"unknown split_mode {self.split_mode!r}; expected one of {SPLIT_MODES}"
            )
        if not isinstance(self.ngram_order, int) or self.ngram_order < 1:
            raise ConfigError("ngram_order must be an integer >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "lowercase": self.lowercase,
            "split_mode": self.split_mode,
            "ngram_order": self.ngram_order,
            "strip_punctuation": self.strip_punctuation,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TokenizerConfig":
        known = {f: data[f] for f in ("lowercase", "split_mode", "ngram_order", "strip_punctuation") if f in data}
        extra = set(data) - set(known)
        if extra:
            raise ConfigError(f"unknown tokenizer fields: {sorted(extra)}")
        return cls(**known)

    def config_hash(self) -> str:
        return stable_hash(self.to_dict())


@dataclass(frozen=True)
class Document:
    """One tokenized unit of text."""

    tokens: tuple[str, ...]
    raw_length: int  # character count of the source text for this unit


@dataclass(frozen=True)
class Provenance:
    source: str
    format: str
    tokenizer_hash: str
    skipped: int = 0  # input units that yielded no document


@dataclass(frozen=True)
class Corpus:
    domain_id: str
    documents: tuple[Document, ...]
    tokenizer_config: TokenizerConfig
    provenance: Provenance

    def __post_init__(self) -> None:
        if not self.domain_id:
            raise ConfigError("domain_id must be non-empty")

    @property
    def token_count(self) -> int:
        return sum(len(d.tokens) for d in self.documents)


def tokenize(text: str, config: TokenizerConfig | None = None) -> list[str]:
    """Split ``text`` into tokens according to ``config``.

    Empty tokens never appear in the output; with lowercasing enabled
    no output token contains an uppercase character.
    """
    cfg = config or TokenizerConfig()
    if cfg.split_mode == "whitespace":
        parts = text.split()
        if cfg.strip_punctuation:
            parts = [_EDGE_PUNCT_RE.sub("", p) for p in parts]
    else:
        parts = _TOKEN_RE.findall(text)
        if cfg.strip_punctuation:
            parts = [p for p in parts if _WORD_START_RE.match(p)]
    if cfg.lowercase:
        parts = [p.lower() for p in parts]
    return [p for p in parts if p]


def _read_bytes(data: bytes | str | IO[bytes]) -> bytes:
    if isinstance(data, bytes):
        return data
    if isinstance(data, str):
        return data.encode("utf-8")
    return data.read()


def _decode(data: bytes | str | IO[bytes], source: str) -> str:
    raw = _read_bytes(data)
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(
            "input is not valid UTF-8", offset=exc.start, source=source
        ) from exc


def parse_conll(
    data: bytes | str | IO[bytes],
    config: TokenizerConfig | None = None,
    *,
    domain_id: str = "corpus",
    source: str = "<stream>",
) -> Corpus:
    """Parse CoNLL-style column data: one token per line, first column used.

    Blank lines separate sentences and are ignored for document
    boundaries; ``-DOCSTART-`` markers split documents. Without any
    marker the whole input is a single document.
    """
    cfg = config or TokenizerConfig()
    text = _decode(data, source)
    raw_docs: list[list[str]] = []
    current: list[str] = []

    def flush() -> None:
        if current:
            raw_docs.append(list(current))
            current.clear()

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        first = line.split("\t", 1)[0] if "\t" in line else line.split(None, 1)[0]
        first = first.strip()
        if not first:
            raise ParseError("malformed line: empty token column", line=line_no, source=source)
        if first == "-DOCSTART-":
            flush()
            continue
        current.append(first)
    flush()

    documents = []
    skipped = 0
    for raw_tokens in raw_docs:
        tokens: list[str] = []
        for raw in raw_tokens:
            tokens.extend(tokenize(raw, cfg))
        if tokens:
            documents.append(Document(tuple(tokens), raw_length=len(" ".join(raw_tokens))))
        else:
            skipped += 1
    if not documents:
        raise ParseError("empty corpus: no tokens found", source=source)
    if skipped:
        logger.warning("%s: %d document(s) skipped (no tokens after tokenization)", source, skipped)
    return Corpus(
        domain_id=domain_id,
        documents=tuple(documents),
        tokenizer_config=cfg,
        provenance=Provenance(source=source, format="conll", tokenizer_hash=cfg.config_hash(), skipped=skipped),
    )


def parse_jsonl_pairs(
    data: bytes | str | IO[bytes],
    config: TokenizerConfig | None = None,
    *,
    fields: Sequence[str] = ("sentence1", "sentence2"),
    domain_id: str = "corpus",
    source: str = "<stream>",
) -> Corpus:
    """Parse JSON-lines records, concatenating the named text fields.

    Each line must be a JSON object. A record missing every named field
    (or producing no tokens) is skipped with a counted warning rather
    than aborting the parse.
    """
    cfg = config or TokenizerConfig()
    if not fields:
        raise ConfigError("fields must name at least one JSON key")
    text = _decode(data, source)
    documents = []
    skipped = 0
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=line_no, source=source) from exc
        if not isinstance(record, dict):
            raise ParseError("line is not a JSON object", line=line_no, source=source)
        texts = [record[f] for f in fields if isinstance(record.get(f), str)]
        if not texts:
            skipped += 1
            continue
        tokens: list[str] = []
        for t in texts:
            tokens.extend(tokenize(t, cfg))
        if not tokens:
            skipped += 1
            continue
        raw_length = sum(len(t) for t in texts) + (len(texts) - 1)
        documents.append(Document(tuple(tokens), raw_length=raw_length))
    if not documents:
        raise ParseError("empty corpus: no usable records", source=source)
    if skipped:
        logger.warning("%s: %d record(s) skipped (missing fields or no tokens)", source, skipped)
    return Corpus(
        domain_id=domain_id,
        documents=tuple(documents),
        tokenizer_config=cfg,
        provenance=Provenance(source=source, format="jsonl", tokenizer_hash=cfg.config_hash(), skipped=skipped),
    )


def parse_plaintext(
    data: bytes | str | IO[bytes],
    config: TokenizerConfig | None = None,
    *,
    unit: str = "line",
    domain_id: str = "corpus",
    source: str = "<stream>",
) -> Corpus:
    """Parse plain text, one document per non-empty line (or paragraph)."""
    cfg = config or TokenizerConfig()
    if unit not in ("line", "paragraph"):
        raise ConfigError(f"unknown text unit {unit!r}; expected 'line' or 'paragraph'")
    text = _decode(data, source)
    if unit == "line":
        segments = [ln for ln in text.splitlines() if ln.strip()]
    else:
        segments = [seg for seg in re.split(r"\n\s*\n", text) if seg.strip()]
    documents = []
    skipped = 0
    for seg in segments:
        tokens = tokenize(seg, cfg)
        if tokens:
            documents.append(Document(tuple(tokens), raw_length=len(seg)))
        else:
            skipped += 1
    if not documents:
        raise ParseError("empty corpus: no non-empty text", source=source)
    if skipped:
        logger.warning("%s: %d segment(s) skipped (no tokens after tokenization)", source, skipped)
    return Corpus(
        domain_id=domain_id,
        documents=tuple(documents),
        tokenizer_config=cfg,
        provenance=Provenance(source=source, format="text", tokenizer_hash=cfg.config_hash(), skipped=skipped),
    )


def to_interchange(corpus: Corpus) -> dict[str, Any]:
    """Tokenized interchange form: domain id, tokenizer config, token lists."""
    return {
        "domain_id": corpus.domain_id,
        "tokenizer_config": corpus.tokenizer_config.to_dict(),
        "documents": [list(d.tokens) for d in corpus.documents],
    }


def corpus_to_json(corpus: Corpus) -> str:
    return json.dumps(to_interchange(corpus), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parse_interchange(
    data: bytes | str | IO[bytes] | dict[str, Any],
    *,
    source: str = "<stream>",
) -> Corpus:
    """Load a corpus previously serialized with :func:`to_interchange`.

    Tokens are taken verbatim; no re-tokenization happens, so a
    round trip preserves domain_id and documents exactly.
    """
    if isinstance(data, dict):
        obj = data
    else:
        text = _decode(data, source)
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", source=source) from exc
    if not isinstance(obj, dict):
        raise ParseError("interchange payload must be a JSON object", source=source)
    missing = {"domain_id", "tokenizer_config", "documents"} - set(obj)
    if missing:
        raise ParseError(f"interchange payload missing keys: {sorted(missing)}", source=source)
    try:
        cfg = TokenizerConfig.from_dict(obj["tokenizer_config"])
    except TypeError as exc:
        raise ParseError(f"invalid tokenizer_config: {exc}", source=source) from exc
    docs_field = obj["documents"]
    if not isinstance(docs_field, list):
        raise ParseError("documents must be a list of token lists", source=source)
    documents = []
    for i, toks in enumerate(docs_field):
        if not isinstance(toks, list) or not all(isinstance(t, str) and t for t in toks):
            raise ParseError(f"document {i} is not a list of non-empty strings", source=source)
        documents.append(Document(tuple(toks), raw_length=len(" ".join(toks))))
    if not documents:
        raise ParseError("empty corpus: interchange payload has no documents", source=source)
    return Corpus(
        domain_id=str(obj["domain_id"]),
        documents=tuple(documents),
        tokenizer_config=cfg,
        provenance=Provenance(source=source, format="interchange", tokenizer_hash=cfg.config_hash()),
    )


_FORMAT_PARSERS = {
    "conll": parse_conll,
    "jsonl": parse_jsonl_pairs,
    "text": parse_plaintext,
    "interchange": None,  # handled separately: ignores tokenizer config
}


def parse_file(
    path: str | Path,
    format: str,
    config: TokenizerConfig | None = None,
    *,
    domain_id: str | None = None,
    source: str | None = None,
    **kwargs: Any,
) -> Corpus:
    """Parse a file by format tag. ``source`` defaults to the given path string."""
    if format not in _FORMAT_PARSERS:
        raise ConfigError(f"unknown corpus format {format!r}; expected one of {sorted(_FORMAT_PARSERS)}")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"corpus file not found: {path}")
    label = source if source is not None else str(path)
    name = domain_id if domain_id is not None else p.stem
    raw = p.read_bytes()
    if format == "interchange":
        return parse_interchange(raw, source=label)
    parser = _FORMAT_PARSERS[format]
    return parser(raw, config, domain_id=name, source=label, **kwargs)
