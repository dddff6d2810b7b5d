"""The bundled processor repository.

Every processor reads a pack, computes, and writes results back through the
normal pack API. Processors are stateless after construction: config and
lexicons are immutable, so one instance can serve many packs, concurrently.

Each processor declares what entry types it `requires` and what it
`produces` (new entry types, plus attributes set on existing entries);
pipeline assembly checks these so unsatisfiable chains fail fast.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .datapack import DataPack, serialize_pack


class ProcessorError(Exception):
    pass


class MissingDependency(ProcessorError):
    def __init__(self, type_name: str):
        super().__init__(f"no {type_name} entries present; run a producer first")
        self.type_name = type_name


class InvalidConfig(ProcessorError):
    pass


class InvalidPackId(ProcessorError):
    pass


@dataclass(frozen=True)
class Param:
    kind: type
    default: Any = None
    required: bool = False
    is_path: bool = False


@dataclass(frozen=True)
class Lexicon:
    """Surface-string lookup table; keys are single-space-joined and
    lowercased unless case_sensitive."""

    entries: Mapping[str, Any]
    case_sensitive: bool = False

    def normalize(self, surface: str) -> str:
        joined = " ".join(surface.split())
        return joined if self.case_sensitive else joined.lower()

    def lookup(self, surface: str) -> Any:
        return self.entries.get(self.normalize(surface))

    @property
    def max_words(self) -> int:
        return max((len(s.split(" ")) for s in self.entries), default=0)


def load_lexicon(path, value: str = "str", case_sensitive: bool = False) -> Lexicon:
    """Load a TSV lexicon: `surface<TAB>label` (value="str") or
    `surface<TAB>polarity` (value="float"). '#' lines are comments."""
    entries: dict[str, Any] = {}
    probe = Lexicon({}, case_sensitive)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip():
                raise InvalidConfig(f"{path}:{lineno}: expected 'surface<TAB>value'")
            surface = probe.normalize(parts[0])
            if value == "float":
                try:
                    entries[surface] = float(parts[1])
                except ValueError:
                    raise InvalidConfig(f"{path}:{lineno}: bad float {parts[1]!r}") from None
            else:
                entries[surface] = parts[1].strip()
    return Lexicon(entries, case_sensitive)


class Processor:
    """Uniform interface: construct from params, then `process(pack)`."""

    name: str = ""
    requires: frozenset[str] = frozenset()
    produces: frozenset[str] = frozenset()
    # (type, attribute) pairs this processor sets on existing entries.
    writes_attributes: frozenset[tuple[str, str]] = frozenset()
    params: dict[str, Param] = {}

    def __init__(self, **config: Any):
        self.config = config

    @classmethod
    def from_params(cls, raw: Mapping[str, Any] | None) -> "Processor":
        raw = dict(raw or {})
        unknown = set(raw) - set(cls.params)
        if unknown:
            raise InvalidConfig(f"{cls.name}: unknown params {sorted(unknown)}")
        config = {}
        for key, spec in cls.params.items():
            if key in raw:
                value = raw[key]
                if spec.kind is float and isinstance(value, int) and not isinstance(value, bool):
                    value = float(value)
                if not isinstance(value, spec.kind) or (
                    spec.kind is not bool and isinstance(value, bool)
                ):
                    raise InvalidConfig(f"{cls.name}: param {key} must be {spec.kind.__name__}")
                config[key] = value
            elif spec.required:
                raise InvalidConfig(f"{cls.name}: missing required param {key!r}")
            else:
                config[key] = spec.default
        return cls(**config)

    def process(self, pack: DataPack, enforce_requires: bool = True) -> None:
        """Run on one pack. With enforce_requires (the standalone default)
        a required type with zero instances raises MissingDependency; the
        pipeline disables this because assembly already proved ordering."""
        if enforce_requires:
            for type_name in sorted(self.requires):
                if not pack.get_entries(type_name, include_subtypes=True):
                    raise MissingDependency(type_name)
        self.run(pack)

    def run(self, pack: DataPack) -> None:
        raise NotImplementedError


REGISTRY: dict[str, type[Processor]] = {}


def register(cls: type[Processor]) -> type[Processor]:
    REGISTRY[cls.name] = cls
    return cls


@register
class Tokenizer(Processor):
    """Splits non-whitespace runs into alphanumeric-run tokens and
    single-character punctuation tokens."""

    name = "tokenize"
    produces = frozenset({"Token"})

    def run(self, pack: DataPack) -> None:
        text = pack.text
        n = len(text)
        i = 0
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isalnum():
                j = i + 1
                while j < n and text[j].isalnum():
                    j += 1
                pack.add_entry("Token", begin=i, end=j)
                i = j
            else:
                pack.add_entry("Token", begin=i, end=i + 1)
                i += 1


@register
class SentenceSplitter(Processor):
    """Breaks after '.', '!' or '?' followed by whitespace or end of text;
    sentences are trimmed of surrounding whitespace."""

    name = "split_sentences"
    produces = frozenset({"Sentence"})

    def run(self, pack: DataPack) -> None:
        text = pack.text
        n = len(text)
        start = 0
        segments = []
        for i, ch in enumerate(text):
            if ch in ".!?" and (i + 1 == n or text[i + 1].isspace()):
                segments.append((start, i + 1))
                start = i + 1
        if start < n:
            segments.append((start, n))
        for begin, end in segments:
            while begin < end and text[begin].isspace():
                begin += 1
            while end > begin and text[end - 1].isspace():
                end -= 1
            if begin < end:
                pack.add_entry("Sentence", begin=begin, end=end)


@register
class LexiconNer(Processor):
    """Greedy left-to-right longest match of token sequences against a
    surface lexicon; matches become EntityMention entries and never
    overlap."""

    name = "lexicon_ner"
    requires = frozenset({"Token"})
    produces = frozenset({"EntityMention"})
    params = {
        "lexicon_path": Param(str, required=True, is_path=True),
        "case_sensitive": Param(bool, default=False),
    }

    def __init__(self, lexicon_path: str | None = None, case_sensitive: bool = False,
                 lexicon: Lexicon | None = None):
        super().__init__(lexicon_path=lexicon_path, case_sensitive=case_sensitive)
        if lexicon is None:
            if lexicon_path is None:
                raise InvalidConfig("lexicon_ner: needs lexicon_path or lexicon")
            lexicon = load_lexicon(lexicon_path, "str", case_sensitive)
        self.lexicon = lexicon

    def run(self, pack: DataPack) -> None:
        tokens = pack.get_entries("Token")
        texts = [pack.text_of(t) for t in tokens]
        max_words = self.lexicon.max_words
        i = 0
        while i < len(tokens):
            matched = 0
            for size in range(min(max_words, len(tokens) - i), 0, -1):
                label = self.lexicon.lookup(" ".join(texts[i : i + size]))
                if label is not None:
                    pack.add_entry(
                        "EntityMention",
                        begin=tokens[i].begin,
                        end=tokens[i + size - 1].end,
                        attributes={"ner_type": label},
                    )
                    matched = size
                    break
            i += matched if matched else 1


@register
class CooccurrenceRelations(Processor):
    """Links every pair of mentions inside one sentence, earlier mention as
    parent (strictly smaller begin)."""

    name = "cooccurrence_relations"
    requires = frozenset({"Sentence", "EntityMention"})
    produces = frozenset({"Relation"})
    params = {"rel_type": Param(str, default="cooccurrence")}

    def __init__(self, rel_type: str = "cooccurrence"):
        super().__init__(rel_type=rel_type)
        self.rel_type = rel_type

    def run(self, pack: DataPack) -> None:
        for sentence in pack.get_entries("Sentence", include_subtypes=True):
            mentions = pack.get_covered(sentence, "EntityMention", include_subtypes=True)
            for a_pos, a in enumerate(mentions):
                for b in mentions[a_pos + 1 :]:
                    if a.begin < b.begin:
                        pack.add_entry(
                            "Relation",
                            parent=a.id,
                            child=b.id,
                            attributes={"rel_type": self.rel_type},
                        )


@register
class KeywordSentiment(Processor):
    """Average polarity of lexicon-matched tokens per sentence, stored as
    the sentence's `sentiment` attribute (0.0 when nothing matches)."""

    name = "keyword_sentiment"
    requires = frozenset({"Sentence", "Token"})
    writes_attributes = frozenset({("Sentence", "sentiment")})
    params = {"lexicon_path": Param(str, required=True, is_path=True)}

    def __init__(self, lexicon_path: str | None = None, lexicon: Lexicon | None = None):
        super().__init__(lexicon_path=lexicon_path)
        if lexicon is None:
            if lexicon_path is None:
                raise InvalidConfig("keyword_sentiment: needs lexicon_path or lexicon")
            lexicon = load_lexicon(lexicon_path, "float")
        self.lexicon = lexicon

    def run(self, pack: DataPack) -> None:
        for sentence in pack.get_entries("Sentence", include_subtypes=True):
            polarities = []
            for token in pack.get_covered(sentence, "Token", include_subtypes=True):
                value = self.lexicon.lookup(pack.text_of(token))
                if value is not None:
                    polarities.append(value)
            score = sum(polarities) / max(1, len(polarities))
            pack.update_entry(sentence.id, attributes={"sentiment": float(score)})


@register
class PackWriter(Processor):
    """Writes the canonical pack JSON to `<out_dir>/<pack_id>.json`
    atomically (temp file then rename)."""

    name = "pack_writer"
    params = {"out_dir": Param(str, required=True)}

    def __init__(self, out_dir: str):
        super().__init__(out_dir=out_dir)
        self.out_dir = Path(out_dir)

    def run(self, pack: DataPack) -> None:
        pid = pack.pack_id
        if not pid or pid in (".", "..") or any(sep in pid for sep in ("/", "\\", os.sep)):
            raise InvalidPackId(f"pack id {pid!r} is not a safe file name")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        payload = serialize_pack(pack) + "\n"
        fd, tmp_name = tempfile.mkstemp(dir=self.out_dir, prefix=f".{pid}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp_name, self.out_dir / f"{pid}.json")
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise
