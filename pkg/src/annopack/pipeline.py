"""Workflow assembly and execution.

A workflow is a declarative description: ontology files, one reader, and an
ordered processor chain. Assembly resolves processor names against the
registry, validates configs, and checks that every processor's required
types are produced upstream, so a pipeline that assembles cannot hit a
missing dependency at run time.

Execution streams packs one at a time through the whole chain. A processor
failure on one pack is recorded and isolated (unless fail_fast); output
order always matches reader order, also with parallelism enabled.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .datapack import DataPack
from .ontology import TypeOntology, load_ontologies
from .processors import REGISTRY, Processor


class PipelineError(Exception):
    pass


class UnknownProcessor(PipelineError):
    pass


class UnsatisfiedRequirement(PipelineError):
    def __init__(self, processor: str, type_name: str):
        super().__init__(f"{processor} requires {type_name}, which nothing upstream produces")
        self.processor = processor
        self.type_name = type_name


class InvalidWorkflow(PipelineError):
    pass


class ReaderError(PipelineError):
    pass


class MalformedLine(ReaderError):
    def __init__(self, lineno: int, detail: str):
        super().__init__(f"line {lineno}: {detail}")
        self.lineno = lineno


class DuplicatePackId(ReaderError):
    pass


class NonUtf8File(ReaderError):
    pass


@dataclass(frozen=True)
class ProcessorConfig:
    name: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ReaderSpec:
    kind: str  # "dir" | "jsonl"
    path: str
    glob: str = "*.txt"


@dataclass
class Workflow:
    reader: ReaderSpec
    processors: list[ProcessorConfig] = field(default_factory=list)
    ontology_files: list[str] = field(default_factory=list)
    fail_fast: bool = False
    parallelism: int = 1


@dataclass
class PackResult:
    pack: DataPack
    error: str | None = None
    failed_processor: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


# -- readers -----------------------------------------------------------------


def _unique_ids(packs: Iterable[DataPack]) -> Iterator[DataPack]:
    seen: set[str] = set()
    for pack in packs:
        if pack.pack_id in seen:
            raise DuplicatePackId(pack.pack_id)
        seen.add(pack.pack_id)
        yield pack


def directory_reader(
    path: str | Path, glob: str = "*.txt", ontology: TypeOntology | None = None
) -> Iterator[DataPack]:
    """One pack per matching file (pack id = file stem, text = contents),
    in lexicographic order of the path relative to `path`."""
    base = Path(path)
    if not base.is_dir():
        raise ReaderError(f"not a directory: {base}")
    files = sorted(
        (p for p in base.glob(glob) if p.is_file()),
        key=lambda p: p.relative_to(base).as_posix(),
    )

    def gen() -> Iterator[DataPack]:
        for file in files:
            try:
                text = file.read_text(encoding="utf-8")
            except UnicodeDecodeError as exc:
                raise NonUtf8File(f"{file}: {exc}") from exc
            except OSError as exc:
                raise ReaderError(f"{file}: {exc}") from exc
            yield DataPack(file.stem, text, ontology)

    return _unique_ids(gen())


def jsonl_reader(path: str | Path, ontology: TypeOntology | None = None) -> Iterator[DataPack]:
    """One pack per non-blank line of `{"id": str, "text": str}`."""
    file = Path(path)
    if not file.is_file():
        raise ReaderError(f"not a file: {file}")

    def gen() -> Iterator[DataPack]:
        with open(file, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedLine(lineno, f"invalid JSON: {exc}") from exc
                if (
                    not isinstance(obj, dict)
                    or not isinstance(obj.get("id"), str)
                    or not isinstance(obj.get("text"), str)
                ):
                    raise MalformedLine(lineno, 'expected {"id": str, "text": str}')
                yield DataPack(obj["id"], obj["text"], ontology)

    return _unique_ids(gen())


def open_reader(spec: ReaderSpec, ontology: TypeOntology | None = None) -> Iterator[DataPack]:
    if spec.kind == "dir":
        return directory_reader(spec.path, spec.glob, ontology)
    if spec.kind == "jsonl":
        return jsonl_reader(spec.path, ontology)
    raise InvalidWorkflow(f"unknown reader kind {spec.kind!r}")


# -- assembly and execution --------------------------------------------------


class Pipeline:
    def __init__(
        self,
        processors: list[Processor],
        ontology: TypeOntology,
        fail_fast: bool = False,
        parallelism: int = 1,
    ):
        self.processors = processors
        self.ontology = ontology
        self.fail_fast = fail_fast
        self.parallelism = max(1, parallelism)

    def process_pack(self, pack: DataPack) -> PackResult:
        for proc in self.processors:
            try:
                # Assembly proved ordering; skip the standalone instance check.
                proc.process(pack, enforce_requires=False)
            except Exception as exc:  # noqa: BLE001 - isolation is the contract
                if self.fail_fast:
                    raise
                return PackResult(pack, error=str(exc), failed_processor=proc.name)
        return PackResult(pack)

    def run(self, reader: Iterable[DataPack]) -> Iterator[PackResult]:
        """Process every pack from the reader, yielding results in reader
        order. Reader failures abort; processor failures are isolated."""
        if self.parallelism == 1:
            for pack in reader:
                yield self.process_pack(pack)
            return
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            yield from pool.map(self.process_pack, reader)

    def run_workflow_reader(self, spec: ReaderSpec) -> Iterator[PackResult]:
        return self.run(open_reader(spec, self.ontology))


def assemble(workflow: Workflow, registry: dict[str, type[Processor]] | None = None) -> Pipeline:
    """Build a runnable pipeline, checking processor names, configs, and
    the requires/produces dependency chain."""
    registry = REGISTRY if registry is None else registry
    sources = []
    for path in workflow.ontology_files:
        try:
            sources.append(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InvalidWorkflow(f"cannot read ontology file {path}: {exc}") from exc
    ontology = load_ontologies(sources)

    processors: list[Processor] = []
    available: set[str] = set()
    for cfg in workflow.processors:
        cls = registry.get(cfg.name)
        if cls is None:
            raise UnknownProcessor(cfg.name)
        proc = cls.from_params(cfg.params)
        for req in sorted(proc.requires):
            satisfied = any(
                a in ontology and req in ontology and ontology.is_subtype(a, req)
                for a in available
            )
            if not satisfied:
                raise UnsatisfiedRequirement(cfg.name, req)
        available |= proc.produces
        processors.append(proc)
    return Pipeline(
        processors, ontology, fail_fast=workflow.fail_fast, parallelism=workflow.parallelism
    )


# -- workflow files ----------------------------------------------------------


def load_workflow(path: str | Path, registry: dict[str, type[Processor]] | None = None) -> Workflow:
    """Parse a workflow JSON file. Relative paths inside the file (ontology
    files, reader path, path-kinded processor params) resolve against the
    file's directory."""
    registry = REGISTRY if registry is None else registry
    file = Path(path)
    try:
        obj = json.loads(file.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidWorkflow(f"cannot read workflow {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidWorkflow(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InvalidWorkflow("workflow must be a JSON object")
    base = file.parent

    def resolve(p: Any) -> str:
        if not isinstance(p, str):
            raise InvalidWorkflow(f"expected a path string, got {p!r}")
        return str((base / p) if not Path(p).is_absolute() else Path(p))

    raw_reader = obj.get("reader")
    if not isinstance(raw_reader, dict) or raw_reader.get("kind") not in ("dir", "jsonl"):
        raise InvalidWorkflow('reader must be {"kind": "dir"|"jsonl", "path": ...}')
    reader = ReaderSpec(
        kind=raw_reader["kind"],
        path=resolve(raw_reader.get("path")),
        glob=raw_reader.get("glob", "*.txt"),
    )

    ontology_files = [resolve(p) for p in obj.get("ontology", [])]

    processors = []
    raw_procs = obj.get("processors", [])
    if not isinstance(raw_procs, list):
        raise InvalidWorkflow("processors must be a list")
    for raw in raw_procs:
        if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
            raise InvalidWorkflow('each processor must be {"name": str, "params"?: {...}}')
        params = dict(raw.get("params", {}))
        cls = registry.get(raw["name"])
        if cls is not None:
            for key, spec in cls.params.items():
                if spec.is_path and isinstance(params.get(key), str):
                    params[key] = resolve(params[key])
        processors.append(ProcessorConfig(raw["name"], params))

    fail_fast = obj.get("fail_fast", False)
    parallelism = obj.get("parallelism", 1)
    if not isinstance(fail_fast, bool):
        raise InvalidWorkflow("fail_fast must be a boolean")
    if not isinstance(parallelism, int) or isinstance(parallelism, bool) or parallelism < 1:
        raise InvalidWorkflow("parallelism must be a positive integer")
    return Workflow(
        reader=reader,
        processors=processors,
        ontology_files=ontology_files,
        fail_fast=fail_fast,
        parallelism=parallelism,
    )
