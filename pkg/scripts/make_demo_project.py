#!/usr/bin/env python3
"""Build a demo annotation store for the service and browser UI.

Runs the bundled clinical workflow over the fixture corpus, stores the
processed packs as a project, and adds a two-document multipack with event
mentions so the suggestion review loop has something to suggest.

Usage:
    python scripts/make_demo_project.py [--root demo_store]
    annopack serve --root demo_store --port 8765
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from annopack.datapack import DataPack, new_multipack, serialize_multipack, serialize_pack
from annopack.pipeline import assemble, load_workflow

LEFT_TEXT = (
    "The rocket launch happened at dawn. Engineers cheered the liftoff. "
    "A recovery ship waited offshore."
)
RIGHT_TEXT = (
    "Morning reports describe the launch in detail. The liftoff shook windows. "
    "Recovery crews met the booster at sea."
)


def _event_pack(pack_id: str, text: str, words: list[str]) -> DataPack:
    pack = DataPack(pack_id, text)
    for word in words:
        begin = text.find(word)
        if begin < 0:
            raise SystemExit(f"marker {word!r} missing from {pack_id}")
        pack.add_entry("EventMention", begin=begin, end=begin + len(word))
    return pack


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo_store", help="store root to create")
    parser.add_argument("--force", action="store_true", help="replace an existing root")
    args = parser.parse_args()

    root = Path(args.root)
    if root.exists():
        if not args.force:
            raise SystemExit(f"{root} already exists (use --force to replace)")
        shutil.rmtree(root)
    project = root / "clinical"
    (project / "packs").mkdir(parents=True)
    (project / "multipacks").mkdir()

    workflow_path = REPO / "fixtures" / "workflows" / "clinical.json"
    workflow = load_workflow(workflow_path)
    workflow.processors = [p for p in workflow.processors if p.name != "pack_writer"]
    pipeline = assemble(workflow)
    shutil.copy(REPO / "fixtures" / "ontology" / "clinical.json", project / "ontology.json")

    count = 0
    for result in pipeline.run_workflow_reader(workflow.reader):
        if not result.ok:
            raise SystemExit(f"{result.pack.pack_id} failed: {result.error}")
        out = project / "packs" / f"{result.pack.pack_id}.json"
        out.write_text(serialize_pack(result.pack) + "\n", encoding="utf-8")
        count += 1

    mp = new_multipack("coref-review")
    mp.add_pack("left", _event_pack("left", LEFT_TEXT, ["launch", "liftoff", "recovery"]))
    mp.add_pack("right", _event_pack("right", RIGHT_TEXT, ["launch", "liftoff", "Recovery"]))
    (project / "multipacks" / "coref-review.json").write_text(
        serialize_multipack(mp) + "\n", encoding="utf-8"
    )

    print(f"wrote {count} packs and 1 multipack under {project}")
    print(f"next: annopack serve --root {root} --port 8765")
    return 0


if __name__ == "__main__":
    sys.exit(main())
