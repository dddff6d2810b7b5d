#!/usr/bin/env python3
"""Run the clinical workflow in-process and print a corpus summary.

Shows per-document entity counts, sentence polarity, and the most frequent
co-occurring mention pairs across the fixture corpus.
"""

from __future__ import annotations

import sys
from collections import Counter
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from annopack.pipeline import assemble, load_workflow


def main() -> int:
    workflow = load_workflow(REPO / "fixtures" / "workflows" / "clinical.json")
    workflow.processors = [p for p in workflow.processors if p.name != "pack_writer"]
    pipeline = assemble(workflow)

    pair_counts: Counter[tuple[str, str]] = Counter()
    label_counts: Counter[str] = Counter()
    print(f"{'pack':8}  {'tokens':>6}  {'sents':>5}  {'mentions':>8}  {'relations':>9}  {'sentiment':>9}")
    for result in pipeline.run_workflow_reader(workflow.reader):
        pack = result.pack
        if not result.ok:
            print(f"{pack.pack_id:8}  FAILED: {result.error}")
            continue
        sentences = pack.get_entries("Sentence")
        mentions = pack.get_entries("EntityMention", include_subtypes=True)
        relations = pack.get_entries("Relation")
        mean_sent = sum(s.attributes.get("sentiment", 0.0) for s in sentences) / max(
            1, len(sentences)
        )
        print(
            f"{pack.pack_id:8}  {len(pack.get_entries('Token')):>6}  {len(sentences):>5}"
            f"  {len(mentions):>8}  {len(relations):>9}  {mean_sent:>9.3f}"
        )
        for m in mentions:
            label_counts[m.attributes["ner_type"]] += 1
        for rel in relations:
            a, b = pack.get(rel.link[0]), pack.get(rel.link[1])
            pair_counts[(pack.text_of(a).lower(), pack.text_of(b).lower())] += 1

    print("\nmentions by label:", dict(sorted(label_counts.items())))
    print("top co-occurring pairs:")
    for (a, b), n in pair_counts.most_common(5):
        print(f"  {a} ~ {b}: {n}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
