#!/usr/bin/env python3
"""Computes the expected graph counts for the 10-document fixture from the
scripted extraction replies in tests/fixtures/mock_providers.json.

Applies the triple-parsing rules independently of the C++ implementation:
split candidate groups at ")...,...(" boundaries, trim one outer paren pair,
require exactly 3 nonempty ';'-separated parts, collapse whitespace, and
deduplicate per document keeping first occurrence. Entities merge on exact
normalized string across documents, in first-appearance order.

The printed values are frozen into tests/test_hig.cpp and the acceptance suite.
"""
import json
import os
import re

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "fixtures")


def norm(s: str) -> str:
    return " ".join(s.split())


def parse_triples(text: str):
    try:
        first = text.index("(")
        last = text.rindex(")")
    except ValueError:
        return [], 0
    if last < first:
        return [], 0
    blob = text[first:last + 1]
    raw_groups = re.split(r"\)\s*,\s*\(", blob)
    triples, skipped, seen = [], 0, set()
    for i, g in enumerate(raw_groups):
        if i == 0 and g.startswith("("):
            g = g[1:]
        if i == len(raw_groups) - 1 and g.endswith(")"):
            g = g[:-1]
        parts = [norm(p) for p in g.split(";")]
        if len(parts) == 3 and all(parts):
            t = tuple(parts)
            if t in seen:
                continue
            seen.add(t)
            triples.append(t)
        else:
            skipped += 1
    return triples, skipped


def main():
    corpus = [json.loads(l) for l in open(os.path.join(FIXTURES, "corpus10.jsonl")) if l.strip()]
    cfg = json.load(open(os.path.join(FIXTURES, "mock_providers.json")))
    replies = {norm(r["match"]): r["reply"] for r in cfg["completion"]["replies"]}

    all_triples = []          # (h, r, t, doc_id) in doc order
    entities = []             # first-appearance order
    entity_docs = {}          # entity -> set of doc ids
    total_skipped = 0
    for doc in corpus:
        text = norm(doc["text"])
        reply = next(v for k, v in replies.items() if k in text)
        triples, skipped = parse_triples(reply)
        total_skipped += skipped
        for (h, r, t) in triples:
            all_triples.append((h, r, t, doc["id"]))
            for e in (h, t):
                if e not in entity_docs:
                    entities.append(e)
                    entity_docs[e] = set()
                entity_docs[e].add(doc["id"])

    print(f"documents      = {len(corpus)}")
    print(f"triples        = {len(all_triples)}")
    print(f"entities       = {len(entities)}")
    print(f"skipped_groups = {total_skipped}")
    for probe in ["Mira Vale Tramway", "Tessa Kornfeld", "river Skelda",
                  "Ardenia Polytechnic Institute", "Greywater Lock"]:
        docs = sorted(entity_docs.get(probe, set()))
        print(f"entity_to_docs[{probe!r}] = {docs}")
    # triples that appear under more than one source document
    from collections import Counter
    c = Counter((h, r, t) for (h, r, t, _) in all_triples)
    dups = {k: v for k, v in c.items() if v > 1}
    print(f"cross_doc_duplicate_triples = {len(dups)} {sorted(dups)}")


if __name__ == "__main__":
    main()
