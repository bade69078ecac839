#!/usr/bin/env python3
"""Regenerate crates/core/data/entities.json from a third-party-web release.

Keeps only the fields the corpus builder reads (name, domains, category) and
writes strict JSON, one entity per line, in upstream order.

usage: gen_entities.py node_modules/third-party-web/dist/entities-nostats.json > entities.json
"""
import json
import sys


def main(path):
    entities = json.load(open(path, encoding="utf-8"))
    out = [
        {"name": e["name"], "domains": e["domains"], "category": e["category"]}
        for e in entities
        if e.get("domains")
    ]
    print("[")
    print(",\n".join(json.dumps(e, ensure_ascii=False) for e in out))
    print("]")


if __name__ == "__main__":
    main(sys.argv[1])
