#!/usr/bin/env python3
"""Builds replay.jsonl from rendered prompt files and raw_outputs.json.

usage: make_replay.py PROMPTS.jsonl... > replay.jsonl
Prompts with a target URL take their output from the "cl" table, the rest
from "e+cl".
"""
import hashlib
import json
import sys

raw = json.load(open("raw_outputs.json"))
store = {}
for path in sys.argv[1:]:
    for line in open(path):
        p = json.loads(line)
        table = raw["cl" if p.get("target_url") else "e+cl"]
        fp = hashlib.sha256(p["text"].encode("utf-8")).hexdigest()
        store.setdefault(fp, table[p["id"]])
for fp in sorted(store):
    sys.stdout.write(json.dumps({"fingerprint": fp, "raw": store[fp]}, ensure_ascii=False, separators=(",", ":")) + "\n")
