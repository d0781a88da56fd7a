#!/usr/bin/env python3
"""Independent scorer used to cross-check golden evaluation numbers.

usage: score_oracle.py CORPUS.jsonl PREDICTIONS.jsonl
Prints one CSV row per scheme: scheme,P,R,P(b),R(b).
"""
import json
import sys

DATASET = {"DatasetDirectLink", "DatasetLandingPage"}
ALIASES = {
    "datasetdirectlink": "DatasetDirectLink", "datasetlandingpage": "DatasetLandingPage",
    "software": "Software", "other": "Other",
}


def norm(label):
    if label is None:
        return None
    key = "".join(c for c in label if c not in "_- ").lower()
    return ALIASES.get(key)


def lcs(a, b):
    best = 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
                best = max(best, cur[j])
        prev = cur
    return best


def greedy(preds, golds):
    taken, pairs = set(), []
    for gi, g in enumerate(golds):
        best = None
        for pi, p in enumerate(preds):
            if pi in taken:
                continue
            r = lcs(p["url"], g["url"]) / len(g["url"])
            if r > 0 and (best is None or r > best[1]):
                best = (pi, r)
        if best:
            taken.add(best[0])
            pairs.append((gi, best[0], best[1]))
    return pairs, len(golds) - len(pairs), len(preds) - len(taken)


def main():
    corpus = [json.loads(l) for l in open(sys.argv[1]) if l.strip()]
    preds = {r["id"]: r for r in (json.loads(l) for l in open(sys.argv[2]) if l.strip())}
    for scheme in ["Strict", "Exact", "Partial", "Type"]:
        row = [scheme]
        for binary in (False, True):
            cor = inc = par = mis = spu = 0
            for rec in corpus:
                pr = preds[rec["id"]]
                p = pr["predictions"] if pr["parse_status"] == "parsed" else []
                pairs, m, s = greedy(p, rec["mentions"])
                mis += m
                spu += s
                for gi, pi, r in pairs:
                    g, q = rec["mentions"][gi], p[pi]
                    pl = norm(q["label"])
                    if binary:
                        same_label = (pl in DATASET) == (g["label"] in DATASET)
                    else:
                        same_label = pl == g["label"]
                    same_url = q["url"] == g["url"]
                    if scheme == "Strict":
                        v = "c" if same_url and same_label else "i"
                    elif scheme == "Exact":
                        v = "c" if same_url else "i"
                    elif scheme == "Partial":
                        v = "c" if same_url else "p"
                    else:
                        v = "c" if same_label else "i"
                    cor += v == "c"
                    inc += v == "i"
                    par += v == "p"
            num = cor + 0.5 * par
            pd, rd = cor + inc + par + spu, cor + inc + par + mis
            row += ["%.6f" % (num / pd if pd else 0), "%.6f" % (num / rd if rd else 0)]
        print(",".join([row[0], row[1], row[2], row[3], row[4]]))


main()
