#!/usr/bin/env python3
"""Writes the bundled mini-corpus (1000 passages) and its 20-question set.

Deterministic for a given seed. Each region document states its capital;
questions ask which region has a given capital, so the gold answer is the
title of the answer-bearing passage.
"""
import argparse
import json
import random
from pathlib import Path

SYLLABLES = ["ka", "lo", "mi", "ren", "tas", "vo", "qui", "dar", "el", "su", "ban", "tor", "ni", "pa", "gu", "zel"]


def word(rng, lo=2, hi=3):
    return "".join(rng.choice(SYLLABLES) for _ in range(rng.randint(lo, hi)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures/minicorpus")
    ap.add_argument("--seed", type=int, default=20240501)
    args = ap.parse_args()
    rng = random.Random(args.seed)

    filler = sorted({word(rng) for _ in range(1500)})
    names = []
    seen = set(filler)
    while len(names) < 1000:
        w = word(rng, 3, 4).capitalize()
        if w.lower() not in seen:
            seen.add(w.lower())
            names.append(w)
    regions, cities = names[:500], names[500:]

    rows = []
    for i in range(1000):
        region = regions[i % 500]
        city = cities[i % 500]
        n = rng.randint(30, 90)
        body = [rng.choice(filler) for _ in range(n)]
        if i < 500:
            fact = f"The capital of {region} is {city}."
            body.insert(rng.randint(0, n), fact)
            title = region
        else:
            # Distractor: mentions the city without naming the region.
            body.insert(rng.randint(0, n), f"Travellers to {city} rarely stay long.")
            title = f"{city} travel notes"
        rows.append((f"d{i:04d}", " ".join(body), title))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "corpus.tsv", "w", encoding="utf-8", newline="\n") as f:
        f.write("id\ttext\ttitle\n")
        for doc_id, text, title in rows:
            f.write(f"{doc_id}\t{text}\t{title}\n")
    with open(out / "questions.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for idx in rng.sample(range(500), 20):
            q = {"question": f"Which region has its capital at {cities[idx]}?", "answers": [regions[idx]]}
            f.write(json.dumps(q) + "\n")


if __name__ == "__main__":
    main()
