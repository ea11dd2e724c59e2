#!/usr/bin/env python3
"""Regenerates the synthetic corpora and embedding files under data/.

The outputs are checked in; rerunning this script reproduces them byte for byte.
"""
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent

KEYWORDS = {
    "positive": ["good", "great", "lovely", "superb"],
    "negative": ["bad", "poor", "awful", "dreadful"],
    "neutral": ["ordinary", "usual", "standard", "typical"],
}
TARGETS = [["pizza"], ["service"], ["the", "staff"], ["pasta"], ["wine", "list"], ["dessert"]]
CATEGORIES = {"pizza": "FOOD", "service": "SERVICE", "the": "SERVICE", "pasta": "FOOD", "wine": "DRINKS", "dessert": "FOOD"}
FILLERS = ["the", "a", "was", "we", "had", "it", "and", "there", "very", "place", "our", "table", "night", "really", "with"]


def fmt(x):
    return f"{x:.6f}"


def toy_sentence(rng, sid):
    polarity = rng.choice(["negative", "neutral", "positive"])
    keyword = rng.choice(KEYWORDS[polarity])
    target = rng.choice(TARGETS)
    left = [rng.choice(FILLERS) for _ in range(rng.randint(0, 3))]
    right = [rng.choice(FILLERS) for _ in range(rng.randint(0, 3))]
    side = left if rng.random() < 0.5 else right
    side.insert(rng.randint(0, len(side)), keyword)
    tokens = left + target + right
    return {
        "sid": sid,
        "tokens": tokens,
        "target": [len(left), len(left) + len(target)],
        "category": CATEGORIES[target[0]],
        "polarity": polarity,
    }


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


def write_vectors(path, vocab, dim, rng):
    with open(path, "w") as f:
        for w in vocab:
            f.write(w + " " + " ".join(fmt(rng.uniform(-1, 1)) for _ in range(dim)) + "\n")


def toy():
    rng = random.Random(2024)
    train = [toy_sentence(rng, f"train{i:03d}") for i in range(300)]
    test = [toy_sentence(rng, f"test{i:03d}") for i in range(100)]
    write_jsonl(ROOT / "toy" / "train.jsonl", train)
    write_jsonl(ROOT / "toy" / "test.jsonl", test)
    vocab = []
    for words in [FILLERS, *KEYWORDS.values(), *TARGETS]:
        for w in words:
            if w not in vocab:
                vocab.append(w)
    write_vectors(ROOT / "toy" / "vectors.txt", vocab, 6, random.Random(7))


def contextual(corpus_path, out_path, layers, dim, seed, model):
    rng = random.Random(seed)
    with open(corpus_path) as f:
        sentences = [json.loads(line) for line in f if line.strip()]
    seen = set()
    with open(out_path, "w") as f:
        f.write(json.dumps({"header": {"model": model, "layers": layers, "dim": dim, "synthetic": True}}) + "\n")
        for s in sentences:
            if s["sid"] in seen:
                continue
            seen.add(s["sid"])
            for i in range(len(s["tokens"])):
                vecs = [[round(rng.uniform(-1, 1), 6) for _ in range(dim)] for _ in range(layers)]
                f.write(json.dumps({"sid": s["sid"], "tok": i, "layers": vecs}) + "\n")


def fixtures():
    mixed = ROOT / "fixtures" / "hybrid_mixed.jsonl"
    contextual(mixed, ROOT / "fixtures" / "ctx_bert.jsonl", 12, 4, 11, "synthetic-bert-12")
    contextual(mixed, ROOT / "fixtures" / "ctx_elmo.jsonl", 3, 4, 13, "synthetic-elmo-3")
    vocab = []
    for name in ["stats20.jsonl", "hybrid_mixed.jsonl"]:
        with open(ROOT / "fixtures" / name) as f:
            for line in f:
                for w in json.loads(line)["tokens"]:
                    if w not in vocab:
                        vocab.append(w)
    write_vectors(ROOT / "fixtures" / "vectors4.txt", vocab, 4, random.Random(5))


if __name__ == "__main__":
    toy()
    fixtures()
