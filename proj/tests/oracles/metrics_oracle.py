"""Independent reference implementation of the text metrics.

Writes tests/fixtures/metrics_cases.json with ROUGE-1/2/L and BLEU-4 values
for a fixed list of (candidate, reference) pairs. The C++ implementation is
checked against this file to 1e-6.

Run: python3 tests/oracles/metrics_oracle.py
"""

import json
import math
import os
from collections import Counter
from fractions import Fraction

EPS = 1e-9

CJK_RANGES = [(0x4E00, 0x9FFF), (0x3400, 0x4DBF), (0x20000, 0x2A6DF), (0xF900, 0xFAFF),
              (0x3040, 0x30FF), (0xAC00, 0xD7AF)]
EMOJI_RANGES = [(0x1F000, 0x1FAFF), (0x2600, 0x27BF), (0x2B00, 0x2BFF), (0x1FC00, 0x1FFFF)]
DROPPED = {0x200D} | set(range(0xFE00, 0xFE10)) | set(range(0x1F3FB, 0x1F400))


def in_ranges(cp, ranges):
    return any(lo <= cp <= hi for lo, hi in ranges)


def is_word_char(ch):
    cp = ord(ch)
    if cp < 0x80:
        return ch.isalnum()
    return 0xC0 <= cp <= 0x24F and cp not in (0xD7, 0xF7)


def tokenize(text):
    tokens, word = [], []
    for ch in text:
        cp = ord(ch)
        if is_word_char(ch):
            word.append(ch.lower())
            continue
        if word:
            tokens.append("".join(word))
            word = []
        if cp in DROPPED:
            continue
        if in_ranges(cp, CJK_RANGES) or in_ranges(cp, EMOJI_RANGES):
            tokens.append(ch)
    if word:
        tokens.append("".join(word))
    return tokens


def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def f1(p, r):
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def rouge_n(cand, ref, n):
    if len(ref) < n or len(cand) < n:
        return 0.0, 0.0, 0.0
    c, r = ngrams(cand, n), ngrams(ref, n)
    overlap = sum((c & r).values())
    p = Fraction(overlap, sum(c.values()))
    rc = Fraction(overlap, sum(r.values()))
    return float(p), float(rc), float(f1(p, rc))


def lcs(a, b):
    # Memoised recursion rather than the bottom-up table used in C++.
    import functools

    @functools.lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def rouge_l(cand, ref):
    if not cand or not ref:
        return 0.0, 0.0, 0.0
    l = lcs(tuple(cand), tuple(ref))
    p = Fraction(l, len(cand))
    r = Fraction(l, len(ref))
    return float(p), float(r), float(f1(p, r))


def bleu4(cand, refs):
    if not cand:
        return 0.0
    logs = []
    for n in range(1, 5):
        c = ngrams(cand, n)
        best = Counter()
        for ref in refs:
            best |= ngrams(ref, n)
        clipped = sum(min(cnt, best[g]) for g, cnt in c.items())
        total = max(len(cand) - n + 1, 1)
        logs.append(math.log((clipped if clipped > 0 else EPS) / total))
    c_len = len(cand)
    r_len = min((abs(len(r) - c_len), len(r)) for r in refs)[1]
    bp = 1.0 if c_len >= r_len else math.exp(1 - r_len / c_len)
    return bp * math.exp(sum(logs) / 4)


PAIRS = [
    ("the cat sat", "the cat sat on the mat"),
    ("the cat sat on the mat", "the cat sat on the mat"),
    ("a b c", "a c b"),
    ("dogs bark loudly", "cats meow softly"),
    ("the the the the", "the cat"),
    ("the cat is on the mat", "there is a cat on the mat"),
    ("paris bakery bread 42 yummy", "omg Paris Bakery got bread 42 yummy lol"),
    ("I paid 42 dollars for the cake at Kyoto Cafe", "paid 24 dollars for cake at the Kyoto Cafe honestly"),
    ("Hello, World! Hello again.", "hello world again"),
    ("we went to Oslo Market and got tea", "went to the Oslo Market and we got some tea"),
    ("one two three four five six seven", "one two three four five six seven eight nine ten"),
    ("one two three four five six seven eight nine ten", "one two three four"),
    ("x y z w", "x y z w"),
    ("short", "a much longer reference sentence here"),
    ("我 爱 北京", "我爱北京天安门"),
    ("今天天气很好", "今天天气不好"),
    ("great food 😀 love it 🔥", "great food love it 😀"),
    ("café très bien", "Café tres bien"),
    ("the price was 12 and the soup was hot", "the soup was 12 and the price was hot"),
    ("lol lol lol omg", "omg lol"),
    ("a b a b a b", "a b a b"),
    ("noodles in Seoul Diner 77 woah", "woah Seoul Diner noodles 77 woah tbh"),
    ("brisk bramble bloom", "alpha amber anchor"),
    ("alpha amber anchor apex arbor", "apex arbor alpha amber anchor"),
]


def main():
    out = []
    for cand, ref in PAIRS:
        ct, rt = tokenize(cand), tokenize(ref)
        r1, r2, rl = rouge_n(ct, rt, 1), rouge_n(ct, rt, 2), rouge_l(ct, rt)
        out.append({
            "candidate": cand,
            "reference": ref,
            "candidate_tokens": ct,
            "rouge1": dict(zip(("precision", "recall", "f1"), r1)),
            "rouge2": dict(zip(("precision", "recall", "f1"), r2)),
            "rougeL": dict(zip(("precision", "recall", "f1"), rl)),
            "bleu4": bleu4(ct, [rt]),
        })
    path = os.path.join(os.path.dirname(__file__), "..", "fixtures", "metrics_cases.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(out, f, ensure_ascii=False, indent=1)
        f.write("\n")
    print(f"wrote {len(out)} cases to {os.path.normpath(path)}")


if __name__ == "__main__":
    main()
