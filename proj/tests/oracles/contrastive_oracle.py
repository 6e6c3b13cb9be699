"""Scalar re-evaluation of the in-batch negative loss for fixed similarity
tables. Writes tests/fixtures/inbatch_cases.json.

loss = -(1/n) sum_i log( exp(s(a_i,p_i)) /
                         (sum_k exp(s(a_i,p_k)) + sum_k exp(s(a_i,n_ik))) )

Run: python3 tests/oracles/contrastive_oracle.py
"""

import json
import math
import os

import numpy as np


def loss(pos, neg):
    n = len(pos)
    total = 0.0
    for i in range(n):
        denom = sum(math.exp(s) for s in pos[i]) + sum(math.exp(s) for s in neg[i])
        total += -math.log(math.exp(pos[i][i]) / denom)
    return total / n


def main():
    cases = [{
        "name": "two anchors one negative",
        "anchor_positive": [[0.9, 0.1], [0.0, 0.8]],
        "anchor_negative": [[0.2], [-0.3]],
    }]
    rng = np.random.default_rng(20240611)
    for n, m in [(3, 2), (4, 0), (1, 3), (5, 1)]:
        cases.append({
            "name": f"random n={n} m={m}",
            "anchor_positive": rng.uniform(-1, 1, (n, n)).round(6).tolist(),
            "anchor_negative": rng.uniform(-1, 1, (n, m)).round(6).tolist() if m else [[] for _ in range(n)],
        })
    for c in cases:
        c["loss"] = loss(c["anchor_positive"], c["anchor_negative"])
    path = os.path.join(os.path.dirname(__file__), "..", "fixtures", "inbatch_cases.json")
    with open(path, "w") as f:
        json.dump(cases, f, indent=1)
        f.write("\n")
    print(f"wrote {len(cases)} cases to {os.path.normpath(path)}")


if __name__ == "__main__":
    main()
