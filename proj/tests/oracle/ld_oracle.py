"""Full-matrix word Levenshtein and length counts over a pairs JSONL file.

Independent of the C++ implementation; its output is frozen into the
metrics tests and the acceptance binary.

    python3 tests/oracle/ld_oracle.py tests/data/fixture_pairs.jsonl
"""
import json
import sys
import unicodedata


def strip_edges(tok):
    def punct(ch):
        return unicodedata.category(ch).startswith(("P", "S"))
    i, j = 0, len(tok)
    while i < j and punct(tok[i]):
        i += 1
    while j > i and punct(tok[j - 1]):
        j -= 1
    return tok[i:j]


def tokens(s):
    out = []
    for t in s.split():
        core = strip_edges(t)
        if core:
            out.append(core.lower())
    return out


def distance(a, b):
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def main(path):
    rows = [json.loads(l) for l in open(path, encoding="utf-8") if l.strip()]
    lds, deltas, per_pair = [], [], []
    chosen_longer = rejected_longer = 0
    for r in rows:
        c, k = tokens(r["chosen"]), tokens(r["rejected"])
        ld = distance(c, k)
        delta = len(k) - len(c)
        lds.append(ld)
        deltas.append(abs(delta))
        chosen_longer += delta < 0
        rejected_longer += delta > 0
        per_pair.append((r["id"], ld, len(c), len(k)))
    n = len(rows)
    print(json.dumps({
        "count": n,
        "sum_ld": sum(lds),
        "sum_abs_delta": sum(deltas),
        "chosen_longer": chosen_longer,
        "rejected_longer": rejected_longer,
        "mean_ld": sum(lds) / n,
        "mean_abs_delta": sum(deltas) / n,
        "pct_chosen_longer": 100.0 * chosen_longer / n,
        "pct_rejected_longer": 100.0 * rejected_longer / n,
    }, indent=1))
    for p in per_pair[:5]:
        print(*p)


if __name__ == "__main__":
    main(sys.argv[1])
