#!/usr/bin/env python3
"""Independent reference implementations of the evaluation metrics.

Used to compute the frozen expected values asserted in tests/test_evaluation.cpp
and the acceptance suite. Deliberately written from the metric definitions,
not ported from the C++ code.

Run: python3 tests/oracles/metrics_oracle.py
"""
import math
import re
import string
from fractions import Fraction


# ---- tokenization: whitespace for space-delimited text, characters otherwise

def tokenize(s: str):
    t = s.strip()
    if t == "":
        return []
    if any(ch.isspace() for ch in t):
        return t.split()
    return list(t)


# ---- Exact Match (SQuAD-style normalization)

def em_normalize(s: str) -> str:
    s = s.lower()
    s = "".join(ch for ch in s if ch not in string.punctuation)
    toks = [t for t in s.split() if t not in ("a", "an", "the")]
    return " ".join(toks)


def exact_match(pred: str, golds) -> int:
    p = em_normalize(pred)
    return 1 if any(p == em_normalize(g) for g in golds) else 0


# ---- BLEU: n-grams up to 4, add-one smoothing on zero counts, brevity penalty

def ngram_counts(tokens, n):
    out = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i:i + n])
        out[g] = out.get(g, 0) + 1
    return out


def bleu(pred: str, refs) -> float:
    ptoks = tokenize(pred)
    rtoks = [tokenize(r) for r in refs]
    if not ptoks:
        return 1.0 if rtoks and all(len(r) == 0 for r in rtoks) else 0.0
    if not rtoks:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        pc = ngram_counts(ptoks, n)
        den = max(0, len(ptoks) - n + 1)
        num = 0
        for g, c in pc.items():
            best = max(rc.get(g, 0) for rc in (ngram_counts(r, n) for r in rtoks))
            num += min(c, best)
        if num == 0:
            p = Fraction(1, den + 1)
        else:
            p = Fraction(num, den)
        log_sum += math.log(float(p))
    geo = math.exp(log_sum / 4.0)
    c = len(ptoks)
    # closest reference length; ties broken toward the shorter reference
    r = min((len(r) for r in rtoks), key=lambda L: (abs(L - c), L))
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * geo


# ---- Rouge-L: LCS F1, max over references

def lcs_len(a, b):
    m, n = len(a), len(b)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            dp[i + 1][j + 1] = dp[i][j] + 1 if a[i] == b[j] else max(dp[i][j + 1], dp[i + 1][j])
    return dp[m][n]


def rouge_l_single(pred: str, ref: str) -> float:
    p, r = tokenize(pred), tokenize(ref)
    if not p or not r:
        return 0.0
    l = lcs_len(p, r)
    if l == 0:
        return 0.0
    prec = l / len(p)
    rec = l / len(r)
    return 2 * prec * rec / (prec + rec)


def rouge_l(pred: str, refs) -> float:
    if not refs:
        return 0.0
    return max(rouge_l_single(pred, r) for r in refs)


EM_CASES = [
    ("Paris", ["Paris"]),
    ("the paris.", ["Paris"]),
    ("London", ["Paris"]),
    ("A  cat", ["cat"]),
    ("an apple", ["Apple!"]),
    ("theater", ["ater"]),
    ("United-States", ["United States"]),
    ("42", ["42.0"]),
    ("Barack Obama", ["barack obama", "Obama"]),
    ("the", [""]),
    ("O'Brien", ["OBrien"]),
    ("dry eye syndrome", ["Dry Eye Syndrome", "myopia"]),
]

BLEU_CASES = [
    ("the cat sat on the mat", ["the cat sat on the mat"]),
    ("the cat sat", ["the cat sat down"]),
    ("t01 t02 t03 t04 t05 t06 t07 t08 t09 t10 t11 t12 t13 t14 t15 t16 t17 t18 t19 t20 t21 t22 t23 t24 t25 t26 t27 t28 t29 t30",
     ["u01 u02 u03 u04 u05 u06 u07 u08 u09 u10 u11 u12 u13 u14 u15 u16 u17 u18 u19 u20 u21 u22 u23 u24 u25 u26 u27 u28 u29 u30"]),
    ("the quick brown fox jumps over the lazy dog",
     ["the fast brown fox leaps over the lazy dog"]),
    ("你好世界", ["你好世界"]),
    ("今天天气很好", ["今天天气不错"]),
    ("the cat", ["the cat sat", "a cat"]),
    ("a b c d e f", ["a b c"]),
    ("yes", ["no"]),
    ("the the the the", ["the cat"]),
    ("green ideas sleep furiously tonight", ["colorless green ideas sleep furiously"]),
    ("one two three four five six seven", ["one two three four five six seven eight nine"]),
]

ROUGE_CASES = [
    ("a b c d", ["a c d"]),
    ("the cat sat on the mat", ["the cat sat on the mat"]),
    ("x y z", ["p q r"]),
    ("a b c", ["c b a"]),
    ("b c", ["a b c d"]),
    ("你好世界", ["你好人间"]),
    ("the cat", ["the cat sat", "totally different words"]),
    ("x", ["x"]),
    ("x", ["y"]),
    ("the quick brown fox jumps over the lazy dog",
     ["the fast brown fox leaps over the lazy dog"]),
    ("one two three four", ["four three two one"]),
    ("today the weather is very nice", ["today weather is nice"]),
]


def main():
    print("== exact_match ==")
    for pred, golds in EM_CASES:
        print(f"  em({pred!r}, {golds!r}) = {exact_match(pred, golds)}")
    print("== bleu ==")
    for pred, refs in BLEU_CASES:
        print(f"  bleu({pred!r}, {refs!r}) = {bleu(pred, refs):.12f}")
    print("== rouge_l ==")
    for pred, refs in ROUGE_CASES:
        print(f"  rouge_l({pred!r}, {refs!r}) = {rouge_l(pred, refs):.12f}")


if __name__ == "__main__":
    main()
