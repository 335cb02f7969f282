"""Corpus-level SARI, transcribed from the EASSE package (easse/sari.py).

Used once to produce the cross-check fixture under
crates/core/tests/fixtures/. It follows EASSE's corpus ("micro") path with
lowercase=False and no tokenizer, since the fixture is already lowercased
and whitespace-tokenized:

* n-grams of orders 1..4 over whitespace tokens;
* ADD on n-gram sets, KEEP/DELETE on counters where source and system
  counts are multiplied by the number of references;
* precision/recall are 0 on an empty denominator;
* P and R are averaged over orders, then combined into F1 per operation.

Usage: python3 tools/easse_sari.py RECORDS.tsv > EXPECTED.tsv
RECORDS.tsv lines are source<TAB>system<TAB>ref1<TAB>ref2...
"""

import sys
from collections import Counter

NGRAM_ORDER = 4


def extract_ngrams(line):
    tokens = line.split()
    out = []
    for n in range(1, NGRAM_ORDER + 1):
        c = Counter()
        for i in range(0, len(tokens) - n + 1):
            c[" ".join(tokens[i : i + n])] += 1
        out.append(c)
    return out


def multiply_counter(c, v):
    return Counter({k: c[k] * v for k in c})


def compute_ngram_stats(orig_sents, sys_sents, refs_sents):
    stats = {k: [0] * NGRAM_ORDER for k in (
        "add_sys_correct", "add_sys_total", "add_ref_total",
        "keep_sys_correct", "keep_sys_total", "keep_ref_total",
        "del_sys_correct", "del_sys_total", "del_ref_total")}
    for orig_sent, sys_sent, *ref_sents in zip(orig_sents, sys_sents, *refs_sents):
        orig_ngrams = extract_ngrams(orig_sent)
        sys_ngrams = extract_ngrams(sys_sent)
        refs_ngrams = [Counter() for _ in range(NGRAM_ORDER)]
        for ref_sent in ref_sents:
            for n, c in enumerate(extract_ngrams(ref_sent)):
                refs_ngrams[n] += c
        num_refs = len(ref_sents)
        for n in range(NGRAM_ORDER):
            sys_and_not_orig = set(sys_ngrams[n]) - set(orig_ngrams[n])
            stats["add_sys_correct"][n] += len(sys_and_not_orig & set(refs_ngrams[n]))
            stats["add_sys_total"][n] += len(sys_and_not_orig)
            stats["add_ref_total"][n] += len(set(refs_ngrams[n]) - set(orig_ngrams[n]))

            orig_mul = multiply_counter(orig_ngrams[n], num_refs)
            sys_mul = multiply_counter(sys_ngrams[n], num_refs)
            keep_sys = orig_mul & sys_mul
            keep_ref = orig_mul & refs_ngrams[n]
            stats["keep_sys_correct"][n] += sum((keep_sys & keep_ref).values())
            stats["keep_sys_total"][n] += sum(keep_sys.values())
            stats["keep_ref_total"][n] += sum(keep_ref.values())

            del_sys = orig_mul - sys_mul
            del_ref = orig_mul - refs_ngrams[n]
            stats["del_sys_correct"][n] += sum((del_sys & del_ref).values())
            stats["del_sys_total"][n] += sum(del_sys.values())
            stats["del_ref_total"][n] += sum(del_ref.values())
    return stats


def compute_precision_recall(sys_correct, sys_total, ref_total):
    precision = sys_correct / sys_total if sys_total > 0 else 0.0
    recall = sys_correct / ref_total if ref_total > 0 else 0.0
    return precision, recall


def compute_f1(precision, recall):
    if precision > 0 or recall > 0:
        return 2 * precision * recall / (precision + recall)
    return 0.0


def corpus_sari_operation_scores(orig_sents, sys_sents, refs_sents):
    s = compute_ngram_stats(orig_sents, sys_sents, refs_sents)
    scores = []
    for op in ("add", "keep", "del"):
        ps, rs = [], []
        for n in range(NGRAM_ORDER):
            p, r = compute_precision_recall(
                s[op + "_sys_correct"][n], s[op + "_sys_total"][n], s[op + "_ref_total"][n])
            ps.append(p)
            rs.append(r)
        scores.append(100 * compute_f1(sum(ps) / NGRAM_ORDER, sum(rs) / NGRAM_ORDER))
    return tuple(scores)


def main(path):
    rows = [line.rstrip("\n").split("\t") for line in open(path, encoding="utf-8") if line.strip()]
    num_refs = {len(r) - 2 for r in rows}
    if len(num_refs) != 1:
        sys.exit("every record needs the same number of references")
    orig = [r[0] for r in rows]
    system = [r[1] for r in rows]
    refs = [[r[2 + j] for r in rows] for j in range(num_refs.pop())]
    add, keep, dele = corpus_sari_operation_scores(orig, system, refs)
    print("sari\tadd\tkeep\tdelete")
    print(f"{(add + keep + dele) / 3:.10f}\t{add:.10f}\t{keep:.10f}\t{dele:.10f}")


if __name__ == "__main__":
    main(sys.argv[1])
