#!/usr/bin/env python3
"""Regenerate crates/core/data/words.tsv.

Intersects the wordfreq English frequency list with the GCIDE word set (plus
simple -s/-es/-ed/-ing inflections of GCIDE words) and keeps lowercase a-z
words of 3 to 8 letters. Requires `pip install wordfreq
english-words`.
"""
import sys
from pathlib import Path

import wordfreq
from english_words import get_english_words_set

TOP_N = 60000
OUT = Path(__file__).resolve().parent.parent / "crates/core/data/words.tsv"


def is_known(word: str, known: set) -> bool:
    if word in known:
        return True
    for suffix in ("s", "es", "ed", "ing"):
        if word.endswith(suffix) and word[: -len(suffix)] in known:
            return True
    if word.endswith("ed") and word[:-1] in known:
        return True
    return False


def main() -> int:
    known = get_english_words_set(["gcide"], lower=True, alpha=True)
    rows = []
    for word in wordfreq.top_n_list("en", TOP_N):
        if not (word.isascii() and word.isalpha() and word.islower()):
            continue
        if not 3 <= len(word) <= 8 or not is_known(word, known):
            continue
        freq = wordfreq.word_frequency(word, "en")
        if freq > 0:
            rows.append((word, freq))
    rows.sort()
    with OUT.open("w") as fh:
        fh.write("# word<TAB>frequency (wordfreq 'en', filtered to GCIDE + inflections, 3-8 letters)\n")
        for word, freq in rows:
            fh.write(f"{word}\t{freq:.6g}\n")
    print(f"wrote {len(rows)} words to {OUT}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
