#!/usr/bin/env python3
"""Regenerate data/emoji_names.tsv from the `emoji` package (CLDR short names).

Each line: space-separated hex codepoints, a tab, then the lowercase name.
Entries made only of ASCII codepoints are skipped so plain text is never rewritten.
"""
import sys

import emoji


def clean(name: str) -> str:
    return name.strip(":").replace("_", " ").lower()


def main(out_path: str) -> None:
    rows = []
    for seq, info in emoji.EMOJI_DATA.items():
        if all(ord(c) < 0x80 for c in seq):
            continue
        rows.append((" ".join(f"{ord(c):04X}" for c in seq), clean(info["en"])))
    rows.sort()
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(f"# generated by tools/gen_emoji_table.py from emoji {emoji.__version__}\n")
        for cps, name in rows:
            fh.write(f"{cps}\t{name}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/emoji_names.tsv")
