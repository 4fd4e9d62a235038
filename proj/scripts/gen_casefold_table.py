#!/usr/bin/env python3
"""Regenerate src/casefold_table.inc from the Python unicodedata database.

The table holds every codepoint whose Unicode full case folding differs from
the codepoint itself, sorted by codepoint for binary search. Each entry maps
to at most three folded codepoints (the longest full folding in the UCD).

Usage: python3 scripts/gen_casefold_table.py > src/casefold_table.inc
"""

import sys
import unicodedata

entries = []
for cp in range(0x110000):
    if 0xD800 <= cp <= 0xDFFF:
        continue
    ch = chr(cp)
    folded = ch.casefold()
    if folded != ch:
        out = [ord(c) for c in folded]
        if len(out) > 3:
            raise SystemExit(f"folding of U+{cp:04X} longer than 3")
        entries.append((cp, out))

sys.stdout.write("// Generated by scripts/gen_casefold_table.py "
                 f"(Unicode {unicodedata.unidata_version}). Do not edit.\n")
sys.stdout.write(f"static constexpr std::size_t kCaseFoldCount = {len(entries)};\n")
sys.stdout.write("static constexpr CaseFoldEntry kCaseFoldTable[] = {\n")
for cp, out in entries:
    padded = out + [0] * (3 - len(out))
    cps = ", ".join(f"0x{c:04X}" for c in padded)
    sys.stdout.write(f"    {{0x{cp:04X}, {{{cps}}}, {len(out)}}},\n")
sys.stdout.write("};\n")
