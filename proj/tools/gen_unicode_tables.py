#!/usr/bin/env python3
"""Regenerates src/unicode_tables.cpp from Python's unicodedata."""
import sys
import unicodedata

MAX_CP = 0x10FFFF


def ranges(pred):
    out = []
    start = None
    for cp in range(MAX_CP + 2):
        hit = cp <= MAX_CP and pred(cp)
        if hit and start is None:
            start = cp
        elif not hit and start is not None:
            out.append((start, cp - 1))
            start = None
    return out


def cat(cp):
    return unicodedata.category(chr(cp))


# White_Space property (PropList.txt); not derivable from categories alone.
WHITE_SPACE = {0x09, 0x0A, 0x0B, 0x0C, 0x0D, 0x20, 0x85, 0xA0, 0x1680,
               *range(0x2000, 0x200B), 0x2028, 0x2029, 0x202F, 0x205F, 0x3000}


def emit_ranges(name, rs):
    lines = [f"const CodepointRange {name}[] = {{"]
    row = []
    for lo, hi in rs:
        row.append(f"{{0x{lo:X}, 0x{hi:X}}}")
        if len(row) == 4:
            lines.append("    " + ", ".join(row) + ",")
            row = []
    if row:
        lines.append("    " + ", ".join(row) + ",")
    lines.append("};")
    return "\n".join(lines)


def main():
    ws = ranges(lambda cp: cp in WHITE_SPACE)
    punct = ranges(lambda cp: cat(cp).startswith("P"))
    alnum = ranges(lambda cp: cat(cp)[0] in "LN")
    lower = []
    for cp in range(MAX_CP + 1):
        ch = chr(cp)
        lo = ch.lower()
        if len(lo) == 1 and lo != ch:
            lower.append((cp, ord(lo)))
    out = [
        "// Generated by tools/gen_unicode_tables.py (Unicode "
        + unicodedata.unidata_version + "). Do not edit.",
        "",
        '#include "unicode_tables.hpp"',
        "",
        "namespace qarank::unicode::detail {",
        "",
        emit_ranges("kWhitespace", ws),
        "",
        emit_ranges("kPunctuation", punct),
        "",
        emit_ranges("kAlnum", alnum),
        "",
        "const CaseMapping kLowercase[] = {",
    ]
    row = []
    for cp, lo in lower:
        row.append(f"{{0x{cp:X}, 0x{lo:X}}}")
        if len(row) == 4:
            out.append("    " + ", ".join(row) + ",")
            row = []
    if row:
        out.append("    " + ", ".join(row) + ",")
    out += [
        "};",
        "",
        "const std::span<const CodepointRange> whitespace_ranges{kWhitespace};",
        "const std::span<const CodepointRange> punctuation_ranges{kPunctuation};",
        "const std::span<const CodepointRange> alnum_ranges{kAlnum};",
        "const std::span<const CaseMapping> lowercase_mappings{kLowercase};",
        "",
        "}  // namespace qarank::unicode::detail",
        "",
    ]
    sys.stdout.write("\n".join(out))


if __name__ == "__main__":
    main()
