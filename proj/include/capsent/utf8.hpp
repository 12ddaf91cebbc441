#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace capsent {

// Decodes UTF-8 into codepoints. Invalid sequences (stray continuation bytes,
// overlong encodings, surrogates, out-of-range values) become U+FFFD one byte
// at a time, so malformed input degrades instead of failing.
inline std::vector<std::uint32_t> decode_utf8(const std::string& s) {
    std::vector<std::uint32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    const auto bad = [&out, &i] {
        out.push_back(0xFFFDu);
        ++i;
    };
    while (i < s.size()) {
        unsigned char b0 = static_cast<unsigned char>(s[i]);
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        std::size_t len;
        std::uint32_t cp;
        unsigned char lo = 0x80, hi = 0xBF;
        if (b0 >= 0xC2 && b0 <= 0xDF) {
            len = 2;
            cp = b0 & 0x1Fu;
        } else if (b0 >= 0xE0 && b0 <= 0xEF) {
            len = 3;
            cp = b0 & 0x0Fu;
            if (b0 == 0xE0) lo = 0xA0;        // reject overlong
            if (b0 == 0xED) hi = 0x9F;        // reject surrogates
        } else if (b0 >= 0xF0 && b0 <= 0xF4) {
            len = 4;
            cp = b0 & 0x07u;
            if (b0 == 0xF0) lo = 0x90;        // reject overlong
            if (b0 == 0xF4) hi = 0x8F;        // reject > U+10FFFF
        } else {
            bad();
            continue;
        }
        if (i + len > s.size()) {
            bad();
            continue;
        }
        bool ok = true;
        std::uint32_t acc = cp;
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char b = static_cast<unsigned char>(s[i + k]);
            unsigned char l = (k == 1) ? lo : 0x80, h = (k == 1) ? hi : 0xBF;
            if (b < l || b > h) {
                ok = false;
                break;
            }
            acc = (acc << 6) | (b & 0x3Fu);
        }
        if (!ok) {
            bad();
            continue;
        }
        out.push_back(acc);
        i += len;
    }
    return out;
}

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Unicode space separators plus the ASCII control whitespace.
inline bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Codepoints stripped out of tokens: punctuation (ASCII, Latin-1, general,
// Arabic, CJK, fullwidth) and invisible format marks. ZWNJ (U+200C) is kept —
// it is word-internal in Persian orthography.
inline bool is_stripped_mark(std::uint32_t cp) {
    if (cp >= 0x21 && cp <= 0x2F) return true;
    if (cp >= 0x3A && cp <= 0x40) return true;
    if (cp >= 0x5B && cp <= 0x60) return true;
    if (cp >= 0x7B && cp <= 0x7E) return true;
    if (cp >= 0xA1 && cp <= 0xBF) return true;
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, bullets
    if (cp >= 0x2030 && cp <= 0x205E) return true;   // per-mille, primes, brackets
    if (cp == 0x200B || cp == 0x200D || cp == 0x200E || cp == 0x200F) return true;
    if (cp >= 0x202A && cp <= 0x202E) return true;   // directional embeddings
    if (cp >= 0x2060 && cp <= 0x2064) return true;
    if (cp == 0xFEFF) return true;                   // BOM / zero-width no-break
    switch (cp) {                                    // Arabic punctuation
        case 0x060C: case 0x060D: case 0x061B: case 0x061E: case 0x061F:
        case 0x066A: case 0x066B: case 0x066C: case 0x066D: case 0x06D4:
            return true;
        default:
            break;
    }
    if (cp >= 0x2E00 && cp <= 0x2E7F) return true;   // supplemental punctuation
    if (cp >= 0x3001 && cp <= 0x303F) return true;   // CJK punctuation
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth forms
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    return false;
}

inline std::uint32_t ascii_lower(std::uint32_t cp) {
    return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
}

}  // namespace capsent
