#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace sats::uni {

// ─── UTF-8 codec ─────────────────────────────────────────────────────────────

// Decodes one code point at byte index `i`. Ill-formed sequences decode to
// U+FFFD one byte at a time, so decoding is total and offsets stay monotonic.
struct DecodedCp {
    char32_t cp;
    std::size_t len;
};

inline DecodedCp decode_one(std::string_view s, std::size_t i) {
    const auto n = s.size();
    const unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    if ((b0 >> 5) == 0x6 && i + 1 < n) {
        const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
        if ((b1 & 0xC0) == 0x80) {
            const char32_t cp = (char32_t(b0 & 0x1F) << 6) | (b1 & 0x3F);
            if (cp >= 0x80) return {cp, 2};  // reject overlong
        }
    } else if ((b0 >> 4) == 0xE && i + 2 < n) {
        const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
        const unsigned char b2 = static_cast<unsigned char>(s[i + 2]);
        if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80) {
            const char32_t cp =
                (char32_t(b0 & 0x0F) << 12) | (char32_t(b1 & 0x3F) << 6) | (b2 & 0x3F);
            if (cp >= 0x800 && !(cp >= 0xD800 && cp <= 0xDFFF)) return {cp, 3};
        }
    } else if ((b0 >> 3) == 0x1E && i + 3 < n) {
        const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
        const unsigned char b2 = static_cast<unsigned char>(s[i + 2]);
        const unsigned char b3 = static_cast<unsigned char>(s[i + 3]);
        if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80 && (b3 & 0xC0) == 0x80) {
            const char32_t cp = (char32_t(b0 & 0x07) << 18) | (char32_t(b1 & 0x3F) << 12) |
                                (char32_t(b2 & 0x3F) << 6) | (b3 & 0x3F);
            if (cp >= 0x10000 && cp <= 0x10FFFF) return {cp, 4};
        }
    }
    return {0xFFFD, 1};
}

inline std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        const auto [cp, len] = decode_one(s, i);
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline bool is_valid_utf8(std::string_view s) {
    for (std::size_t i = 0; i < s.size();) {
        const auto [cp, len] = decode_one(s, i);
        if (cp == 0xFFFD && len == 1) return false;  // only the error path yields this
        i += len;
    }
    return true;
}

// Decoded text plus, for each code point, its byte offset in the source.
struct Utf8Text {
    std::u32string cps;
    std::vector<std::size_t> offsets;  // offsets.size() == cps.size() + 1 (end sentinel)
};

inline Utf8Text decode_utf8_with_offsets(std::string_view s) {
    Utf8Text out;
    out.cps.reserve(s.size());
    out.offsets.reserve(s.size() + 1);
    for (std::size_t i = 0; i < s.size();) {
        const auto [cp, len] = decode_one(s, i);
        out.cps.push_back(cp);
        out.offsets.push_back(i);
        i += len;
    }
    out.offsets.push_back(s.size());
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode_utf8(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

// ─── Classification (ICU-backed) ─────────────────────────────────────────────

// White_Space property. This is what `\s` means throughout the toolkit.
inline bool is_space(char32_t cp) {
    return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

// Any general category P* (punctuation). Symbols (S*) are left alone.
inline bool is_punct(char32_t cp) {
    return u_ispunct(static_cast<UChar32>(cp)) != 0;
}

inline bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

// Simple per-code-point lowercase mapping.
inline char32_t to_lower(char32_t cp) {
    return static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
}

// Canonical composition (NFC).
inline std::u32string nfc(std::u32string_view cps) {
    UErrorCode ec = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(ec);
    if (U_FAILURE(ec) || norm == nullptr) return std::u32string(cps);
    icu::UnicodeString u = icu::UnicodeString::fromUTF32(
        reinterpret_cast<const UChar32*>(cps.data()), static_cast<int32_t>(cps.size()));
    icu::UnicodeString composed = norm->normalize(u, ec);
    if (U_FAILURE(ec)) return std::u32string(cps);
    std::u32string out(static_cast<std::size_t>(composed.countChar32()), U'\0');
    composed.toUTF32(reinterpret_cast<UChar32*>(out.data()),
                     static_cast<int32_t>(out.size()), ec);
    if (U_FAILURE(ec)) return std::u32string(cps);
    return out;
}

}  // namespace sats::uni
