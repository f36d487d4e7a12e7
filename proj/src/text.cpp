#include "sslstm/text.hpp"

namespace sslstm::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

} // namespace

std::u32string decode_utf8(std::string_view s)
{
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
        if (!ok || overlong || cp > 0x10FFFF || in(cp, 0xD800, 0xDFFF)) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp)
{
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

std::string encode_utf8(std::u32string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) append_utf8(out, cp);
    return out;
}

bool is_valid_utf8(std::string_view s)
{
    const auto cps = decode_utf8(s);
    // A genuine U+FFFD in the input is valid; compare re-encoding instead.
    return encode_utf8(cps) == s;
}

bool is_space(char32_t cp)
{
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' || cp == 0x85
        || cp == 0xA0 || cp == 0x1680 || in(cp, 0x2000, 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F
        || cp == 0x205F || cp == 0x3000;
}

bool is_emoji(char32_t cp)
{
    return in(cp, 0x1F300, 0x1F5FF)     // misc symbols and pictographs
        || in(cp, 0x1F600, 0x1F64F)     // emoticons
        || in(cp, 0x1F680, 0x1F6FF)     // transport and map
        || in(cp, 0x1F900, 0x1F9FF)     // supplemental symbols and pictographs
        || in(cp, 0x1FA70, 0x1FAFF)     // symbols and pictographs extended-A
        || in(cp, 0x1F1E6, 0x1F1FF)     // regional indicators
        || in(cp, 0x2600, 0x26FF)       // misc symbols
        || in(cp, 0x2700, 0x27BF);      // dingbats
}

bool is_emoji_component(char32_t cp)
{
    return cp == 0x200D || in(cp, 0xFE00, 0xFE0F) || in(cp, 0x1F3FB, 0x1F3FF) || cp == 0x20E3;
}

bool is_punct_or_symbol(char32_t cp)
{
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60)
            || (cp >= 0x7B && cp <= 0x7E);
    }
    return in(cp, 0xA1, 0xA9) || in(cp, 0xAB, 0xAC) || in(cp, 0xAE, 0xB1) || cp == 0xB4 || in(cp, 0xB6, 0xB8)
        || cp == 0xBB || cp == 0xBF || cp == 0xD7 || cp == 0xF7
        || in(cp, 0x2010, 0x2027) || in(cp, 0x2030, 0x205E)   // general punctuation
        || in(cp, 0x20A0, 0x20CF)                             // currency
        || in(cp, 0x2100, 0x214F)                             // letterlike symbols
        || in(cp, 0x2190, 0x2BFF)                             // arrows, math, technical, shapes, misc
        || in(cp, 0x2E00, 0x2E7F)                             // supplemental punctuation
        || in(cp, 0x3001, 0x303F)                             // CJK punctuation
        || in(cp, 0x0964, 0x0965) || cp == 0x0970             // Devanagari danda, abbreviation sign
        || in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFF01, 0xFF0F)
        || in(cp, 0x1F000, 0x1FAFF)                           // emoji and pictographic symbols
        || is_emoji_component(cp);
}

bool is_devanagari(char32_t cp) { return in(cp, 0x0900, 0x097F) || in(cp, 0xA8E0, 0xA8FF); }

std::string ascii_lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

bool contains_whitespace(std::string_view s)
{
    for (char32_t cp : decode_utf8(s)) {
        if (is_space(cp)) return true;
    }
    return false;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i == line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h)
{
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace sslstm::text
