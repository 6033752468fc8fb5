#include "mrrlvr/mathtext.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

#include "mrrlvr/errors.hpp"

namespace mrrlvr::mathtext {
namespace {

bool is_ascii_letter(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// True when s[i] is preceded by an odd number of backslashes (i.e. escaped).
bool is_escaped(const std::string& s, std::size_t i) {
    std::size_t backslashes = 0;
    while (i > 0 && s[i - 1] == '\\') {
        ++backslashes;
        --i;
    }
    return backslashes % 2 == 1;
}

// Replace every occurrence of LaTeX command `cmd` (e.g. "\\dfrac") that is not
// followed by a letter (so "\\left" never eats "\\leftarrow") with `repl`.
std::string replace_command(const std::string& s, const std::string& cmd,
                            const std::string& repl) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s.compare(i, cmd.size(), cmd) == 0 &&
            (i + cmd.size() >= s.size() || !is_ascii_letter(s[i + cmd.size()])) &&
            !is_escaped(s, i)) {
            out += repl;
            i += cmd.size();
        } else {
            out += s[i];
            ++i;
        }
    }
    return out;
}

void trim_in_place(std::string& s) {
    std::size_t b = 0;
    while (b < s.size() && is_space(s[b])) ++b;
    std::size_t e = s.size();
    while (e > b && is_space(s[e - 1])) --e;
    s = s.substr(b, e - b);
}

// Strip one layer of outer math delimiters if it wraps the whole string.
// Returns true when something was stripped (caller loops).
bool strip_outer_delims(std::string& s) {
    trim_in_place(s);
    auto interior_free_of = [&](std::size_t from, std::size_t to, const char* needle) {
        return s.find(needle, from) >= to;
    };
    if (s.size() >= 4 && s.compare(0, 2, "$$") == 0 && s.compare(s.size() - 2, 2, "$$") == 0 &&
        interior_free_of(2, s.size() - 2, "$")) {
        s = s.substr(2, s.size() - 4);
        return true;
    }
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$' && !is_escaped(s, s.size() - 1) &&
        interior_free_of(1, s.size() - 1, "$")) {
        s = s.substr(1, s.size() - 2);
        return true;
    }
    if (s.size() >= 4 && s.compare(0, 2, "\\(") == 0 && s.compare(s.size() - 2, 2, "\\)") == 0 &&
        interior_free_of(2, s.size() - 2, "\\)")) {
        s = s.substr(2, s.size() - 4);
        return true;
    }
    if (s.size() >= 4 && s.compare(0, 2, "\\[") == 0 && s.compare(s.size() - 2, 2, "\\]") == 0 &&
        interior_free_of(2, s.size() - 2, "\\]")) {
        s = s.substr(2, s.size() - 4);
        return true;
    }
    return false;
}

// Lowercase maximal ASCII-letter runs of length >= 2 that are not LaTeX
// commands. Single letters stay untouched so variables keep their case.
void lowercase_words(std::string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_ascii_letter(s[i])) {
            bool is_command = (i > 0 && s[i - 1] == '\\' && !is_escaped(s, i - 1));
            std::size_t j = i;
            while (j < s.size() && is_ascii_letter(s[j])) ++j;
            if (!is_command && j - i >= 2) {
                for (std::size_t k = i; k < j; ++k) {
                    s[k] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[k])));
                }
            }
            i = j;
        } else {
            ++i;
        }
    }
}

// --- tiny arithmetic evaluator over canonical (whitespace-free) text ---
//
// expr   := sign? unit ('%' | "\%")?
// unit   := number | "\frac" braced braced | "\sqrt" braced | braced
// braced := '{' expr '}'
// number := plain decimal/scientific literal (from_chars)
struct Parser {
    const std::string& s;
    std::size_t pos = 0;

    explicit Parser(const std::string& str) : s(str) {}

    bool eat(const char* tok) {
        std::size_t n = std::strlen(tok);
        if (s.compare(pos, n, tok) == 0) {
            pos += n;
            return true;
        }
        return false;
    }

    std::optional<double> parse_expr() {
        double sign = 1.0;
        while (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) {
            if (s[pos] == '-') sign = -sign;
            ++pos;
        }
        auto v = parse_unit();
        if (!v) return std::nullopt;
        if (eat("\\%") || eat("%")) {
            *v /= 100.0;
        }
        return sign * *v;
    }

    std::optional<double> parse_unit() {
        if (eat("\\frac")) {
            auto num = parse_braced();
            if (!num) return std::nullopt;
            auto den = parse_braced();
            if (!den || *den == 0.0) return std::nullopt;
            return *num / *den;
        }
        if (eat("\\sqrt")) {
            auto arg = parse_braced();
            if (!arg || *arg < 0.0) return std::nullopt;
            return std::sqrt(*arg);
        }
        if (pos < s.size() && s[pos] == '{') {
            return parse_braced();
        }
        return parse_number();
    }

    std::optional<double> parse_braced() {
        if (pos >= s.size() || s[pos] != '{') return std::nullopt;
        ++pos;
        auto v = parse_expr();
        if (!v) return std::nullopt;
        if (pos >= s.size() || s[pos] != '}') return std::nullopt;
        ++pos;
        return v;
    }

    std::optional<double> parse_number() {
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), value);
        if (ec != std::errc() || ptr == s.data() + pos) return std::nullopt;
        pos = static_cast<std::size_t>(ptr - s.data());
        return value;
    }
};

std::optional<double> try_numeric(const std::string& canonical) {
    if (canonical.empty()) return std::nullopt;
    Parser p(canonical);
    auto v = p.parse_expr();
    if (!v || p.pos != canonical.size()) return std::nullopt;
    if (!std::isfinite(*v)) return std::nullopt;
    return v;
}

}  // namespace

std::optional<std::string> extract_boxed(const std::string& text) {
    static const std::string marker = "\\boxed{";
    std::optional<std::string> last;
    std::size_t search = 0;
    while (true) {
        std::size_t at = text.find(marker, search);
        if (at == std::string::npos) break;
        if (is_escaped(text, at)) {  // "\\boxed{" after a literal backslash
            search = at + 1;
            continue;
        }
        std::size_t open = at + marker.size() - 1;  // index of '{'
        int depth = 0;
        std::size_t close = std::string::npos;
        for (std::size_t i = open; i < text.size(); ++i) {
            char c = text[i];
            if ((c == '{' || c == '}') && is_escaped(text, i)) continue;
            if (c == '{') ++depth;
            if (c == '}') {
                --depth;
                if (depth == 0) {
                    close = i;
                    break;
                }
            }
        }
        if (close == std::string::npos) {
            throw UnbalancedBracesError("\\boxed{ group opened at offset " +
                                        std::to_string(at) + " never closes");
        }
        last = text.substr(open + 1, close - open - 1);
        search = close + 1;
    }
    return last;
}

NormalizedExpr normalize(const std::string& raw) {
    std::string s = raw;
    // Delimiters and trailing punctuation can hide each other ("$0.5$."), so
    // strip both to a fixpoint before the rest of the pipeline.
    bool changed = true;
    while (changed) {
        changed = false;
        while (strip_outer_delims(s)) changed = true;
        trim_in_place(s);
        while (!s.empty() && (s.back() == '.' || s.back() == ',')) {
            s.pop_back();
            changed = true;
        }
    }
    s = replace_command(s, "\\left", "");
    s = replace_command(s, "\\right", "");
    s = replace_command(s, "\\dfrac", "\\frac");
    s = replace_command(s, "\\tfrac", "\\frac");

    std::string compact;
    compact.reserve(s.size());
    for (char c : s) {
        if (!is_space(c)) compact += c;
    }
    lowercase_words(compact);

    NormalizedExpr out;
    out.canonical = compact;
    out.numeric_value = try_numeric(compact);
    return out;
}

EquivalenceVerdict math_equivalent(const std::string& a, const std::string& b,
                                   double atol, double rtol) {
    NormalizedExpr na = normalize(a);
    NormalizedExpr nb = normalize(b);

    EquivalenceVerdict v;
    if (na.canonical == nb.canonical) {
        v.equivalent = true;
        v.method = EquivMethod::string_canonical;
        v.similarity = 1.0;
        return v;
    }
    if (na.numeric_value && nb.numeric_value) {
        double va = *na.numeric_value;
        double vb = *nb.numeric_value;
        double tol = std::max(atol, rtol * std::max(std::fabs(va), std::fabs(vb)));
        if (std::fabs(va - vb) <= tol) {
            v.equivalent = true;
            v.method = EquivMethod::numeric;
            v.similarity = 1.0;
            return v;
        }
    }
    v.equivalent = false;
    v.method = EquivMethod::none;
    v.similarity = text_similarity(a, b);
    return v;
}

std::vector<char32_t> decode_utf8(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        std::size_t extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6) {
            cp = c & 0x1F;
            extra = 1;
        } else if ((c >> 4) == 0xE) {
            cp = c & 0x0F;
            extra = 2;
        } else if ((c >> 3) == 0x1E) {
            cp = c & 0x07;
            extra = 3;
        } else {
            // Stray continuation/invalid byte: keep it as its own scalar so the
            // function is total and distance stays well defined.
            out.push_back(c);
            ++i;
            continue;
        }
        if (i + extra >= s.size()) {
            out.push_back(c);
            ++i;
            continue;
        }
        bool ok = true;
        char32_t acc = cp;
        for (std::size_t k = 1; k <= extra; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            acc = (acc << 6) | (cc & 0x3F);
        }
        if (ok) {
            out.push_back(acc);
            i += extra + 1;
        } else {
            out.push_back(c);
            ++i;
        }
    }
    return out;
}

std::size_t edit_distance(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    // Classic two-row Levenshtein DP.
    const std::size_t m = a.size(), n = b.size();
    if (m == 0) return n;
    if (n == 0) return m;
    std::vector<std::size_t> prev(n + 1), cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t cost = (a[i - 1] == b[j - 1]) ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

double text_similarity(const std::string& a, const std::string& b) {
    std::string ca = normalize(a).canonical;
    std::string cb = normalize(b).canonical;
    if (ca.empty() && cb.empty()) return 1.0;
    std::vector<char32_t> ua = decode_utf8(ca);
    std::vector<char32_t> ub = decode_utf8(cb);
    std::size_t longest = std::max(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    std::size_t dist = edit_distance(ua, ub);
    return 1.0 - static_cast<double>(dist) / static_cast<double>(longest);
}

}  // namespace mrrlvr::mathtext
