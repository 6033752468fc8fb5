#pragma once

#include <optional>
#include <string>
#include <vector>

// Math-text normalization and equivalence checking.
//
// This is deliberately not a CAS: equivalence is canonical-string equality
// plus numeric evaluation of plain arithmetic forms. Anything fancier (symbolic
// simplification, unit conversion) is out of scope by design; graded partial
// credit comes from text_similarity instead.
namespace mrrlvr::mathtext {

struct NormalizedExpr {
    std::string canonical;                 // whitespace-free canonical form
    std::optional<double> numeric_value;   // set iff the text is pure arithmetic
};

enum class EquivMethod {
    none,              // not equivalent
    string_canonical,  // canonical forms are byte-identical
    numeric,           // both sides evaluate and agree within tolerance
};

struct EquivalenceVerdict {
    bool equivalent = false;
    EquivMethod method = EquivMethod::none;
    double similarity = 0.0;  // 1.0 whenever equivalent; graded fallback otherwise
};

// Content of the LAST \boxed{...} group in `text`, with balanced-brace
// matching (nested groups allowed, \{ and \} are literals). Returns nullopt
// when no \boxed{ marker exists; throws UnbalancedBracesError when a marker's
// group never closes.
std::optional<std::string> extract_boxed(const std::string& text);

// Canonicalize: strip whitespace, \left/\right, outer $ / \( \) / \[ \]
// delimiters and trailing '.'/',', rewrite \dfrac and \tfrac to \frac,
// lowercase multi-character command-free words (units like "Meters"; never
// single-letter variables), then attempt numeric evaluation (integers,
// decimals, \frac{a}{b}, \sqrt{n}, percent, scientific notation, leading '-').
// Idempotent: normalizing a canonical form is the identity.
NormalizedExpr normalize(const std::string& raw);

// Equivalence verdict for two answer texts. Canonical equality wins first;
// otherwise numeric agreement within max(atol, rtol*max(|a|,|b|)); otherwise
// not equivalent, with similarity = text_similarity(a, b).
EquivalenceVerdict math_equivalent(const std::string& a, const std::string& b,
                                   double atol = 1e-9, double rtol = 1e-6);

// 1 - L(a', b') / max(|a'|, |b'|) where a', b' are canonical forms and L is
// Levenshtein distance over Unicode scalar values. Both empty -> 1.0.
// Equals 1.0 iff the canonical forms are identical.
double text_similarity(const std::string& a, const std::string& b);

// Exposed for testing.
std::vector<char32_t> decode_utf8(const std::string& s);
std::size_t edit_distance(const std::vector<char32_t>& a, const std::vector<char32_t>& b);

}  // namespace mrrlvr::mathtext
