#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlsql/schema.hpp"

namespace nlsql {

/// Marker-extraction result carrying the span of `value` in the source text.
struct AnswerMatch {
    std::string value;
    size_t begin = 0;
    size_t end = 0;
};

inline const std::vector<std::string> kDefaultAnswerPatterns = {"answer is", "Answer:"};

/// Every schema table mentioned in the text, deduplicated, in schema order.
/// Mentions are case-insensitive and word-bounded; names containing spaces
/// also match when quoted or as a contiguous substring.
std::vector<std::string> extract_tables(const std::string& text, const DatabaseSchema& schema);

/// (table, column) pairs for every `table.column` mention and every
/// unambiguous bare column mention, deduplicated, in schema order. Bare
/// names present in several tables are dropped.
std::vector<std::pair<std::string, std::string>> extract_columns(const std::string& text,
                                                                 const DatabaseSchema& schema);

/// First fenced sql block, else the first statement starting at a SELECT or
/// WITH keyword up to an unquoted semicolon or end of text. The trailing
/// semicolon is stripped; internal whitespace is preserved.
std::optional<std::string> extract_sql(const std::string& text);

/// Text on the same line after the leftmost marker occurrence, trimmed of
/// surrounding whitespace and punctuation. Ties between markers at the same
/// position resolve in pattern list order.
std::optional<std::string> extract_answer(
    const std::string& text, const std::vector<std::string>& patterns = kDefaultAnswerPatterns);

/// Like extract_answer but exposes the matched span for locality checks.
std::optional<AnswerMatch> extract_answer_match(
    const std::string& text, const std::vector<std::string>& patterns = kDefaultAnswerPatterns);

/// Integer after the first "Index:" marker when within [1, max_index], else
/// the first standalone integer within range, else nothing.
std::optional<int> extract_index(const std::string& text, int max_index);

}  // namespace nlsql
