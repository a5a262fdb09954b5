#include "nlsql/extract.hpp"

#include <algorithm>
#include <cctype>

namespace nlsql {

namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Quoting characters are removed up front so `"order id"` and plain
// order id mentions look alike to the matcher.
std::string strip_quoting(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c != '`' && c != '"') out += c;
    }
    return out;
}

bool mentioned(const std::string& haystack_lower, const std::string& needle_lower) {
    if (needle_lower.empty()) return false;
    size_t pos = 0;
    while ((pos = haystack_lower.find(needle_lower, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_ident_char(haystack_lower[pos - 1]);
        size_t after = pos + needle_lower.size();
        bool right_ok = after >= haystack_lower.size() || !is_ident_char(haystack_lower[after]);
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

bool word_at(const std::string& lower, size_t pos, const std::string& word) {
    if (lower.compare(pos, word.size(), word) != 0) return false;
    bool left_ok = pos == 0 || !is_ident_char(lower[pos - 1]);
    size_t after = pos + word.size();
    bool right_ok = after >= lower.size() || !is_ident_char(lower[after]);
    return left_ok && right_ok;
}

std::string trim_ws(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
}

}  // namespace

std::vector<std::string> extract_tables(const std::string& text, const DatabaseSchema& schema) {
    std::string hay = to_lower(strip_quoting(text));
    std::vector<std::string> out;
    for (const auto& table : schema.tables) {
        if (mentioned(hay, to_lower(table.name))) out.push_back(table.name);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> extract_columns(const std::string& text,
                                                                 const DatabaseSchema& schema) {
    std::string hay = to_lower(strip_quoting(text));
    std::vector<std::pair<std::string, std::string>> out;
    auto add = [&](const std::string& t, const std::string& c) {
        for (const auto& p : out) {
            if (p.first == t && p.second == c) return;
        }
        out.emplace_back(t, c);
    };

    // qualified table.column mentions
    for (const auto& table : schema.tables) {
        std::string tl = to_lower(table.name);
        for (const auto& col : table.columns) {
            if (mentioned(hay, tl + "." + to_lower(col.name))) add(table.name, col.name);
        }
    }
    // bare column mentions, unambiguous only
    for (const auto& table : schema.tables) {
        for (const auto& col : table.columns) {
            std::string cl = to_lower(col.name);
            int owners = 0;
            for (const auto& other : schema.tables) {
                if (other.find_column(col.name)) ++owners;
            }
            if (owners != 1) continue;
            if (mentioned(hay, cl)) add(table.name, col.name);
        }
    }

    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        auto pos = [&](const std::pair<std::string, std::string>& p) {
            for (size_t ti = 0; ti < schema.tables.size(); ++ti) {
                if (schema.tables[ti].name != p.first) continue;
                for (size_t ci = 0; ci < schema.tables[ti].columns.size(); ++ci) {
                    if (schema.tables[ti].columns[ci].name == p.second) return ti * 10000 + ci;
                }
            }
            return size_t(0);
        };
        return pos(a) < pos(b);
    });
    return out;
}

std::optional<std::string> extract_sql(const std::string& text) {
    std::string lower = to_lower(text);

    // pass 1: fenced blocks
    size_t pos = 0;
    while ((pos = text.find("```", pos)) != std::string::npos) {
        size_t tag_start = pos + 3;
        size_t nl = text.find('\n', tag_start);
        std::string tag = trim_ws(text.substr(tag_start, nl == std::string::npos
                                                             ? std::string::npos
                                                             : nl - tag_start));
        size_t content_start = nl == std::string::npos ? text.size() : nl + 1;
        size_t close = text.find("```", content_start);
        std::string content = text.substr(
            content_start, close == std::string::npos ? std::string::npos : close - content_start);
        content = trim_ws(content);

        std::string tag_lower = to_lower(tag);
        bool sql_tag = tag_lower.rfind("sql", 0) == 0;
        std::string content_lower = to_lower(content);
        bool looks_like_query = content_lower.rfind("select", 0) == 0 ||
                                content_lower.rfind("with", 0) == 0;
        if ((sql_tag || (tag.empty() && looks_like_query)) && !content.empty()) {
            while (!content.empty() && (content.back() == ';' || std::isspace(static_cast<unsigned char>(content.back())))) {
                content.pop_back();
            }
            if (!content.empty()) return content;
        }
        if (close == std::string::npos) break;
        pos = close + 3;
    }

    // pass 2: first SELECT/WITH statement up to an unquoted semicolon
    size_t start = std::string::npos;
    for (size_t i = 0; i < lower.size(); ++i) {
        if (word_at(lower, i, "select") || word_at(lower, i, "with")) {
            start = i;
            break;
        }
    }
    if (start == std::string::npos) return std::nullopt;

    size_t end = text.size();
    bool in_string = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\'') {
            in_string = !in_string;  // '' escapes toggle twice, which is fine
        } else if (c == ';' && !in_string) {
            end = i;
            break;
        }
    }
    std::string stmt = text.substr(start, end - start);
    // drop a trailing fence the scan may have swallowed
    stmt = trim_ws(stmt);
    while (!stmt.empty() && stmt.back() == '`') stmt.pop_back();
    stmt = trim_ws(stmt);
    while (!stmt.empty() && stmt.back() == ';') stmt.pop_back();
    stmt = trim_ws(stmt);
    if (stmt.empty()) return std::nullopt;
    return stmt;
}

std::optional<AnswerMatch> extract_answer_match(const std::string& text,
                                                const std::vector<std::string>& patterns) {
    std::string lower = to_lower(text);
    size_t best_pos = std::string::npos;
    size_t best_len = 0;
    for (const auto& pattern : patterns) {
        size_t p = lower.find(to_lower(pattern));
        if (p != std::string::npos && p < best_pos) {
            best_pos = p;
            best_len = pattern.size();
        }
    }
    if (best_pos == std::string::npos) return std::nullopt;

    size_t begin = best_pos + best_len;
    size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();

    auto trimmable = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) ||
               std::ispunct(static_cast<unsigned char>(c));
    };
    while (begin < end && trimmable(text[begin])) ++begin;
    while (end > begin && trimmable(text[end - 1])) --end;
    if (begin >= end) return std::nullopt;
    return AnswerMatch{text.substr(begin, end - begin), begin, end};
}

std::optional<std::string> extract_answer(const std::string& text,
                                          const std::vector<std::string>& patterns) {
    auto m = extract_answer_match(text, patterns);
    if (!m) return std::nullopt;
    return m->value;
}

std::optional<int> extract_index(const std::string& text, int max_index) {
    std::string lower = to_lower(text);
    size_t marker = lower.find("index:");
    if (marker != std::string::npos) {
        size_t i = marker + 6;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
        size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i && j - i <= 9) {
            long v = std::stol(text.substr(i, j - i));
            if (v >= 1 && v <= max_index) return static_cast<int>(v);
        }
    }
    // first standalone integer within range
    for (size_t i = 0; i < text.size();) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        bool left_ok = i == 0 || !is_ident_char(text[i - 1]);
        bool right_ok = j >= text.size() || !is_ident_char(text[j]);
        if (left_ok && right_ok && j - i <= 9) {
            long v = std::stol(text.substr(i, j - i));
            if (v >= 1 && v <= max_index) return static_cast<int>(v);
        }
        i = j;
    }
    return std::nullopt;
}

}  // namespace nlsql
