#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace nlsql {

struct Blob {
    std::string bytes;
    bool operator==(const Blob&) const = default;
};

// NULL, INTEGER, REAL, TEXT, BLOB
using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Value>;

enum class ExecStatus { Success, Error, Timeout };

std::string exec_status_name(ExecStatus status);

struct ExecutionOutcome {
    ExecStatus status = ExecStatus::Error;
    std::vector<std::string> columns;
    std::vector<Row> rows;  // Success only, at most row_limit entries
    bool truncated = false;
    std::string error_message;  // engine message verbatim; feeds the correction prompt
    std::chrono::milliseconds elapsed{0};

    bool ok() const { return status == ExecStatus::Success; }
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<Row> rows;
};

inline constexpr std::chrono::milliseconds kDefaultExecTimeout{30000};
inline constexpr int kDefaultRowLimit = 10000;

/// Runs one statement against the database file on a read-only connection.
/// Errors and timeouts come back in-band; only I/O-level failures (missing
/// file) throw.
ExecutionOutcome execute(const std::string& db_path, const std::string& sql,
                         std::chrono::milliseconds timeout = kDefaultExecTimeout,
                         int row_limit = kDefaultRowLimit);

/// Set-of-rows equality with positional columns: order ignored, duplicates
/// collapsed, numbers compared across integer/real representations with
/// absolute tolerance 1e-6, text exact. Throws IncomparableShapesError when
/// tuple arities differ.
bool results_match(const ResultTable& a, const ResultTable& b);

/// "(1, 'Alice')" style rendering, used for selection previews.
std::string render_row(const Row& row);
std::string render_rows(const std::vector<Row>& rows, size_t max_rows);

}  // namespace nlsql
