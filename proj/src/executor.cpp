#include "nlsql/executor.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "nlsql/errors.hpp"

namespace nlsql {

namespace {

constexpr double kNumericTolerance = 1e-6;

struct Deadline {
    std::chrono::steady_clock::time_point at;
    bool expired() const { return std::chrono::steady_clock::now() >= at; }
};

int progress_callback(void* ctx) {
    return static_cast<Deadline*>(ctx)->expired() ? 1 : 0;
}

Value read_value(sqlite3_stmt* stmt, int col) {
    switch (sqlite3_column_type(stmt, col)) {
        case SQLITE_INTEGER:
            return static_cast<std::int64_t>(sqlite3_column_int64(stmt, col));
        case SQLITE_FLOAT:
            return sqlite3_column_double(stmt, col);
        case SQLITE_TEXT: {
            const unsigned char* p = sqlite3_column_text(stmt, col);
            return std::string(reinterpret_cast<const char*>(p),
                               static_cast<size_t>(sqlite3_column_bytes(stmt, col)));
        }
        case SQLITE_BLOB: {
            const void* p = sqlite3_column_blob(stmt, col);
            return Blob{std::string(static_cast<const char*>(p),
                                    static_cast<size_t>(sqlite3_column_bytes(stmt, col)))};
        }
        default:
            return std::monostate{};
    }
}

bool is_numeric(const Value& v) {
    return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
}

double as_double(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

int type_rank(const Value& v) {
    if (std::holds_alternative<std::monostate>(v)) return 0;
    if (is_numeric(v)) return 1;
    if (std::holds_alternative<std::string>(v)) return 2;
    return 3;
}

bool value_less(const Value& a, const Value& b) {
    int ra = type_rank(a), rb = type_rank(b);
    if (ra != rb) return ra < rb;
    switch (ra) {
        case 0:
            return false;
        case 1:
            return as_double(a) < as_double(b);
        case 2:
            return std::get<std::string>(a) < std::get<std::string>(b);
        default:
            return std::get<Blob>(a).bytes < std::get<Blob>(b).bytes;
    }
}

bool value_fuzzy_equal(const Value& a, const Value& b) {
    if (is_numeric(a) && is_numeric(b)) {
        if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
            return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
        }
        return std::fabs(as_double(a) - as_double(b)) <= kNumericTolerance;
    }
    if (type_rank(a) != type_rank(b)) return false;
    switch (type_rank(a)) {
        case 0:
            return true;
        case 2:
            return std::get<std::string>(a) == std::get<std::string>(b);
        default:
            return std::get<Blob>(a).bytes == std::get<Blob>(b).bytes;
    }
}

bool row_less(const Row& a, const Row& b) {
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (value_less(a[i], b[i])) return true;
        if (value_less(b[i], a[i])) return false;
    }
    return a.size() < b.size();
}

bool row_fuzzy_equal(const Row& a, const Row& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!value_fuzzy_equal(a[i], b[i])) return false;
    }
    return true;
}

std::vector<Row> sorted_distinct(const std::vector<Row>& rows) {
    std::vector<Row> out = rows;
    std::sort(out.begin(), out.end(), row_less);
    std::vector<Row> unique;
    for (auto& row : out) {
        if (unique.empty() || !row_fuzzy_equal(unique.back(), row)) {
            unique.push_back(std::move(row));
        }
    }
    return unique;
}

}  // namespace

std::string exec_status_name(ExecStatus status) {
    switch (status) {
        case ExecStatus::Success: return "success";
        case ExecStatus::Error: return "error";
        case ExecStatus::Timeout: return "timeout";
    }
    return "error";
}

ExecutionOutcome execute(const std::string& db_path, const std::string& sql,
                         std::chrono::milliseconds timeout, int row_limit) {
    if (!std::filesystem::exists(db_path)) {
        throw FileNotFoundError("database file not found: " + db_path);
    }

    auto start = std::chrono::steady_clock::now();
    ExecutionOutcome outcome;
    auto finish = [&](ExecutionOutcome o) {
        o.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return o;
    };

    sqlite3* db = nullptr;
    if (sqlite3_open_v2(db_path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
        std::string msg = db ? sqlite3_errmsg(db) : "cannot open database";
        sqlite3_close(db);
        outcome.status = ExecStatus::Error;
        outcome.error_message = msg;
        return finish(outcome);
    }

    Deadline deadline{start + timeout};
    sqlite3_progress_handler(db, 256, progress_callback, &deadline);

    sqlite3_stmt* stmt = nullptr;
    int rc = sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr);
    if (rc != SQLITE_OK || stmt == nullptr) {
        outcome.status = deadline.expired() ? ExecStatus::Timeout : ExecStatus::Error;
        outcome.error_message = stmt == nullptr && rc == SQLITE_OK
                                    ? "statement is empty"
                                    : sqlite3_errmsg(db);
        if (outcome.status == ExecStatus::Timeout) outcome.error_message = "query timed out";
        sqlite3_finalize(stmt);
        sqlite3_close(db);
        return finish(outcome);
    }

    int ncols = sqlite3_column_count(stmt);
    for (int i = 0; i < ncols; ++i) {
        const char* name = sqlite3_column_name(stmt, i);
        outcome.columns.push_back(name ? name : "");
    }

    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
        if (static_cast<int>(outcome.rows.size()) >= row_limit) {
            outcome.truncated = true;
            rc = SQLITE_DONE;
            break;
        }
        Row row;
        row.reserve(static_cast<size_t>(ncols));
        for (int i = 0; i < ncols; ++i) row.push_back(read_value(stmt, i));
        outcome.rows.push_back(std::move(row));
    }

    if (rc == SQLITE_DONE) {
        outcome.status = ExecStatus::Success;
    } else if (rc == SQLITE_INTERRUPT || deadline.expired()) {
        outcome.status = ExecStatus::Timeout;
        outcome.error_message = "query timed out";
        outcome.rows.clear();
        outcome.columns.clear();
    } else {
        outcome.status = ExecStatus::Error;
        outcome.error_message = sqlite3_errmsg(db);
        outcome.rows.clear();
        outcome.columns.clear();
    }

    sqlite3_finalize(stmt);
    sqlite3_close(db);
    return finish(outcome);
}

bool results_match(const ResultTable& a, const ResultTable& b) {
    if (a.columns.size() != b.columns.size()) {
        throw IncomparableShapesError("result tables have " + std::to_string(a.columns.size()) +
                                      " vs " + std::to_string(b.columns.size()) + " columns");
    }
    std::vector<Row> sa = sorted_distinct(a.rows);
    std::vector<Row> sb = sorted_distinct(b.rows);
    if (sa.size() != sb.size()) return false;
    for (size_t i = 0; i < sa.size(); ++i) {
        if (!row_fuzzy_equal(sa[i], sb[i])) return false;
    }
    return true;
}

std::string render_row(const Row& row) {
    std::ostringstream out;
    out << "(";
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out << ", ";
        const Value& v = row[i];
        if (std::holds_alternative<std::monostate>(v)) {
            out << "NULL";
        } else if (const auto* n = std::get_if<std::int64_t>(&v)) {
            out << *n;
        } else if (const auto* d = std::get_if<double>(&v)) {
            out << *d;
        } else if (const auto* s = std::get_if<std::string>(&v)) {
            out << "'" << *s << "'";
        } else {
            out << "<blob " << std::get<Blob>(v).bytes.size() << "B>";
        }
    }
    out << ")";
    return out.str();
}

std::string render_rows(const std::vector<Row>& rows, size_t max_rows) {
    std::ostringstream out;
    out << "[";
    size_t n = std::min(rows.size(), max_rows);
    for (size_t i = 0; i < n; ++i) {
        if (i) out << ", ";
        out << render_row(rows[i]);
    }
    if (rows.size() > n) out << ", ...";
    out << "]";
    return out.str();
}

}  // namespace nlsql
