#include "nlsql/schema.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <sstream>

#include "nlsql/errors.hpp"

namespace nlsql {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool iequals(const std::string& a, const std::string& b) {
    return a.size() == b.size() && to_lower(a) == to_lower(b);
}

bool is_plain_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

std::string quote_identifier(const std::string& name) {
    if (is_plain_identifier(name)) return name;
    std::string out = "\"";
    for (char c : name) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

struct StmtGuard {
    sqlite3_stmt* stmt = nullptr;
    ~StmtGuard() {
        if (stmt) sqlite3_finalize(stmt);
    }
};

struct DbGuard {
    sqlite3* db = nullptr;
    ~DbGuard() {
        if (db) sqlite3_close(db);
    }
};

std::string column_text(sqlite3_stmt* stmt, int col) {
    const unsigned char* p = sqlite3_column_text(stmt, col);
    return p ? reinterpret_cast<const char*>(p) : "";
}

}  // namespace

const ColumnInfo* TableInfo::find_column(const std::string& name_ci) const {
    for (const auto& c : columns) {
        if (iequals(c.name, name_ci)) return &c;
    }
    return nullptr;
}

const TableInfo* DatabaseSchema::find_table(const std::string& name_ci) const {
    for (const auto& t : tables) {
        if (iequals(t.name, name_ci)) return &t;
    }
    return nullptr;
}

std::vector<std::string> DatabaseSchema::table_names() const {
    std::vector<std::string> names;
    names.reserve(tables.size());
    for (const auto& t : tables) names.push_back(t.name);
    return names;
}

DatabaseSchema load_schema(const std::string& db_path) {
    if (!std::filesystem::exists(db_path)) {
        throw FileNotFoundError("database file not found: " + db_path);
    }
    DbGuard guard;
    if (sqlite3_open_v2(db_path.c_str(), &guard.db, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK) {
        throw NotADatabaseError("cannot open database: " + db_path);
    }

    DatabaseSchema schema;
    schema.db_id = std::filesystem::path(db_path).stem().string();

    {
        StmtGuard st;
        int rc = sqlite3_prepare_v2(
            guard.db,
            "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%'",
            -1, &st.stmt, nullptr);
        if (rc != SQLITE_OK) {
            throw NotADatabaseError("not a valid SQLite database: " + db_path + " (" +
                                    sqlite3_errmsg(guard.db) + ")");
        }
        while ((rc = sqlite3_step(st.stmt)) == SQLITE_ROW) {
            TableInfo t;
            t.name = column_text(st.stmt, 0);
            schema.tables.push_back(std::move(t));
        }
        if (rc != SQLITE_DONE) {
            throw NotADatabaseError("not a valid SQLite database: " + db_path + " (" +
                                    sqlite3_errmsg(guard.db) + ")");
        }
    }

    for (auto& table : schema.tables) {
        {
            StmtGuard st;
            std::string sql = "PRAGMA table_info(" + quote_identifier(table.name) + ")";
            if (sqlite3_prepare_v2(guard.db, sql.c_str(), -1, &st.stmt, nullptr) != SQLITE_OK) {
                throw NotADatabaseError("cannot introspect table " + table.name + ": " +
                                        sqlite3_errmsg(guard.db));
            }
            while (sqlite3_step(st.stmt) == SQLITE_ROW) {
                ColumnInfo c;
                c.name = column_text(st.stmt, 1);
                c.declared_type = column_text(st.stmt, 2);
                c.is_not_null = sqlite3_column_int(st.stmt, 3) != 0;
                c.is_primary_key = sqlite3_column_int(st.stmt, 5) != 0;
                table.columns.push_back(std::move(c));
            }
        }
        {
            StmtGuard st;
            std::string sql = "PRAGMA foreign_key_list(" + quote_identifier(table.name) + ")";
            if (sqlite3_prepare_v2(guard.db, sql.c_str(), -1, &st.stmt, nullptr) != SQLITE_OK) {
                continue;  // tables without FK support expose no pragma rows
            }
            while (sqlite3_step(st.stmt) == SQLITE_ROW) {
                ForeignKeyInfo fk;
                fk.from_table = table.name;
                fk.to_table = column_text(st.stmt, 2);
                fk.from_column = column_text(st.stmt, 3);
                fk.to_column = column_text(st.stmt, 4);
                table.foreign_keys.push_back(std::move(fk));
            }
        }
    }

    // FK targets declared without an explicit column reference the target's
    // primary key; resolve those now that all tables are known.
    for (auto& table : schema.tables) {
        for (auto& fk : table.foreign_keys) {
            if (!fk.to_column.empty()) continue;
            const TableInfo* target = schema.find_table(fk.to_table);
            if (!target) continue;
            for (const auto& c : target->columns) {
                if (c.is_primary_key) {
                    fk.to_column = c.name;
                    break;
                }
            }
        }
    }

    return schema;
}

std::string render_ddl(const DatabaseSchema& schema, const std::set<std::string>& keep) {
    std::set<std::string> keep_lower;
    for (const auto& k : keep) {
        if (!schema.find_table(k)) {
            throw UnknownTableError("unknown table in keep set: " + k);
        }
        keep_lower.insert(to_lower(k));
    }

    std::ostringstream out;
    bool first = true;
    for (const auto& table : schema.tables) {
        if (!keep_lower.count(to_lower(table.name))) continue;
        if (!first) out << "\n";
        first = false;

        std::vector<const ColumnInfo*> pk_columns;
        for (const auto& c : table.columns) {
            if (c.is_primary_key) pk_columns.push_back(&c);
        }

        out << "CREATE TABLE " << quote_identifier(table.name) << " (\n";
        std::vector<std::string> lines;
        for (const auto& c : table.columns) {
            std::string line = "    " + quote_identifier(c.name);
            if (!c.declared_type.empty()) line += " " + c.declared_type;
            if (c.is_not_null) line += " NOT NULL";
            if (c.is_primary_key && pk_columns.size() == 1) line += " PRIMARY KEY";
            lines.push_back(std::move(line));
        }
        if (pk_columns.size() > 1) {
            std::string line = "    PRIMARY KEY (";
            for (size_t i = 0; i < pk_columns.size(); ++i) {
                if (i) line += ", ";
                line += quote_identifier(pk_columns[i]->name);
            }
            line += ")";
            lines.push_back(std::move(line));
        }
        for (const auto& fk : table.foreign_keys) {
            // Clauses pointing at pruned tables are dropped so the rendered
            // DDL always stands on its own.
            if (!keep_lower.count(to_lower(fk.to_table))) continue;
            lines.push_back("    FOREIGN KEY (" + quote_identifier(fk.from_column) +
                            ") REFERENCES " + quote_identifier(fk.to_table) + "(" +
                            quote_identifier(fk.to_column) + ")");
        }
        for (size_t i = 0; i < lines.size(); ++i) {
            out << lines[i] << (i + 1 < lines.size() ? ",\n" : "\n");
        }
        out << ");\n";
    }
    return out.str();
}

std::string render_ddl(const DatabaseSchema& schema) {
    std::set<std::string> all;
    for (const auto& t : schema.tables) all.insert(t.name);
    return render_ddl(schema, all);
}

std::optional<ResolvedIdentifier> resolve_identifier(const DatabaseSchema& schema,
                                                     const std::string& token) {
    std::string t = token;
    // strip whitespace and any quoting characters
    auto is_strippable = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '`' || c == '"';
    };
    while (!t.empty() && is_strippable(t.front())) t.erase(t.begin());
    while (!t.empty() && is_strippable(t.back())) t.pop_back();
    if (t.empty()) return std::nullopt;

    auto dot = t.find('.');
    if (dot != std::string::npos) {
        std::string left = t.substr(0, dot);
        std::string right = t.substr(dot + 1);
        auto strip = [&](std::string& s) {
            while (!s.empty() && is_strippable(s.front())) s.erase(s.begin());
            while (!s.empty() && is_strippable(s.back())) s.pop_back();
        };
        strip(left);
        strip(right);
        if (const TableInfo* table = schema.find_table(left)) {
            if (const ColumnInfo* col = table->find_column(right)) {
                return ResolvedIdentifier{table->name, col->name};
            }
        }
    }

    if (const TableInfo* table = schema.find_table(t)) {
        return ResolvedIdentifier{table->name, std::nullopt};
    }

    const TableInfo* owner = nullptr;
    const ColumnInfo* found = nullptr;
    for (const auto& table : schema.tables) {
        if (const ColumnInfo* col = table.find_column(t)) {
            if (owner) return std::nullopt;  // ambiguous bare column
            owner = &table;
            found = col;
        }
    }
    if (owner) return ResolvedIdentifier{owner->name, found->name};
    return std::nullopt;
}

std::string resolve_db_path(const std::string& database_root, const std::string& db_id) {
    namespace fs = std::filesystem;
    fs::path nested = fs::path(database_root) / db_id / (db_id + ".sqlite");
    if (fs::exists(nested)) return nested.string();
    fs::path flat = fs::path(database_root) / (db_id + ".sqlite");
    if (fs::exists(flat)) return flat.string();
    throw DatabaseUnavailableError("no database for db_id '" + db_id + "' under " + database_root);
}

}  // namespace nlsql
