#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace nlsql {

struct ColumnInfo {
    std::string name;
    std::string declared_type;  // as stored in the catalog, may be empty
    bool is_primary_key = false;
    bool is_not_null = false;
};

struct ForeignKeyInfo {
    std::string from_table;
    std::string from_column;
    std::string to_table;
    std::string to_column;
};

struct TableInfo {
    std::string name;
    std::vector<ColumnInfo> columns;  // catalog order
    std::vector<ForeignKeyInfo> foreign_keys;

    const ColumnInfo* find_column(const std::string& name_ci) const;
};

/// Immutable snapshot of one SQLite database's user tables. Safe to share
/// across threads once loaded.
struct DatabaseSchema {
    std::string db_id;
    std::vector<TableInfo> tables;  // catalog order

    const TableInfo* find_table(const std::string& name_ci) const;
    std::vector<std::string> table_names() const;
};

struct ResolvedIdentifier {
    std::string table;
    std::optional<std::string> column;
};

/// Loads all user tables (sqlite_* internals excluded) with columns, primary
/// keys and foreign keys, in catalog order.
///
/// Throws FileNotFoundError / NotADatabaseError.
DatabaseSchema load_schema(const std::string& db_path);

/// Renders one CREATE TABLE statement per kept table, catalog order
/// preserved. Foreign-key clauses are emitted only when both endpoints are
/// kept. Output is byte-deterministic for identical inputs.
///
/// Throws UnknownTableError for keep entries not in the schema.
std::string render_ddl(const DatabaseSchema& schema, const std::set<std::string>& keep);

/// Renders all tables.
std::string render_ddl(const DatabaseSchema& schema);

/// Case-insensitive match of a token against table names, `table.column`
/// references and bare column names. Bare columns present in several tables
/// are ambiguous and resolve to nothing.
std::optional<ResolvedIdentifier> resolve_identifier(const DatabaseSchema& schema,
                                                     const std::string& token);

/// `<root>/<db_id>/<db_id>.sqlite` (BIRD/Spider layout), falling back to
/// `<root>/<db_id>.sqlite`.
std::string resolve_db_path(const std::string& database_root, const std::string& db_id);

}  // namespace nlsql
