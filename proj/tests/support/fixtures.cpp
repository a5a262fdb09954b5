#include "support/fixtures.hpp"

#include <sqlite3.h>
#include <unistd.h>

#include <atomic>
#include <fstream>
#include <map>
#include <stdexcept>

#include "nlsql/extract.hpp"

namespace nlsql::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("nlsql_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void build_db(const std::string& db_path, const std::vector<std::string>& statements) {
    fs::create_directories(fs::path(db_path).parent_path());
    sqlite3* db = nullptr;
    if (sqlite3_open(db_path.c_str(), &db) != SQLITE_OK) {
        throw std::runtime_error("cannot create fixture db: " + db_path);
    }
    for (const auto& sql : statements) {
        char* err = nullptr;
        if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
            std::string message = err ? err : "unknown error";
            sqlite3_free(err);
            sqlite3_close(db);
            throw std::runtime_error("fixture statement failed (" + message + "): " + sql);
        }
    }
    sqlite3_close(db);
}

std::string make_hr_db(const fs::path& root) {
    std::string path = (root / "hr" / "hr.sqlite").string();
    build_db(path, {
        "CREATE TABLE Employees ("
        "employee_id INTEGER PRIMARY KEY, name TEXT NOT NULL, department TEXT, salary REAL)",
        "CREATE TABLE Departments ("
        "department_id INTEGER PRIMARY KEY, department_name TEXT, location TEXT)",
        "INSERT INTO Employees VALUES (1,'Alice','Engineering',4500.0),"
        "(2,'Bob','Sales',3200.0),(3,'Carol','Engineering',5100.0),(4,'Dave','Support',2900.0)",
        "INSERT INTO Departments VALUES (1,'Engineering','Building A'),"
        "(2,'Sales','Building B'),(3,'Support','Building C')",
    });
    return path;
}

std::string make_shop_db(const fs::path& root) {
    std::string path = (root / "shop" / "shop.sqlite").string();
    build_db(path, {
        "CREATE TABLE customer (id INTEGER PRIMARY KEY, name TEXT, city TEXT)",
        "CREATE TABLE orders (order_id INTEGER PRIMARY KEY, customer_id INTEGER, total REAL,"
        " placed_on TEXT, FOREIGN KEY (customer_id) REFERENCES customer(id))",
        "CREATE TABLE products (product_id INTEGER PRIMARY KEY, label TEXT, price REAL)",
        "INSERT INTO customer VALUES (1,'Ana','Lisbon'),(2,'Ben','Porto'),(3,'Cleo','Faro')",
        "INSERT INTO orders VALUES (1,1,120.5,'2024-01-03'),(2,1,35.0,'2024-02-11'),"
        "(3,2,220.0,'2024-02-28'),(4,3,15.25,'2024-03-05')",
        "INSERT INTO products VALUES (1,'lamp',40.0),(2,'desk',180.0),(3,'chair',75.5)",
    });
    return path;
}

std::string make_library_db(const fs::path& root) {
    std::string path = (root / "library" / "library.sqlite").string();
    build_db(path, {
        "CREATE TABLE authors (author_id INTEGER PRIMARY KEY, author_name TEXT)",
        "CREATE TABLE books (book_id INTEGER PRIMARY KEY, title TEXT, author_id INTEGER,"
        " year INTEGER, FOREIGN KEY (author_id) REFERENCES authors(author_id))",
        "CREATE TABLE loans (loan_id INTEGER PRIMARY KEY, book_id INTEGER, \"due date\" TEXT,"
        " FOREIGN KEY (book_id) REFERENCES books(book_id))",
        "INSERT INTO authors VALUES (1,'Orwell'),(2,'Woolf')",
        "INSERT INTO books VALUES (1,'1984',1,1949),(2,'Orlando',2,1928),(3,'Essays',2,1942)",
        "INSERT INTO loans VALUES (1,1,'2024-05-01'),(2,3,'2024-05-15')",
    });
    return path;
}

DatabaseSchema schema_from_json(const std::string& db_id, const nlohmann::json& spec) {
    DatabaseSchema schema;
    schema.db_id = db_id;
    for (const auto& table_spec : spec.at("tables")) {
        TableInfo table;
        table.name = table_spec.at("name").get<std::string>();
        for (const auto& column : table_spec.at("columns")) {
            table.columns.push_back({column.get<std::string>(), "TEXT", false, false});
        }
        schema.tables.push_back(std::move(table));
    }
    return schema;
}

nlohmann::json load_corpus() {
    std::ifstream in(std::string(NLSQL_TEST_DATA_DIR) + "/extraction_corpus.json");
    if (!in) throw std::runtime_error("extraction corpus not found");
    nlohmann::json doc;
    in >> doc;
    return doc;
}

std::string fenced(const std::string& sql) {
    return "```sql\n" + sql + "\n```";
}

std::vector<std::string> run_extraction_corpus(const nlohmann::json& corpus) {
    std::map<std::string, DatabaseSchema> schemas;
    for (const auto& [name, spec] : corpus.at("schemas").items()) {
        schemas.emplace(name, schema_from_json(name, spec));
    }

    std::vector<std::string> failures;
    auto fail = [&](const nlohmann::json& sample, const std::string& got) {
        failures.push_back("sample " + std::to_string(sample.at("id").get<int>()) + ": got " +
                           got + ", expected " + sample.at("expected").dump());
    };

    for (const auto& sample : corpus.at("samples")) {
        std::string op = sample.at("op").get<std::string>();
        std::string text = sample.at("text").get<std::string>();
        const auto& expected = sample.at("expected");

        if (op == "tables") {
            auto got = extract_tables(text, schemas.at(sample.at("schema").get<std::string>()));
            if (nlohmann::json(got) != expected) fail(sample, nlohmann::json(got).dump());
        } else if (op == "columns") {
            auto got = extract_columns(text, schemas.at(sample.at("schema").get<std::string>()));
            nlohmann::json got_json = nlohmann::json::array();
            for (const auto& [table, column] : got) got_json.push_back({table, column});
            if (got_json != expected) fail(sample, got_json.dump());
        } else if (op == "sql") {
            auto got = extract_sql(text);
            nlohmann::json got_json = got ? nlohmann::json(*got) : nlohmann::json(nullptr);
            if (got_json != expected) fail(sample, got_json.dump());
        } else if (op == "answer") {
            auto got = extract_answer(text);
            nlohmann::json got_json = got ? nlohmann::json(*got) : nlohmann::json(nullptr);
            if (got_json != expected) fail(sample, got_json.dump());
        } else if (op == "index") {
            auto got = extract_index(text, sample.at("max_index").get<int>());
            nlohmann::json got_json = got ? nlohmann::json(*got) : nlohmann::json(nullptr);
            if (got_json != expected) fail(sample, got_json.dump());
        } else {
            failures.push_back("unknown corpus op: " + op);
        }
    }
    return failures;
}

std::uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot checksum " + path);
    std::uint64_t hash = 1469598103934665603ull;
    char buffer[4096];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 1099511628211ull;
        }
        if (!in) break;
    }
    return hash;
}

}  // namespace nlsql::testing
