#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlsql/backend.hpp"
#include "nlsql/schema.hpp"

namespace nlsql::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

/// Creates the database file and runs the given statements on it.
void build_db(const std::string& db_path, const std::vector<std::string>& statements);

/// Two-table HR fixture (Employees / Departments) in BIRD layout
/// `<root>/hr/hr.sqlite`. Returns the database file path.
std::string make_hr_db(const std::filesystem::path& root);

/// customer / orders / products, with an orders->customer foreign key.
std::string make_shop_db(const std::filesystem::path& root);

/// authors / books / loans: FK chain plus a column name containing a space.
std::string make_library_db(const std::filesystem::path& root);

/// Schema built from a corpus "schemas" entry (names only).
DatabaseSchema schema_from_json(const std::string& db_id, const nlohmann::json& spec);

nlohmann::json load_corpus();

/// Runs every corpus sample through the matching extractor and returns one
/// message per mismatch (empty means a perfect score).
std::vector<std::string> run_extraction_corpus(const nlohmann::json& corpus);

/// "```sql\n<sql>\n```"
std::string fenced(const std::string& sql);

/// FNV-1a over the file bytes; enough to detect any modification.
std::uint64_t file_checksum(const std::string& path);

/// Forwards to an inner backend while recording every request, so tests can
/// assert on prompts, roles and sampling parameters.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

    GenerationResult generate(const GenerationRequest& request) override {
        {
            std::lock_guard lock(mutex_);
            requests_.push_back(request);
        }
        return inner_->generate(request);
    }

    std::vector<GenerationRequest> requests() const {
        std::lock_guard lock(mutex_);
        return requests_;
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<Backend> inner_;
    std::vector<GenerationRequest> requests_;
};

}  // namespace nlsql::testing
