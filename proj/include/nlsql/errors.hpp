#pragma once

#include <stdexcept>
#include <string>

namespace nlsql {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FileNotFoundError : Error {
    using Error::Error;
};

struct NotADatabaseError : Error {
    using Error::Error;
};

struct DatabaseUnavailableError : Error {
    using Error::Error;
};

struct UnknownTableError : Error {
    using Error::Error;
};

struct MissingVariableError : Error {
    explicit MissingVariableError(const std::string& name)
        : Error("missing template variable: " + name), variable(name) {}
    std::string variable;
};

struct UnknownStageError : Error {
    using Error::Error;
};

struct InvalidConfigError : Error {
    using Error::Error;
};

struct BackendUnavailableError : Error {
    using Error::Error;
};

struct BackendRejectedError : Error {
    using Error::Error;
};

struct IncomparableShapesError : Error {
    using Error::Error;
};

struct MalformedDatasetError : Error {
    using Error::Error;
};

struct CorruptTraceError : Error {
    using Error::Error;
};

/// Backend/database failure annotated with the pipeline stage it occurred in.
struct StageError : Error {
    StageError(const std::string& stage_name, const std::string& message)
        : Error(stage_name + ": " + message), stage(stage_name) {}
    std::string stage;
};

}  // namespace nlsql
