#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace nlsql {

enum class StageKind {
    Pruning,
    Linking,
    GenerationWithLinking,
    GenerationWithoutLinking,
    Correction,
    SelectionQueryOnly,
    SelectionWithResults,
};

inline constexpr std::array<StageKind, 7> kAllStages = {
    StageKind::Pruning,
    StageKind::Linking,
    StageKind::GenerationWithLinking,
    StageKind::GenerationWithoutLinking,
    StageKind::Correction,
    StageKind::SelectionQueryOnly,
    StageKind::SelectionWithResults,
};

/// Stable lowercase tag, used for trace records, scripted backends and
/// override file names.
std::string stage_name(StageKind stage);
std::optional<StageKind> stage_from_name(const std::string& name);

struct PromptTemplate {
    StageKind stage;
    std::string system_text;
    std::string user_text;

    /// Placeholder names appearing in user_text (and system_text, though the
    /// stock templates keep the system side static).
    std::set<std::string> placeholders() const;
};

struct RenderedPrompt {
    StageKind stage;
    std::string system;
    std::string user;
    size_t word_count = 0;
};

/// The seven stage templates. Defaults to the embedded ones; individual
/// stages can be replaced from an override directory so operators can tune
/// wording without rebuilding.
class PromptSet {
public:
    PromptSet();

    const PromptTemplate& get(StageKind stage) const;
    void set(StageKind stage, std::string system_text, std::string user_text);

    /// Replaces templates from `<dir>/<stage_name>.txt` files. Each file is
    /// the system text, a line `===USER===`, then the user text. Stages
    /// without a file keep their current template.
    void load_overrides(const std::string& dir);

    /// Byte-deterministic substitution. An empty `hint` value renders as the
    /// literal "None". Throws MissingVariableError / UnknownStageError.
    RenderedPrompt render(StageKind stage, const std::map<std::string, std::string>& vars) const;

    /// Whitespace-delimited word count of system + user text with the
    /// placeholders removed.
    size_t static_word_count(StageKind stage) const;

private:
    std::array<PromptTemplate, 7> templates_;
};

}  // namespace nlsql
