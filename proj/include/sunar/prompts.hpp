#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sunar/corpus.hpp"

namespace sunar {

/// Prompt templates with `{name}` placeholders. The built-in set is compiled
/// from the prompts/ directory; load_dir() overrides any subset of files.
struct PromptSet {
    std::string decompose_instruction;
    std::string decompose;     // {instruction} {exemplars} {question}
    std::string answer;        // {evidence} {question}
    std::string asu_sample;    // {evidence} {question}
    std::string mer;           // {exemplars} {reasoning_path} {evidence} {question}
    std::string nli_judge;     // {premise} {hypothesis}
    std::string exemplars_wqa;
    std::string exemplars_mqa;

    static const PromptSet& builtin();

    /// Built-ins overridden by any of <name>.txt found in dir.
    static PromptSet load_dir(const std::filesystem::path& dir);

    /// "wqa" or "mqa".
    [[nodiscard]] const std::string& exemplars(std::string_view dataset) const;
};

/// Substitutes every `{name}` (lowercase letters and '_') with vars[name].
/// Throws ConfigError for a placeholder without a value. Substituted text is
/// not re-scanned.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// "[Evidence i]: <title>: <text>" lines, in the given order.
std::string render_evidence(const std::vector<const Document*>& docs);

}  // namespace sunar
