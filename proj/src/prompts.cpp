#include "sunar/prompts.hpp"

#include <fstream>
#include <sstream>

#include "sunar/errors.hpp"

namespace sunar {

namespace detail {
// Defined in the generated builtin_prompts.cpp.
std::string_view builtin_prompt(std::string_view name);
}  // namespace detail

namespace {

struct Field {
    const char* file;
    std::string PromptSet::*member;
};

constexpr Field kFields[] = {
    {"decompose_instruction", &PromptSet::decompose_instruction},
    {"decompose", &PromptSet::decompose},
    {"answer", &PromptSet::answer},
    {"asu_sample", &PromptSet::asu_sample},
    {"mer", &PromptSet::mer},
    {"nli_judge", &PromptSet::nli_judge},
    {"exemplars_wqa", &PromptSet::exemplars_wqa},
    {"exemplars_mqa", &PromptSet::exemplars_mqa},
};

std::string strip_final_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

}  // namespace

const PromptSet& PromptSet::builtin() {
    static const PromptSet set = [] {
        PromptSet p;
        for (const auto& f : kFields) p.*f.member = strip_final_newlines(std::string(detail::builtin_prompt(f.file)));
        return p;
    }();
    return set;
}

PromptSet PromptSet::load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("prompt directory '" + dir.string() + "' not found");
    PromptSet p = builtin();
    for (const auto& f : kFields) {
        auto path = dir / (std::string(f.file) + ".txt");
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path);
        if (!in) throw IoError("cannot read prompt '" + path.string() + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        p.*f.member = strip_final_newlines(ss.str());
    }
    return p;
}

const std::string& PromptSet::exemplars(std::string_view dataset) const {
    if (dataset == "wqa") return exemplars_wqa;
    if (dataset == "mqa") return exemplars_mqa;
    throw ConfigError("unknown exemplar set '" + std::string(dataset) + "' (expected wqa or mqa)");
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && is_name_char(tmpl[j])) ++j;
            if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
                auto name = std::string(tmpl.substr(i + 1, j - i - 1));
                auto it = vars.find(name);
                if (it == vars.end()) throw ConfigError("template placeholder {" + name + "} has no value");
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string render_evidence(const std::vector<const Document*>& docs) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out += "[Evidence " + std::to_string(i + 1) + "]: ";
        if (docs[i]->title && !docs[i]->title->empty()) out += *docs[i]->title + ": ";
        out += docs[i]->text;
        out += '\n';
    }
    return out;
}

}  // namespace sunar
