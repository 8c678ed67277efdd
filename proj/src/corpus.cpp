#include "sunar/corpus.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

using json = nlohmann::json;

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
    by_id_.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        const auto& d = documents_[i];
        if (d.doc_id.empty()) throw Error("document " + std::to_string(i) + " has an empty id");
        if (d.text.empty()) throw Error("document '" + d.doc_id + "' has empty text");
        if (!by_id_.emplace(d.doc_id, i).second) {
            throw Error("duplicate doc_id '" + d.doc_id + "'");
        }
    }
}

const Document* Corpus::find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    return it == by_id_.end() ? nullptr : &documents_[it->second];
}

std::optional<std::size_t> Corpus::index_of(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

const Document& Corpus::at(std::string_view doc_id) const {
    const auto* d = find(doc_id);
    if (d == nullptr) throw Error("unknown doc_id '" + std::string(doc_id) + "'");
    return *d;
}

Corpus ingest_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file '" + path.string() + "'");

    const auto source = path.string();
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(source, lineno, std::string("malformed JSON record: ") + e.what());
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
            !rec.contains("contents") || !rec["contents"].is_string()) {
            throw FormatError(source, lineno, "record needs string fields 'id' and 'contents'");
        }
        Document d;
        d.doc_id = rec["id"].get<std::string>();
        d.text = rec["contents"].get<std::string>();
        if (rec.contains("title") && !rec["title"].is_null()) {
            if (!rec["title"].is_string()) throw FormatError(source, lineno, "'title' must be a string");
            d.title = rec["title"].get<std::string>();
        }
        if (d.doc_id.empty()) throw FormatError(source, lineno, "empty id");
        if (d.text.empty()) throw FormatError(source, lineno, "empty contents for '" + d.doc_id + "'");
        auto [it, inserted] = first_seen.emplace(d.doc_id, lineno);
        if (!inserted) {
            throw FormatError(source, lineno,
                              "duplicate doc_id '" + d.doc_id + "' (first seen on line " +
                                  std::to_string(it->second) + ")");
        }
        docs.push_back(std::move(d));
    }
    if (in.bad()) throw IoError("read failure on '" + source + "'");
    if (docs.empty()) throw FormatError("empty corpus: '" + source + "' has no records");
    return Corpus(std::move(docs));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file '" + path.string() + "'");
    for (const auto& d : corpus.documents()) {
        json rec = {{"id", d.doc_id}};
        if (d.title) rec["title"] = *d.title;
        rec["contents"] = d.text;
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace sunar
