#include "sunar/embedding_store.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sunar/errors.hpp"

namespace sunar {

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dim must be >= 1");
}

void EmbeddingStore::add(std::string doc_id, std::span<const double> vector) {
    if (dim_ == 0) throw ConfigError("embedding store has no dimension");
    if (vector.size() != dim_) {
        throw Error("vector for '" + doc_id + "' has length " + std::to_string(vector.size()) +
                    ", store dim is " + std::to_string(dim_));
    }
    if (!pos_.emplace(doc_id, ids_.size()).second) throw Error("duplicate embedding for '" + doc_id + "'");
    ids_.push_back(std::move(doc_id));
    data_.insert(data_.end(), vector.begin(), vector.end());
}

std::span<const double> EmbeddingStore::row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * dim_, dim_);
}

std::span<const double> EmbeddingStore::vector(std::string_view doc_id) const {
    auto it = pos_.find(std::string(doc_id));
    if (it == pos_.end()) throw Error("no embedding for '" + std::string(doc_id) + "'");
    return row(it->second);
}

bool EmbeddingStore::contains(std::string_view doc_id) const {
    return pos_.count(std::string(doc_id)) != 0;
}

bool EmbeddingStore::covers(const Corpus& corpus) const {
    if (corpus.size() != size()) return false;
    for (const auto& d : corpus.documents()) {
        if (!contains(d.doc_id)) return false;
    }
    return true;
}

EmbeddingStore embed_corpus(const Corpus& corpus, Embedder& embedder, std::size_t dim) {
    EmbeddingStore store(dim);
    for (const auto& doc : corpus.documents()) {
        std::vector<double> v;
        try {
            v = embed(embedder, doc.text, dim);
        } catch (const std::exception& e) {
            throw ClientError("embedding '" + doc.doc_id + "' failed: " + e.what());
        }
        store.add(doc.doc_id, v);
    }
    return store;
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embeddings file '" + path.string() + "'");
    out << "SUNAR-EMBED v1 dim=" << store.dim() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < store.size(); ++i) {
        out << store.ids()[i] << '\t';
        auto row = store.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            if (j > 0) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embeddings file '" + path.string() + "'");
    const auto source = path.string();
    std::string line;
    if (!std::getline(in, line)) throw FormatError(source, 1, "missing header");
    std::size_t dim = 0;
    if (line.rfind("SUNAR-EMBED v1 dim=", 0) != 0) throw FormatError(source, 1, "bad header '" + line + "'");
    {
        auto tail = std::string_view(line).substr(std::string_view("SUNAR-EMBED v1 dim=").size());
        auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), dim);
        if (ec != std::errc() || p != tail.data() + tail.size() || dim == 0) {
            throw FormatError(source, 1, "bad dim in header");
        }
    }
    EmbeddingStore store(dim);
    std::size_t lineno = 1;
    std::vector<double> v;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) throw FormatError(source, lineno, "expected '<id>\\t<vector>'");
        std::istringstream values(line.substr(tab + 1));
        v.clear();
        std::string tok;
        while (values >> tok) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw FormatError(source, lineno, "bad number '" + tok + "'");
            }
        }
        if (v.size() != dim) throw FormatError(source, lineno, "vector length " + std::to_string(v.size()) + " != dim");
        store.add(line.substr(0, tab), v);
    }
    return store;
}

}  // namespace sunar
