#include "sunar/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sunar/errors.hpp"
#include "sunar/text.hpp"

namespace sunar {

namespace {

bool is_punct(unsigned char c) {
    return std::ispunct(c) != 0;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string f; in >> f;) out.push_back(std::move(f));
    return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& file, std::size_t line, const char* what) {
    T value{};
    std::istringstream in(s);
    in >> value;
    if (!in || !in.eof()) throw FormatError(file, line, std::string("invalid ") + what + " '" + s + "'");
    return value;
}

void finish(MetricResult& r) {
    if (r.per_query.empty()) return;
    double sum = 0.0;
    for (const auto& [q, v] : r.per_query) sum += v;
    r.mean = sum / static_cast<double>(r.per_query.size());
}

void warn_unjudged(const Run& run, const Qrels& qrels, MetricResult& r) {
    if (run.empty()) r.warnings.push_back("run is empty");
    for (const auto& [qid, list] : run.rankings) {
        if (!qrels.judgments.count(qid)) r.warnings.push_back("run qid '" + qid + "' has no judgments; skipped");
    }
}

const std::vector<RunEntry>* ranking(const Run& run, const std::string& qid) {
    auto it = run.rankings.find(qid);
    return it == run.rankings.end() ? nullptr : &it->second;
}

nlohmann::ordered_json metric_json(const MetricResult& r) {
    nlohmann::ordered_json j;
    j["mean"] = r.mean;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [q, v] : r.per_query) per[q] = v;
    j["per_query"] = std::move(per);
    return j;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    std::string out;
    std::string token;
    auto flush = [&] {
        std::size_t b = 0, e = token.size();
        while (b < e && is_punct(static_cast<unsigned char>(token[b]))) ++b;
        while (e > b && is_punct(static_cast<unsigned char>(token[e - 1]))) --e;
        if (e > b) {
            if (!out.empty()) out.push_back(' ');
            out.append(token, b, e - b);
        }
        token.clear();
    };
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else {
            token.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return out;
}

int cover_em(std::string_view prediction, const std::vector<std::string>& golds) {
    const auto pred = normalize_answer(prediction);
    for (const auto& g : golds) {
        const auto gold = normalize_answer(g);
        if (!gold.empty() && pred.find(gold) != std::string::npos) return 1;
    }
    return 0;
}

int cover_em(std::string_view prediction, std::string_view gold) {
    return cover_em(prediction, std::vector<std::string>{std::string(gold)});
}

void Qrels::add(const std::string& qid, const std::string& doc_id, int grade) {
    if (grade < 0) throw Error("negative relevance grade for (" + qid + ", " + doc_id + ")");
    judgments[qid][doc_id] = grade;
}

int Qrels::grade(const std::string& qid, const std::string& doc_id) const {
    auto q = judgments.find(qid);
    if (q == judgments.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

std::vector<std::string> Qrels::evaluated_qids() const {
    std::vector<std::string> out;
    for (const auto& [qid, docs] : judgments) {
        if (std::any_of(docs.begin(), docs.end(), [](const auto& d) { return d.second > 0; })) out.push_back(qid);
    }
    return out;
}

void Run::add(const std::string& qid, const RankedList& list) {
    auto& entries = rankings[qid];
    entries.clear();
    for (const auto& e : list.entries) entries.push_back({e.doc_id, e.score});
}

Qrels load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open qrels '" + path.string() + "'");
    Qrels out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto f = fields_of(line);
        if (f.empty()) continue;
        if (f.size() != 4) throw FormatError(path.string(), n, "expected 'qid 0 doc_id grade'");
        const auto grade = parse_number<long>(f[3], path.string(), n, "grade");
        if (grade < 0) throw FormatError(path.string(), n, "negative grade");
        out.judgments[f[0]][f[2]] = static_cast<int>(grade);
    }
    return out;
}

void save_qrels(const std::filesystem::path& path, const Qrels& qrels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write qrels '" + path.string() + "'");
    for (const auto& [qid, docs] : qrels.judgments) {
        for (const auto& [doc, grade] : docs) out << qid << " 0 " << doc << ' ' << grade << '\n';
    }
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

Run load_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run file '" + path.string() + "'");
    struct Row {
        long rank;
        std::size_t line;
        RunEntry entry;
    };
    std::map<std::string, std::vector<Row>> rows;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto f = fields_of(line);
        if (f.empty()) continue;
        if (f.size() != 6) throw FormatError(path.string(), n, "expected 'qid Q0 doc_id rank score tag'");
        const auto rank = parse_number<long>(f[3], path.string(), n, "rank");
        const auto score = parse_number<double>(f[4], path.string(), n, "score");
        if (!std::isfinite(score)) throw FormatError(path.string(), n, "non-finite score");
        rows[f[0]].push_back({rank, n, {f[2], score}});
    }
    Run run;
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
        std::set<std::string> seen;
        auto& out = run.rankings[qid];
        for (const auto& r : list) {
            if (!seen.insert(r.entry.doc_id).second)
                throw FormatError(path.string(), r.line, "duplicate doc '" + r.entry.doc_id + "' for qid " + qid);
            if (!out.empty() && r.entry.score > out.back().score)
                throw FormatError(path.string(), r.line, "score increases with rank for qid " + qid);
            out.push_back(r.entry);
        }
    }
    return run;
}

void write_run(std::ostream& out, const Run& run, std::string_view tag) {
    if (tag.empty() || tag.find_first_of(" \t\n") != std::string_view::npos)
        throw Error("run tag must be a non-empty single token");
    char buf[64];
    for (const auto& [qid, entries] : run.rankings) {
        for (std::size_t i = 0; i < entries.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.6f", entries[i].score);
            out << qid << " Q0 " << entries[i].doc_id << ' ' << (i + 1) << ' ' << buf << ' ' << tag << '\n';
        }
    }
}

void write_run(const std::filesystem::path& path, const Run& run, std::string_view tag) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write run file '" + path.string() + "'");
    write_run(out, run, tag);
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

MetricResult recall_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw ConfigError("recall@k needs k >= 1");
    MetricResult r;
    warn_unjudged(run, qrels, r);
    for (const auto& qid : qrels.evaluated_qids()) {
        const auto& judged = qrels.judgments.at(qid);
        std::size_t relevant = 0;
        for (const auto& [doc, g] : judged) relevant += g > 0 ? 1 : 0;
        std::size_t hit = 0;
        if (const auto* list = ranking(run, qid)) {
            for (std::size_t i = 0; i < std::min(k, list->size()); ++i) hit += qrels.grade(qid, (*list)[i].doc_id) > 0;
        }
        r.per_query[qid] = static_cast<double>(hit) / static_cast<double>(relevant);
    }
    finish(r);
    return r;
}

MetricResult ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
    if (k < 1) throw ConfigError("ndcg@k needs k >= 1");
    auto gain = [](int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; };
    auto discount = [](std::size_t rank) { return std::log2(static_cast<double>(rank) + 1.0); };
    MetricResult r;
    warn_unjudged(run, qrels, r);
    for (const auto& qid : qrels.evaluated_qids()) {
        std::vector<int> grades;
        for (const auto& [doc, g] : qrels.judgments.at(qid)) grades.push_back(g);
        std::sort(grades.rbegin(), grades.rend());
        double ideal = 0.0;
        for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) ideal += gain(grades[i]) / discount(i + 1);
        if (ideal <= 0.0) continue;
        double dcg = 0.0;
        if (const auto* list = ranking(run, qid)) {
            for (std::size_t i = 0; i < std::min(k, list->size()); ++i)
                dcg += gain(qrels.grade(qid, (*list)[i].doc_id)) / discount(i + 1);
        }
        r.per_query[qid] = dcg / ideal;
    }
    finish(r);
    return r;
}

MetricResult cover_em_metric(const std::vector<AnswerRecord>& answers) {
    MetricResult r;
    for (const auto& a : answers) {
        if (a.golds.empty()) {
            r.warnings.push_back("qid '" + a.qid + "' has no gold answer; skipped");
            continue;
        }
        r.per_query[a.qid] = cover_em(a.prediction, a.golds);
    }
    finish(r);
    return r;
}

nlohmann::ordered_json evaluation_report(const Run& run, const Qrels& qrels, const std::vector<std::size_t>& ks,
                                         const std::optional<std::vector<AnswerRecord>>& answers) {
    nlohmann::ordered_json report;
    std::vector<std::string> warnings;
    for (auto k : ks) {
        auto ndcg = ndcg_at_k(run, qrels, k);
        auto recall = recall_at_k(run, qrels, k);
        report["ndcg@" + std::to_string(k)] = metric_json(ndcg);
        report["recall@" + std::to_string(k)] = metric_json(recall);
        if (warnings.empty()) warnings = recall.warnings;
    }
    if (answers) {
        auto em = cover_em_metric(*answers);
        report["cover_em"] = metric_json(em);
        warnings.insert(warnings.end(), em.warnings.begin(), em.warnings.end());
    }
    report["warnings"] = warnings;
    return report;
}

}  // namespace sunar
