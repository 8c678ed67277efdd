#include "sunar/ranked_list.hpp"

#include <algorithm>
#include <unordered_set>

namespace sunar {

std::string_view to_string(Origin origin) {
    return origin == Origin::first_stage ? "first-stage" : "neighbor";
}

bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

void RankedList::sort() {
    std::sort(entries.begin(), entries.end(), ranks_before);
}

bool RankedList::is_sorted() const {
    return std::is_sorted(entries.begin(), entries.end(), ranks_before);
}

bool RankedList::has_unique_ids() const {
    std::unordered_set<std::string_view> seen;
    for (const auto& e : entries) {
        if (!seen.insert(e.doc_id).second) return false;
    }
    return true;
}

RankedList RankedList::truncated(std::size_t n) const {
    RankedList out;
    out.entries.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(std::min(n, entries.size())));
    return out;
}

std::vector<std::string> RankedList::ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.doc_id);
    return out;
}

const ScoredDoc* RankedList::find(std::string_view doc_id) const {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ScoredDoc& e) { return e.doc_id == doc_id; });
    return it == entries.end() ? nullptr : &*it;
}

}  // namespace sunar
