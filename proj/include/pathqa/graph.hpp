#pragma once
// Paragraph graph: directed hyperlink edges plus symmetric within-document
// edges. Built once, immutable afterwards.

#include <cstdint>
#include <string>
#include <vector>

#include "pathqa/corpus.hpp"

namespace pathqa {

enum class Granularity { kIntroOnly, kAllParagraphs };

struct GraphBuildReport {
    uint64_t hyperlink_edges = 0;    // distinct directed edges from hyperlinks
    uint64_t within_doc_edges = 0;   // 2 * within-document pair count
    uint64_t dangling_dropped = 0;   // link occurrences with no target article
    uint64_t total_edges() const { return hyperlink_edges + within_doc_edges; }
};

class WikiGraph {
public:
    WikiGraph() = default;
    WikiGraph(std::vector<std::vector<uint32_t>> adjacency, std::vector<std::string> ids,
              Granularity granularity)
        : adjacency_(std::move(adjacency)), ids_(std::move(ids)), granularity_(granularity) {}

    size_t num_nodes() const { return adjacency_.size(); }
    uint64_t num_edges() const;
    Granularity granularity() const { return granularity_; }

    // Sorted out-adjacency (ascending node index == ascending para_id).
    const std::vector<uint32_t>& neighbors(uint32_t node) const;
    const std::vector<uint32_t>& neighbors_by_id(const std::string& para_id) const;

    const std::string& node_id(uint32_t node) const { return ids_[node]; }
    const std::vector<std::string>& node_ids() const { return ids_; }

    // "HGRF1" container, little-endian, ids stored as length-prefixed strings.
    void save(const std::string& path) const;
    static WikiGraph load(const std::string& path);

private:
    std::vector<std::vector<uint32_t>> adjacency_;
    std::vector<std::string> ids_;
    Granularity granularity_ = Granularity::kAllParagraphs;
};

WikiGraph build_graph(const Corpus& corpus, Granularity granularity,
                      GraphBuildReport* report = nullptr);

}  // namespace pathqa
