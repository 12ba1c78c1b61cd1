#include "pathqa/graph.hpp"

#include <algorithm>

#include "pathqa/common.hpp"

namespace pathqa {

uint64_t WikiGraph::num_edges() const {
    uint64_t n = 0;
    for (const auto& adj : adjacency_) n += adj.size();
    return n;
}

const std::vector<uint32_t>& WikiGraph::neighbors(uint32_t node) const {
    if (node >= adjacency_.size())
        throw DataError("unknown node index: " + std::to_string(node));
    return adjacency_[node];
}

const std::vector<uint32_t>& WikiGraph::neighbors_by_id(const std::string& para_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), para_id);
    if (it == ids_.end() || *it != para_id) throw DataError("unknown para_id: " + para_id);
    return adjacency_[static_cast<uint32_t>(it - ids_.begin())];
}

WikiGraph build_graph(const Corpus& corpus, Granularity granularity, GraphBuildReport* report) {
    const size_t n = corpus.size();
    std::vector<std::vector<uint32_t>> adjacency(n);
    std::vector<std::string> ids(n);
    GraphBuildReport rep;

    for (uint32_t u = 0; u < n; ++u) {
        const Paragraph& p = corpus.at(u);
        ids[u] = p.para_id;

        // Symmetric within-document edges.
        const auto* own = corpus.article(p.article_title);
        for (uint32_t v : *own)
            if (v != u) adjacency[u].push_back(v);

        // Directed hyperlink edges, resolved per granularity.
        for (const std::string& target : p.out_links) {
            const auto* nodes = corpus.article(target);
            if (!nodes) {
                ++rep.dangling_dropped;
                continue;
            }
            if (granularity == Granularity::kIntroOnly) {
                if ((*nodes)[0] != u) adjacency[u].push_back((*nodes)[0]);
            } else {
                for (uint32_t v : *nodes)
                    if (v != u) adjacency[u].push_back(v);
            }
        }

        auto& adj = adjacency[u];
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }

    // Edge bookkeeping after dedup: edges inside one article count as
    // within-document regardless of how they arose.
    for (uint32_t u = 0; u < n; ++u) {
        const std::string& title = corpus.at(u).article_title;
        for (uint32_t v : adjacency[u]) {
            if (corpus.at(v).article_title == title)
                ++rep.within_doc_edges;
            else
                ++rep.hyperlink_edges;
        }
    }

    if (report) *report = rep;
    return WikiGraph(std::move(adjacency), std::move(ids), granularity);
}

void WikiGraph::save(const std::string& path) const {
    BinaryWriter w(path);
    w.magic("HGRF1");
    w.u64(adjacency_.size());
    for (uint32_t u = 0; u < adjacency_.size(); ++u) {
        w.str(ids_[u]);
        w.u32(static_cast<uint32_t>(adjacency_[u].size()));
        for (uint32_t v : adjacency_[u]) w.str(ids_[v]);
    }
    w.close();
}

WikiGraph WikiGraph::load(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic("HGRF1");
    uint64_t n = r.u64();
    std::vector<std::string> ids(n);
    std::vector<std::vector<std::string>> neighbor_ids(n);
    for (uint64_t u = 0; u < n; ++u) {
        ids[u] = r.str();
        uint32_t deg = r.u32();
        neighbor_ids[u].resize(deg);
        for (uint32_t k = 0; k < deg; ++k) neighbor_ids[u][k] = r.str();
    }
    // ids are written in node order (sorted); resolve neighbor strings back
    // to indices by binary search.
    std::vector<std::vector<uint32_t>> adjacency(n);
    for (uint64_t u = 0; u < n; ++u) {
        adjacency[u].reserve(neighbor_ids[u].size());
        for (const std::string& id : neighbor_ids[u]) {
            auto it = std::lower_bound(ids.begin(), ids.end(), id);
            if (it == ids.end() || *it != id)
                throw DataError("graph file references unknown node: " + id);
            adjacency[u].push_back(static_cast<uint32_t>(it - ids.begin()));
        }
    }
    return WikiGraph(std::move(adjacency), std::move(ids), Granularity::kAllParagraphs);
}

}  // namespace pathqa
