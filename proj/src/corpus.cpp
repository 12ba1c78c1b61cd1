#include "pathqa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pathqa/common.hpp"

namespace pathqa {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

Corpus Corpus::from_paragraphs(std::vector<Paragraph> paragraphs) {
    Corpus c;
    std::sort(paragraphs.begin(), paragraphs.end(),
              [](const Paragraph& a, const Paragraph& b) { return a.para_id < b.para_id; });
    c.paragraphs_ = std::move(paragraphs);

    for (uint32_t i = 0; i < c.paragraphs_.size(); ++i) {
        const Paragraph& p = c.paragraphs_[i];
        if (p.text.empty()) throw DataError("empty text in paragraph " + p.para_id);
        if (!c.by_id_.emplace(p.para_id, i).second)
            throw DataError("duplicate para_id: " + p.para_id);
        c.by_article_[p.article_title].push_back(i);
    }

    // Within one article indices must be distinct and contiguous from 0.
    for (auto& [title, nodes] : c.by_article_) {
        std::sort(nodes.begin(), nodes.end(), [&](uint32_t a, uint32_t b) {
            return c.paragraphs_[a].para_index < c.paragraphs_[b].para_index;
        });
        for (uint32_t k = 0; k < nodes.size(); ++k) {
            if (c.paragraphs_[nodes[k]].para_index != k)
                throw DataError("article '" + title +
                                "': para_index values not contiguous from 0");
        }
    }

    // Collect dangling link targets (kept, flagged here; dropped at graph build).
    std::set<std::string> dangling;
    for (const Paragraph& p : c.paragraphs_)
        for (const std::string& target : p.out_links)
            if (!c.by_article_.count(target)) dangling.insert(target);
    c.dangling_links_.assign(dangling.begin(), dangling.end());
    return c;
}

std::optional<uint32_t> Corpus::find(const std::string& para_id) const {
    auto it = by_id_.find(para_id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

uint32_t Corpus::require(const std::string& para_id) const {
    auto node = find(para_id);
    if (!node) throw DataError("unknown para_id: " + para_id);
    return *node;
}

const std::vector<uint32_t>* Corpus::article(const std::string& title) const {
    auto it = by_article_.find(title);
    if (it == by_article_.end()) return nullptr;
    return &it->second;
}

Corpus parse_corpus_jsonl(const std::string& content, const std::string& origin) {
    std::vector<Paragraph> paragraphs;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= content.size()) {
        size_t end = content.find('\n', pos);
        std::string_view line(content.data() + pos,
                              (end == std::string::npos ? content.size() : end) - pos);
        pos = (end == std::string::npos) ? content.size() + 1 : end + 1;
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw DataError(origin + ":" + std::to_string(line_no) + ": malformed JSON line");
        try {
            Paragraph p;
            p.para_id = rec.at("id").get<std::string>();
            p.article_title = rec.at("title").get<std::string>();
            p.para_index = rec.at("para_idx").get<uint32_t>();
            p.text = rec.at("text").get<std::string>();
            p.out_links = rec.at("links").get<std::vector<std::string>>();
            p.is_introductory = rec.at("is_intro").get<bool>();
            std::string canonical = p.article_title + "/" + std::to_string(p.para_index);
            if (p.para_id != canonical)
                throw DataError(origin + ":" + std::to_string(line_no) + ": id '" + p.para_id +
                                "' does not match '<title>/<para_idx>' (" + canonical + ")");
            paragraphs.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return Corpus::from_paragraphs(std::move(paragraphs));
}

Corpus ingest_corpus(const std::string& path) {
    return parse_corpus_jsonl(read_text_file(path), path);
}

void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const Paragraph& p : corpus.paragraphs()) {
        json rec{{"id", p.para_id},          {"title", p.article_title},
                 {"para_idx", p.para_index}, {"text", p.text},
                 {"links", p.out_links},     {"is_intro", p.is_introductory}};
        out << rec.dump() << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace pathqa
