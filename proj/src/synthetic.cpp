#include "pathqa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "pathqa/common.hpp"
#include "pathqa/graph.hpp"
#include "pathqa/text.hpp"

namespace pathqa {

namespace {

std::string base26(size_t i, size_t width = 4) {
    std::string s(width, 'a');
    for (size_t k = width; k-- > 0;) {
        s[k] = static_cast<char>('a' + i % 26);
        i /= 26;
    }
    return s;
}

struct World {
    size_t num_entities = 0;
    size_t num_records = 0;
    std::vector<size_t> bridge;              // entity -> record index
    std::vector<std::vector<size_t>> extra;  // entity -> distractor record links
    std::vector<std::vector<size_t>> entity_links;  // entity -> linked entities
    std::vector<int> record_value;           // numeric attribute per record
    std::vector<std::string> entity_title;
    std::vector<std::string> record_title;
    std::vector<std::string> answer_token;   // pooled; distinct along each bridge
};

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out.push_back(' ');
        out += p;
    }
    return out;
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticConfig& config) {
    if (config.num_articles < 10 || config.num_questions < 1 ||
        config.paragraphs_per_article < 1)
        throw DataError("synthetic config: counts must be at least 1 (articles >= 10)");
    double frac_sum = config.frac_one_hop + config.frac_two_hop + config.frac_comparison;
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw DataError("synthetic config: hop fractions must sum to 1");
    if (config.vocabulary < 20)
        throw DataError(
            "synthetic config: vocabulary too small to guarantee zero question overlap");

    const size_t n_two = static_cast<size_t>(std::llround(config.frac_two_hop *
                                                          config.num_questions));
    const size_t n_one = static_cast<size_t>(std::llround(config.frac_one_hop *
                                                          config.num_questions));
    const size_t n_cmp = config.num_questions - std::min(config.num_questions, n_two + n_one);

    World w;
    w.num_records = std::max<size_t>({n_one, config.num_articles / 25, 8});
    if (w.num_records + 10 > config.num_articles)
        throw DataError("synthetic config: not enough articles for the requested question mix");
    w.num_entities = config.num_articles - w.num_records;
    if (w.num_entities < n_two)
        throw DataError("synthetic config: not enough entity articles for two-hop questions");
    if (n_cmp > 0 && w.num_records < 2)
        throw DataError("synthetic config: comparison questions need two record articles");

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<size_t> rec_dist(0, w.num_records - 1);
    std::uniform_int_distribution<size_t> ent_dist(0, w.num_entities - 1);
    std::uniform_int_distribution<size_t> fil_dist(0, config.vocabulary - 1);
    std::uniform_int_distribution<int> val_dist(10, 98);

    const size_t n_domains = std::max<size_t>(8, w.num_entities / 25);
    std::uniform_int_distribution<size_t> dom_dist(0, n_domains - 1);

    // Answer tokens come from a shared pool so they recur across records
    // (trainable); distractor links avoid the bridge's token, which keeps the
    // answerable-path count at exactly one.
    const size_t answer_pool = std::min<size_t>(48, std::max<size_t>(2, w.num_records / 2));
    for (size_t r = 0; r < w.num_records; ++r) {
        w.record_title.push_back("rec" + base26(r));
        w.answer_token.push_back("ans" + base26(r % answer_pool, 3));
        w.record_value.push_back(val_dist(rng));
    }
    std::vector<std::pair<size_t, size_t>> entity_domains;
    std::vector<std::vector<size_t>> domain_members(n_domains);
    for (size_t e = 0; e < w.num_entities; ++e) {
        w.entity_title.push_back("ent" + base26(e));
        size_t da = dom_dist(rng);
        size_t db = dom_dist(rng);
        while (db == da) db = dom_dist(rng);
        entity_domains.emplace_back(da, db);
        domain_members[da].push_back(e);
        w.bridge.push_back(rec_dist(rng));
        std::vector<size_t> extra;
        size_t guard = 0;
        while (extra.size() < 2 && guard++ < 500) {
            size_t x = rec_dist(rng);
            if (x == w.bridge.back()) continue;
            if (w.answer_token[x] == w.answer_token[w.bridge.back()]) continue;
            if (std::find(extra.begin(), extra.end(), x) != extra.end()) continue;
            extra.push_back(x);
        }
        w.extra.push_back(std::move(extra));
    }
    // Metadata-only entity-to-entity links (not surfaced in the text); they
    // give the path-augmentation rule linked predecessors with shared domain
    // terms.
    w.entity_links.resize(w.num_entities);
    for (size_t e = 0; e < w.num_entities; ++e) {
        const auto& members = domain_members[entity_domains[e].first];
        if (members.size() < 2) continue;
        std::uniform_int_distribution<size_t> pick(0, members.size() - 1);
        for (int draws = 0; draws < 2; ++draws) {
            size_t j = members[pick(rng)];
            if (j == e) continue;
            auto& links = w.entity_links[j];
            if (std::find(links.begin(), links.end(), e) == links.end()) links.push_back(e);
        }
    }

    auto filler = [&](size_t n) {
        std::vector<std::string> out;
        for (size_t i = 0; i < n; ++i) out.push_back("fil" + base26(fil_dist(rng), 3));
        return out;
    };
    auto domain_name = [&](size_t d) { return "dom" + base26(d, 3); };

    // Paragraph texts.
    std::vector<Paragraph> paragraphs;
    for (size_t e = 0; e < w.num_entities; ++e) {
        const std::string& te = w.entity_title[e];
        const std::string& tr = w.record_title[w.bridge[e]];
        auto [da, db] = entity_domains[e];
        auto fills = filler(2);
        Paragraph p;
        p.article_title = te;
        p.para_index = 0;
        p.para_id = te + "/0";
        p.is_introductory = true;
        // Bridge mentions share exact bigrams with the record intro
        // ("gateway <rec>", "<rec> holds", "<rec> stays"); the opening shares
        // bigrams with the question template.
        p.text = te + " " + domain_name(da) + " " + domain_name(db) + " subject . " + te +
                 " connects near gateway " + tr + " linked course . " + tr +
                 " holds marker standing . " + tr + " stays present along the campaign . " +
                 join(fills);
        p.out_links.push_back(tr);
        for (size_t x : w.extra[e]) p.out_links.push_back(w.record_title[x]);
        for (size_t j : w.entity_links[e]) p.out_links.push_back(w.entity_title[j]);
        paragraphs.push_back(std::move(p));
    }
    for (size_t r = 0; r < w.num_records; ++r) {
        const std::string& tr = w.record_title[r];
        auto fills = filler(2);
        Paragraph intro;
        intro.article_title = tr;
        intro.para_index = 0;
        intro.para_id = tr + "/0";
        intro.is_introductory = true;
        intro.text = tr + " holds the record " + w.answer_token[r] + " . gateway " + tr +
                     " covers the listing . " + tr + " stays rated at level mark " +
                     std::to_string(w.record_value[r]) + " units . " + join(fills);
        paragraphs.push_back(std::move(intro));
        for (size_t k = 1; k < config.paragraphs_per_article; ++k) {
            Paragraph extra;
            extra.article_title = tr;
            extra.para_index = static_cast<uint32_t>(k);
            extra.para_id = tr + "/" + std::to_string(k);
            extra.is_introductory = false;
            extra.text = join(filler(5)) + " notes kept aside";
            paragraphs.push_back(std::move(extra));
        }
    }

    SyntheticData data;
    data.corpus = Corpus::from_paragraphs(std::move(paragraphs));

    // Question type sequence: proportional interleave, deterministic.
    std::vector<int> kinds;  // 0 = one-hop, 1 = two-hop, 2 = comparison
    {
        size_t made[3] = {0, 0, 0};
        const double target[3] = {static_cast<double>(n_one), static_cast<double>(n_two),
                                  static_cast<double>(n_cmp)};
        const size_t caps[3] = {n_one, n_two, n_cmp};
        for (size_t i = 0; i < config.num_questions; ++i) {
            int pick = -1;
            double best = -1e18;
            for (int k = 0; k < 3; ++k) {
                if (made[k] >= caps[k]) continue;
                double gap = target[k] / config.num_questions -
                             static_cast<double>(made[k]) / (i + 1.0);
                if (gap > best) {
                    best = gap;
                    pick = k;
                }
            }
            if (pick < 0) break;
            ++made[pick];
            kinds.push_back(pick);
        }
    }

    size_t next_entity = 0, next_record = 0;
    for (size_t qi = 0; qi < kinds.size(); ++qi) {
        TrainingQuestion tq;
        tq.qid = "q" + std::to_string(qi);
        if (kinds[qi] == 1) {  // two-hop: entity -> bridged record
            size_t e = next_entity++;
            size_t r = w.bridge[e];
            auto [da, db] = entity_domains[e];
            tq.question = "what does " + w.entity_title[e] + " " + domain_name(da) + " " +
                          domain_name(db) + " connect with in range";
            if (config.bridge_overlap) tq.question += " near " + w.record_title[r];
            tq.answers = {w.answer_token[r]};
            tq.gold_para_ids = {w.entity_title[e] + "/0", w.record_title[r] + "/0"};
            tq.answer_bearing_id = w.record_title[r] + "/0";
            tq.answer_type = AnswerType::kSpan;
        } else if (kinds[qi] == 0) {  // one-hop: record asked directly
            size_t r = next_record++ % w.num_records;
            tq.question = "what does " + w.record_title[r] + " gather under listing today";
            tq.answers = {w.answer_token[r]};
            tq.gold_para_ids = {w.record_title[r] + "/0"};
            tq.answer_bearing_id = tq.gold_para_ids[0];
            tq.answer_type = AnswerType::kSpan;
        } else {  // comparison: two records, yes/no
            size_t ra = rec_dist(rng);
            size_t rb = rec_dist(rng);
            int tries = 0;
            while ((rb == ra || w.record_value[ra] == w.record_value[rb]) && tries++ < 200)
                rb = rec_dist(rng);
            if (rb == ra || w.record_value[ra] == w.record_value[rb])
                throw DataError("synthetic config: cannot draw comparable record pairs");
            tq.question = "is " + w.record_title[ra] + " level mark above " +
                          w.record_title[rb] + " level mark";
            tq.answer_type =
                w.record_value[ra] > w.record_value[rb] ? AnswerType::kYes : AnswerType::kNo;
            tq.gold_para_ids = {w.record_title[ra] + "/0", w.record_title[rb] + "/0"};
            tq.answer_bearing_id = std::nullopt;
        }
        data.questions.push_back(std::move(tq));
    }

    // Generation-time validity checks.
    WikiGraph graph = build_graph(data.corpus, Granularity::kAllParagraphs);
    std::unordered_map<std::string, std::vector<uint32_t>> token_to_nodes;
    for (uint32_t node = 0; node < data.corpus.size(); ++node)
        for (const std::string& tok :
             tokenize(data.corpus.at(node).text, /*drop_stopwords=*/true))
            token_to_nodes[tok].push_back(node);
    for (auto& [tok, nodes] : token_to_nodes) {
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    }

    for (const TrainingQuestion& tq : data.questions) {
        if (tq.gold_para_ids.size() != 2 || tq.answer_type != AnswerType::kSpan) continue;
        uint32_t gold_first = data.corpus.require(tq.gold_para_ids[0]);
        uint32_t gold_second = data.corpus.require(tq.gold_para_ids[1]);

        auto q_terms = tokenize(tq.question, /*drop_stopwords=*/true);
        if (!config.bridge_overlap) {
            auto answer_terms =
                tokenize(data.corpus.at(gold_second).text, /*drop_stopwords=*/true);
            std::unordered_set<std::string> answer_set(answer_terms.begin(),
                                                       answer_terms.end());
            for (const std::string& t : q_terms)
                if (answer_set.count(t))
                    throw DataError("generation check failed: question " + tq.qid +
                                    " shares term '" + t + "' with its answer paragraph");
        }

        // Exactly one answerable length-2 path: a node naming the question
        // entity, linked to a node containing the answer string.
        const std::string entity_token = tokenize(tq.gold_para_ids[0]).front();
        size_t answerable = 0;
        bool gold_found = false;
        auto it = token_to_nodes.find(entity_token);
        if (it != token_to_nodes.end()) {
            for (uint32_t u : it->second) {
                for (uint32_t v : graph.neighbors(u)) {
                    if (!contains_answer(data.corpus.at(v).text, tq.answers)) continue;
                    ++answerable;
                    gold_found |= (u == gold_first && v == gold_second);
                }
            }
        }
        if (answerable != 1 || !gold_found)
            throw DataError("generation check failed: question " + tq.qid + " has " +
                            std::to_string(answerable) + " answerable two-hop paths");
    }

    return data;
}

void gen_synthetic_files(const SyntheticConfig& config, const std::string& corpus_path,
                         const std::string& questions_path) {
    SyntheticData data = gen_synthetic(config);
    write_corpus_jsonl(data.corpus, corpus_path);
    write_questions(data.questions, questions_path);
}

}  // namespace pathqa
