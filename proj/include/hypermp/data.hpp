#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypermp/hypergraph.hpp"
#include "hypermp/random.hpp"
#include "hypermp/tensor.hpp"

namespace hypermp {

// Citation-corpus ingestion in the standard two-file layout:
//   <content>: one line per document,  "<id> <word_1> ... <word_F> <label>"
//   <cites>:   one line per citation,  "<cited_id> <citing_id>"
// Word values are binary bag-of-words flags. Unknown ids in the cites file
// are dropped (counted, not fatal).

struct CorpusRaw {
    Tensor features;  // [N x F], 0/1
    CsrMatrix features_sparse;
    std::vector<int> labels;
    int num_classes = 0;
    std::vector<std::string> class_names;              // class id -> label string
    std::vector<std::pair<int, int>> citation_pairs;   // (cited, citing), dense ids
    std::vector<std::string> doc_ids;                  // dense id -> external id
    std::unordered_map<std::string, int> id_map;       // external id -> dense id
    int raw_pair_count = 0;  // cites lines before any filtering
    int dropped_pairs = 0;   // lines with an unknown id
};

inline CorpusRaw load_cora(const std::string& content_path, const std::string& cites_path) {
    std::ifstream content(content_path);
    if (!content) throw IoError("cannot open " + content_path);
    CorpusRaw out;
    std::vector<std::vector<double>> rows;
    std::unordered_map<std::string, int> class_ids;
    std::string line;
    long line_no = 0;
    long feature_width = -1;
    while (std::getline(content, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.size() < 3) throw ParseError("content line needs id, words, label", line_no);
        if (feature_width < 0) feature_width = static_cast<long>(tokens.size()) - 2;
        if (static_cast<long>(tokens.size()) - 2 != feature_width)
            throw ParseError("content line has " + std::to_string(tokens.size() - 2) +
                                 " word columns, expected " + std::to_string(feature_width),
                             line_no);
        const std::string& id = tokens.front();
        if (out.id_map.count(id)) throw ParseError("duplicate document id '" + id + "'", line_no);
        std::vector<double> row(feature_width);
        for (long j = 0; j < feature_width; ++j) {
            const std::string& w = tokens[j + 1];
            if (w == "0")
                row[j] = 0.0;
            else if (w == "1")
                row[j] = 1.0;
            else
                throw ParseError("word value '" + w + "' is not 0/1", line_no);
        }
        const std::string& label = tokens.back();
        auto [it, inserted] = class_ids.try_emplace(label, static_cast<int>(class_ids.size()));
        if (inserted) out.class_names.push_back(label);
        out.id_map.emplace(id, static_cast<int>(out.doc_ids.size()));
        out.doc_ids.push_back(id);
        out.labels.push_back(it->second);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("content file is empty", line_no);
    out.num_classes = static_cast<int>(class_ids.size());
    out.features = Tensor::from_rows(rows);
    out.features_sparse = CsrMatrix::from_dense(out.features);

    std::ifstream cites(cites_path);
    if (!cites) throw IoError("cannot open " + cites_path);
    line_no = 0;
    while (std::getline(cites, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string cited, citing, extra;
        if (!(ls >> cited >> citing) || (ls >> extra))
            throw ParseError("cites line must be '<cited> <citing>'", line_no);
        ++out.raw_pair_count;
        auto a = out.id_map.find(cited);
        auto b = out.id_map.find(citing);
        if (a == out.id_map.end() || b == out.id_map.end()) {
            ++out.dropped_pairs;
            continue;
        }
        out.citation_pairs.emplace_back(a->second, b->second);
    }
    return out;
}

/// One hyperedge per document d: d itself plus every document d cites.
/// Documents citing nothing become singleton hyperedges, so |E| = num_docs
/// and no vertex is isolated. Pairs are (cited, citing).
inline Hypergraph build_cocitation_hypergraph(const std::vector<std::pair<int, int>>& pairs,
                                              int num_docs) {
    std::vector<std::set<int>> groups(num_docs);
    for (int d = 0; d < num_docs; ++d) groups[d].insert(d);
    for (const auto& [cited, citing] : pairs) {
        if (cited < 0 || cited >= num_docs || citing < 0 || citing >= num_docs)
            throw StructuralError("citation pair id out of range");
        groups[citing].insert(cited);
    }
    std::vector<std::vector<int>> hyperedges(num_docs);
    for (int d = 0; d < num_docs; ++d) hyperedges[d].assign(groups[d].begin(), groups[d].end());
    return Hypergraph::build(num_docs, std::move(hyperedges));
}

/// Per class: `train_per_class` vertices for training and `val_per_class` for
/// validation, drawn uniformly with the given rng; everything else is test.
struct SplitMasks {
    std::vector<std::uint8_t> train, val, test;
};

inline SplitMasks make_splits(const std::vector<int>& labels, int num_classes, Rng& rng,
                              int train_per_class = 20, int val_per_class = 70) {
    const int n = static_cast<int>(labels.size());
    SplitMasks m;
    m.train.assign(n, 0);
    m.val.assign(n, 0);
    m.test.assign(n, 0);
    std::vector<std::vector<int>> by_class(num_classes);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw ContractError("make_splits: label out of range");
        by_class[labels[i]].push_back(i);
    }
    for (int c = 0; c < num_classes; ++c) {
        auto& members = by_class[c];
        if (static_cast<int>(members.size()) < train_per_class + val_per_class)
            throw ContractError("make_splits: class " + std::to_string(c) + " has " +
                                std::to_string(members.size()) + " members, needs at least " +
                                std::to_string(train_per_class + val_per_class));
        rng.shuffle(members);
        for (int k = 0; k < train_per_class; ++k) m.train[members[k]] = 1;
        for (int k = train_per_class; k < train_per_class + val_per_class; ++k) m.val[members[k]] = 1;
        for (std::size_t k = train_per_class + val_per_class; k < members.size(); ++k)
            m.test[members[k]] = 1;
    }
    return m;
}

/// Everything one experiment needs: features, labels, structure, masks.
struct DatasetBundle {
    Tensor features;  // [V x F]
    CsrMatrix features_sparse;
    std::vector<int> labels;
    int num_classes = 0;
    Hypergraph hypergraph = Hypergraph::build(0, {});
    Tensor hyperedge_features;  // [E x F']; zero-width tensor when absent
    std::vector<std::uint8_t> train_mask, val_mask, test_mask;
    std::vector<std::string> doc_ids;
    std::unordered_map<std::string, int> id_map;

    int num_vertices() const { return features.rows(); }
    int feature_dim() const { return features.cols(); }
};

/// Assembles the co-citation bundle. The hyperedge for document d carries
/// document d's feature row, so hyperedge features alias the feature matrix.
inline DatasetBundle make_cocitation_bundle(CorpusRaw raw, Rng& split_rng) {
    DatasetBundle b;
    b.hypergraph = build_cocitation_hypergraph(raw.citation_pairs,
                                               static_cast<int>(raw.labels.size()));
    b.features = raw.features;
    b.features_sparse = std::move(raw.features_sparse);
    b.labels = std::move(raw.labels);
    b.num_classes = raw.num_classes;
    b.hyperedge_features = raw.features;  // same rows by construction
    auto masks = make_splits(b.labels, b.num_classes, split_rng);
    b.train_mask = std::move(masks.train);
    b.val_mask = std::move(masks.val);
    b.test_mask = std::move(masks.test);
    b.doc_ids = std::move(raw.doc_ids);
    b.id_map = std::move(raw.id_map);
    return b;
}

}  // namespace hypermp
