#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hypermp/data.hpp"
#include "hypermp/random.hpp"

namespace hypermp::testing {

// Synthetic citation corpus with planted class structure: each class owns a
// block of vocabulary words that its documents use more often, and citations
// prefer documents of the same class. Shaped like the real corpus (binary
// bag-of-words + directed citation pairs) so the whole pipeline can be
// rehearsed end to end without the actual files.
struct SyntheticSpec {
    int num_docs = 700;
    int num_classes = 7;
    int words_per_class = 20;
    int extra_words = 40;           // class-neutral vocabulary tail
    double in_class_word_rate = 0.30;
    double off_class_word_rate = 0.02;
    int citations_per_doc = 2;
    double homophily = 0.85;        // probability a citation stays in-class
};

inline CorpusRaw synthetic_corpus(const SyntheticSpec& spec, Rng& rng) {
    CorpusRaw out;
    const int f = spec.num_classes * spec.words_per_class + spec.extra_words;
    std::vector<std::vector<double>> rows;
    for (int d = 0; d < spec.num_docs; ++d) {
        const int label = d % spec.num_classes;
        out.labels.push_back(label);
        out.doc_ids.push_back("doc" + std::to_string(d));
        out.id_map.emplace(out.doc_ids.back(), d);
        std::vector<double> row(f, 0.0);
        for (int w = 0; w < f; ++w) {
            const bool in_class = w >= label * spec.words_per_class &&
                                  w < (label + 1) * spec.words_per_class;
            const double p = in_class ? spec.in_class_word_rate : spec.off_class_word_rate;
            if (rng.bernoulli(p)) row[w] = 1.0;
        }
        rows.push_back(std::move(row));
    }
    out.num_classes = spec.num_classes;
    for (int c = 0; c < spec.num_classes; ++c) out.class_names.push_back("class" + std::to_string(c));
    out.features = Tensor::from_rows(rows);
    out.features_sparse = CsrMatrix::from_dense(out.features);

    std::vector<std::vector<int>> by_class(spec.num_classes);
    for (int d = 0; d < spec.num_docs; ++d) by_class[d % spec.num_classes].push_back(d);
    std::set<std::pair<int, int>> seen;
    for (int d = 0; d < spec.num_docs; ++d) {
        for (int k = 0; k < spec.citations_per_doc; ++k) {
            const bool same = rng.bernoulli(spec.homophily);
            int cited;
            if (same) {
                const auto& pool = by_class[d % spec.num_classes];
                cited = pool[rng.below(pool.size())];
            } else {
                cited = static_cast<int>(rng.below(spec.num_docs));
            }
            if (cited == d) continue;
            if (!seen.emplace(cited, d).second) continue;
            out.citation_pairs.emplace_back(cited, d);  // (cited, citing)
            ++out.raw_pair_count;
        }
    }
    return out;
}

/// Writes the corpus in the standard two-file layout (for loader round trips
/// and CLI tests).
inline void write_corpus_files(const CorpusRaw& corpus, const std::string& content_path,
                               const std::string& cites_path) {
    std::ofstream content(content_path);
    for (std::size_t d = 0; d < corpus.doc_ids.size(); ++d) {
        content << corpus.doc_ids[d];
        for (int j = 0; j < corpus.features.cols(); ++j)
            content << '\t' << (corpus.features(static_cast<int>(d), j) != 0.0 ? '1' : '0');
        content << '\t' << corpus.class_names[corpus.labels[d]] << '\n';
    }
    std::ofstream cites(cites_path);
    for (const auto& [cited, citing] : corpus.citation_pairs)
        cites << corpus.doc_ids[cited] << '\t' << corpus.doc_ids[citing] << '\n';
}

}  // namespace hypermp::testing
