#pragma once

// Built-in baselines: a BM25 bag-of-words ranker and TF-IDF cosine candidate
// generation between two corpora.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "livinglab/model.hpp"

namespace livinglab {

/// Lowercased alphanumeric runs of UTF-8 text. No stemming, no stop words.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
};

class InvertedIndex {
public:
    const std::vector<Posting>* postings(const std::string& term) const;

    std::size_t doc_count() const { return doc_ids_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    std::uint32_t doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }
    const std::string& doc_id(std::uint32_t doc) const { return doc_ids_.at(doc); }
    std::size_t term_count() const { return postings_.size(); }
    const std::vector<std::string>& fields() const { return fields_; }

private:
    friend InvertedIndex build_index(std::span<const DocumentRecord> corpus, const std::vector<std::string>& fields);

    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::string> doc_ids_;
    std::vector<std::string> fields_;
    double avg_doc_length_ = 0.0;
};

/// Indexes the concatenation of `fields` of every document. Throws
/// DomainError on an empty corpus or empty field selection.
InvertedIndex build_index(std::span<const DocumentRecord> corpus, const std::vector<std::string>& fields);

/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// Top `k` documents matching at least one query token, by descending BM25
/// score with ties broken by ascending doc_id.
std::vector<RankedResult> bm25_rank(const InvertedIndex& index, std::string_view query, std::size_t k,
                                    const Bm25Params& params = {});

/// Top `top_k` targets per source by TF-IDF cosine (idf over both corpora).
/// Targets with zero similarity are not listed.
std::map<std::string, CandidateList> tfidf_candidates(std::span<const DocumentRecord> sources,
                                                      std::span<const DocumentRecord> targets,
                                                      const std::vector<std::string>& fields,
                                                      std::size_t top_k);

/// Queries a dataset index with a publication's title.
std::vector<RankedResult> recommend_for_publication(const InvertedIndex& dataset_index,
                                                    const DocumentRecord& publication, std::size_t k,
                                                    const Bm25Params& params = {});

/// Title text of a record: `title`, else `TITLE`, else `title_en`.
std::string record_title(const DocumentRecord& record);

}  // namespace livinglab
