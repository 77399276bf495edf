#include "livinglab/baseline.hpp"

#include <algorithm>
#include <cmath>

namespace livinglab {

namespace {

// Decodes one UTF-8 code point starting at `i`; returns 0xFFFD and advances
// one byte on malformed input.
char32_t decode(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return 0xFFFD;
    }
    for (int k = 1; k < len; ++k) {
        const int c = cont(k);
        if (c < 0) {
            ++i;
            return 0xFFFD;
        }
        cp = (cp << 6) | static_cast<char32_t>(c);
    }
    i += len;
    return cp;
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp == 0xFFFD) return false;
    if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp == 0x37E || cp == 0x387) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp < 0xC0) return cp;
    if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137) return cp | 1;
    if (cp >= 0x139 && cp <= 0x148) return (cp & 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return cp | 1;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp & 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

std::string concatenated_fields(const DocumentRecord& doc, const std::vector<std::string>& fields) {
    std::string text;
    for (const auto& f : fields) {
        auto part = doc.field_text(f);
        if (part.empty()) continue;
        if (!text.empty()) text.push_back(' ');
        text += part;
    }
    return text;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = decode(text, i);
        if (is_word_char(cp)) {
            encode(to_lower(cp), current);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

void Bm25Params::validate() const {
    if (!(k1 > 0.0) || !std::isfinite(k1)) throw DomainError("BM25 k1 must be positive");
    if (!(b >= 0.0 && b <= 1.0)) throw DomainError("BM25 b must lie in [0, 1]");
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

InvertedIndex build_index(std::span<const DocumentRecord> corpus, const std::vector<std::string>& fields) {
    if (corpus.empty()) throw DomainError("cannot index an empty corpus");
    if (fields.empty()) throw DomainError("no fields selected for indexing");
    InvertedIndex index;
    index.fields_ = fields;
    index.doc_ids_.reserve(corpus.size());
    index.doc_lengths_.reserve(corpus.size());
    std::uint64_t total = 0;
    for (std::uint32_t doc = 0; doc < corpus.size(); ++doc) {
        const auto tokens = tokenize(concatenated_fields(corpus[doc], fields));
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
        index.doc_ids_.push_back(corpus[doc].doc_id);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total += tokens.size();
    }
    index.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(corpus.size());
    return index;
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq) {
    const double n = static_cast<double>(doc_count);
    const double df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<RankedResult> bm25_rank(const InvertedIndex& index, std::string_view query, std::size_t k,
                                    const Bm25Params& params) {
    if (k == 0) throw DomainError("k must be at least 1");
    params.validate();
    std::unordered_map<std::uint32_t, double> scores;
    const double avgdl = index.avg_doc_length();
    for (const auto& term : tokenize(query)) {
        const auto* list = index.postings(term);
        if (!list) continue;
        const double idf = bm25_idf(index.doc_count(), list->size());
        for (const auto& p : *list) {
            const double tf = p.tf;
            const double norm = avgdl > 0.0 ? index.doc_length(p.doc) / avgdl : 0.0;
            scores[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * norm));
        }
    }
    std::vector<RankedResult> ranked;
    ranked.reserve(scores.size());
    for (const auto& [doc, score] : scores) ranked.push_back({index.doc_id(doc), 0, score});
    auto better = [](const RankedResult& a, const RankedResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    };
    const std::size_t n = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n), ranked.end(), better);
    ranked.resize(n);
    for (std::size_t i = 0; i < ranked.size(); ++i) ranked[i].rank = static_cast<int>(i) + 1;
    return ranked;
}

std::map<std::string, CandidateList> tfidf_candidates(std::span<const DocumentRecord> sources,
                                                      std::span<const DocumentRecord> targets,
                                                      const std::vector<std::string>& fields,
                                                      std::size_t top_k) {
    if (top_k == 0) throw DomainError("top_k must be at least 1");
    if (sources.empty() || targets.empty()) throw DomainError("both corpora must be nonempty");
    if (fields.empty()) throw DomainError("no text fields selected");

    using Vector = std::map<std::string, double>;
    auto term_counts = [&](const DocumentRecord& d) {
        Vector tf;
        for (const auto& t : tokenize(concatenated_fields(d, fields))) tf[t] += 1.0;
        return tf;
    };
    std::vector<Vector> src_tf, tgt_tf;
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& d : sources) {
        src_tf.push_back(term_counts(d));
        for (const auto& [t, c] : src_tf.back()) ++df[t];
    }
    for (const auto& d : targets) {
        tgt_tf.push_back(term_counts(d));
        for (const auto& [t, c] : tgt_tf.back()) ++df[t];
    }
    // Smoothed idf keeps terms shared by every document at a positive weight.
    const double n = static_cast<double>(sources.size() + targets.size());
    auto weigh = [&](Vector& v) {
        double norm = 0.0;
        for (auto& [t, w] : v) {
            w *= std::log((1.0 + n) / (1.0 + static_cast<double>(df[t]))) + 1.0;
            norm += w * w;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (auto& [t, w] : v) w /= norm;
        }
        return norm > 0.0;
    };
    std::vector<bool> src_ok, tgt_ok;
    for (auto& v : src_tf) src_ok.push_back(weigh(v));
    for (auto& v : tgt_tf) tgt_ok.push_back(weigh(v));

    std::map<std::string, CandidateList> out;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        CandidateList list{sources[s].doc_id, {}};
        if (src_ok[s]) {
            std::vector<Candidate> scored;
            for (std::size_t t = 0; t < targets.size(); ++t) {
                if (!tgt_ok[t]) continue;
                double dot = 0.0;
                const auto& a = src_tf[s].size() <= tgt_tf[t].size() ? src_tf[s] : tgt_tf[t];
                const auto& b = src_tf[s].size() <= tgt_tf[t].size() ? tgt_tf[t] : src_tf[s];
                for (const auto& [term, w] : a) {
                    auto it = b.find(term);
                    if (it != b.end()) dot += w * it->second;
                }
                dot = std::clamp(dot, 0.0, 1.0);
                if (dot > 0.0) scored.push_back({targets[t].doc_id, dot});
            }
            std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
                if (*a.score != *b.score) return *a.score > *b.score;
                return a.doc_id < b.doc_id;
            });
            if (scored.size() > top_k) scored.resize(top_k);
            list.candidates = std::move(scored);
        }
        out.emplace(sources[s].doc_id, std::move(list));
    }
    return out;
}

std::string record_title(const DocumentRecord& record) {
    for (const char* name : {"title", "TITLE", "title_en"}) {
        auto text = record.field_text(name);
        if (!text.empty()) return text;
    }
    return {};
}

std::vector<RankedResult> recommend_for_publication(const InvertedIndex& dataset_index,
                                                    const DocumentRecord& publication, std::size_t k,
                                                    const Bm25Params& params) {
    const auto title = record_title(publication);
    if (title.empty()) throw DomainError("publication '" + publication.doc_id + "' has no title");
    return bm25_rank(dataset_index, title, k, params);
}

}  // namespace livinglab
