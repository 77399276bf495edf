#pragma once

// Readers and writers for the on-disk formats: JSONL corpora and query sets,
// candidate lists for both tasks, and six-column TREC run files.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "livinglab/model.hpp"

namespace livinglab {

/// An error tied to a 1-based line of an input file.
struct LineMessage {
    std::size_t line = 0;
    std::string message;

    bool operator==(const LineMessage&) const = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::filesystem::path path, std::size_t line, std::string message);

    const std::filesystem::path& path() const { return path_; }
    std::size_t line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    std::filesystem::path path_;
    std::size_t line_;
    std::string detail_;
};

/// Corpus schema: the literature site keys documents by DBRECORDID, the
/// social-science site by id.
enum class Schema { Literature, SocialScience };

Schema parse_schema(std::string_view name);
std::string_view id_field(Schema schema);

template <typename T>
struct ParseOutcome {
    std::vector<T> records;
    std::vector<LineMessage> errors;
    std::size_t lines = 0;
};

/// Collects one record or one positioned error per line.
ParseOutcome<DocumentRecord> read_documents(const std::filesystem::path& path, Schema schema);
/// As read_documents but throws the first error.
std::vector<DocumentRecord> parse_documents(const std::filesystem::path& path, Schema schema);

ParseOutcome<HeadQuery> read_head_queries(const std::filesystem::path& path);
std::vector<HeadQuery> parse_head_queries(const std::filesystem::path& path);

/// Ranking lists keep file order; recommendation lists are ordered by
/// descending score, ties by ascending doc_id.
std::map<std::string, CandidateList> parse_candidates(const std::filesystem::path& path, Task task);
void write_candidates(std::ostream& out, const std::map<std::string, CandidateList>& lists, Task task);

struct RunEntry {
    std::string doc_id;
    int rank = 0;
    double score = 0.0;

    bool operator==(const RunEntry&) const = default;
};

struct RunFile {
    std::string tag;
    std::map<std::string, std::vector<RunEntry>> entries;  // qid -> entries sorted by rank

    bool operator==(const RunFile&) const = default;
    std::size_t size() const;
};

struct ValidationReport {
    std::vector<LineMessage> line_errors;
    std::vector<LineMessage> warnings;
    bool ok = true;
};

RunFile parse_run_file(const std::filesystem::path& path);
RunFile parse_run(std::istream& in, const std::filesystem::path& label = "<stream>");
void write_run_file(std::ostream& out, const RunFile& run);

/// Collects every syntax error rather than stopping at the first. Warns on
/// qids outside `known_qids` and, when supplied, on unknown doc ids.
/// Throws only when the file cannot be read.
ValidationReport validate_run_file(const std::filesystem::path& path,
                                   const std::optional<std::set<std::string>>& known_qids,
                                   const std::optional<std::set<std::string>>& known_doc_ids = std::nullopt);
ValidationReport validate_run(std::istream& in,
                              const std::optional<std::set<std::string>>& known_qids,
                              const std::optional<std::set<std::string>>& known_doc_ids = std::nullopt);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace livinglab
