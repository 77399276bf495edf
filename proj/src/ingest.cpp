#include "livinglab/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace livinglab {

using nlohmann::json;

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

// Reads one line, dropping a trailing CR and (on the first line) a UTF-8 BOM.
bool next_line(std::istream& in, std::string& line, std::size_t& number) {
    if (!std::getline(in, line)) return false;
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    return true;
}

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

json parse_object_line(const std::string& line) {
    if (is_blank(line)) throw std::invalid_argument("empty line");
    json value = json::parse(line);
    if (!value.is_object()) throw std::invalid_argument("expected a JSON object");
    return value;
}

std::vector<std::string> field_values(const json& value) {
    std::vector<std::string> out;
    auto scalar = [](const json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_object() || v.is_array()) throw std::invalid_argument("nested structures are not supported in fields");
        return v.dump();
    };
    if (value.is_null()) return out;
    if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_null()) out.push_back(scalar(item));
        }
    } else {
        out.push_back(scalar(value));
    }
    return out;
}

std::int64_t require_integer(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
    if (!it->is_number_integer()) throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
    return it->get<std::int64_t>();
}

std::string key_text(const json& value, const char* key) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
    throw std::invalid_argument(std::string("field '") + key + "' must be a string or integer");
}

template <typename T>
std::vector<T> records_or_throw(ParseOutcome<T>&& outcome, const std::filesystem::path& path) {
    if (!outcome.errors.empty()) {
        const auto& first = outcome.errors.front();
        throw ParseError(path, first.line, first.message);
    }
    return std::move(outcome.records);
}

}  // namespace

ParseError::ParseError(std::filesystem::path path, std::size_t line, std::string message)
    : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + message),
      path_(std::move(path)),
      line_(line),
      detail_(std::move(message)) {}

Schema parse_schema(std::string_view name) {
    if (name == "livivo" || name == "literature") return Schema::Literature;
    if (name == "gesis" || name == "social-science" || name == "social_science") return Schema::SocialScience;
    throw DomainError("unknown corpus schema '" + std::string(name) + "'");
}

std::string_view id_field(Schema schema) {
    return schema == Schema::Literature ? "DBRECORDID" : "id";
}

ParseOutcome<DocumentRecord> read_documents(const std::filesystem::path& path, Schema schema) {
    auto in = open_or_throw(path);
    ParseOutcome<DocumentRecord> out;
    std::map<std::string, std::size_t> seen;
    const std::string id_key(id_field(schema));
    std::string line;
    while (next_line(in, line, out.lines)) {
        try {
            json obj = parse_object_line(line);
            auto id = obj.find(id_key);
            if (id == obj.end()) throw std::invalid_argument("missing document id field '" + id_key + "'");
            DocumentRecord rec;
            rec.doc_id = key_text(*id, id_key.c_str());
            if (rec.doc_id.empty()) throw std::invalid_argument("empty document id");
            for (auto& [name, value] : obj.items()) {
                if (name == id_key) continue;
                if (name.empty()) throw std::invalid_argument("empty field name");
                rec.fields[name] = field_values(value);
            }
            auto [it, inserted] = seen.emplace(rec.doc_id, out.lines);
            if (!inserted) {
                throw std::invalid_argument("duplicate doc_id '" + rec.doc_id + "' (first seen on line " +
                                            std::to_string(it->second) + ")");
            }
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            out.errors.push_back({out.lines, e.what()});
        }
    }
    return out;
}

std::vector<DocumentRecord> parse_documents(const std::filesystem::path& path, Schema schema) {
    return records_or_throw(read_documents(path, schema), path);
}

ParseOutcome<HeadQuery> read_head_queries(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    ParseOutcome<HeadQuery> out;
    std::set<std::int64_t> seen;
    std::string line;
    while (next_line(in, line, out.lines)) {
        try {
            json obj = parse_object_line(line);
            HeadQuery q;
            q.qid = require_integer(obj, "qid");
            auto qstr = obj.find("qstr");
            if (qstr == obj.end() || !qstr->is_string()) throw std::invalid_argument("missing string field 'qstr'");
            q.qstr = qstr->get<std::string>();
            if (q.qstr.empty()) throw std::invalid_argument("empty qstr");
            q.freq = require_integer(obj, "freq");
            if (q.freq < 0) throw std::invalid_argument("negative freq");
            if (!seen.insert(q.qid).second) throw std::invalid_argument("duplicate qid " + std::to_string(q.qid));
            out.records.push_back(std::move(q));
        } catch (const std::exception& e) {
            out.errors.push_back({out.lines, e.what()});
        }
    }
    return out;
}

std::vector<HeadQuery> parse_head_queries(const std::filesystem::path& path) {
    return records_or_throw(read_head_queries(path), path);
}

std::map<std::string, CandidateList> parse_candidates(const std::filesystem::path& path, Task task) {
    auto in = open_or_throw(path);
    std::map<std::string, CandidateList> lists;
    std::string line;
    std::size_t number = 0;
    while (next_line(in, line, number)) {
        try {
            json obj = parse_object_line(line);
            CandidateList list;
            std::set<std::string> ids;
            if (task == Task::Ranking) {
                auto qid = obj.find("qid");
                if (qid == obj.end()) throw std::invalid_argument("missing field 'qid'");
                list.key = key_text(*qid, "qid");
                auto cands = obj.find("candidates");
                if (cands == obj.end() || !cands->is_array()) throw std::invalid_argument("missing array 'candidates'");
                for (const auto& c : *cands) {
                    if (!c.is_string()) throw std::invalid_argument("candidate ids must be strings");
                    list.candidates.push_back({c.get<std::string>(), std::nullopt});
                }
            } else {
                auto sid = obj.find("s_id");
                if (sid == obj.end()) throw std::invalid_argument("missing field 's_id'");
                list.key = key_text(*sid, "s_id");
                auto cands = obj.find("candidate_docs");
                if (cands == obj.end() || !cands->is_object()) {
                    throw std::invalid_argument("missing object 'candidate_docs'");
                }
                for (auto& [doc, score] : cands->items()) {
                    if (!score.is_number()) throw std::invalid_argument("score of '" + doc + "' is not a number");
                    double value = score.get<double>();
                    if (!std::isfinite(value)) throw std::invalid_argument("non-finite score for '" + doc + "'");
                    list.candidates.push_back({doc, value});
                }
                std::stable_sort(list.candidates.begin(), list.candidates.end(),
                                 [](const Candidate& a, const Candidate& b) {
                                     if (*a.score != *b.score) return *a.score > *b.score;
                                     return a.doc_id < b.doc_id;
                                 });
            }
            if (list.key.empty()) throw std::invalid_argument("empty list key");
            if (list.candidates.empty()) throw std::invalid_argument("empty candidate list");
            for (const auto& c : list.candidates) {
                if (!ids.insert(c.doc_id).second) throw std::invalid_argument("duplicate candidate '" + c.doc_id + "'");
            }
            if (lists.count(list.key)) throw std::invalid_argument("duplicate list key '" + list.key + "'");
            lists.emplace(list.key, std::move(list));
        } catch (const std::exception& e) {
            throw ParseError(path, number, e.what());
        }
    }
    return lists;
}

void write_candidates(std::ostream& out, const std::map<std::string, CandidateList>& lists, Task task) {
    for (const auto& [key, list] : lists) {
        // Hand-assembled so recommendation candidates keep score order; a
        // json object would re-sort them by key.
        if (task == Task::Ranking) {
            json obj;
            std::int64_t qid = 0;
            auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), qid);
            if (ec == std::errc{} && ptr == key.data() + key.size()) {
                obj["qid"] = qid;
            } else {
                obj["qid"] = key;
            }
            obj["candidates"] = json::array();
            for (const auto& c : list.candidates) obj["candidates"].push_back(c.doc_id);
            out << obj.dump() << '\n';
        } else {
            out << "{\"s_id\":" << json(key).dump() << ",\"candidate_docs\":{";
            bool first = true;
            for (const auto& c : list.candidates) {
                if (!first) out << ',';
                first = false;
                out << json(c.doc_id).dump() << ':' << format_double(c.score.value_or(0.0));
            }
            out << "}}\n";
        }
    }
}

std::size_t RunFile::size() const {
    std::size_t n = 0;
    for (const auto& [qid, list] : entries) n += list.size();
    return n;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("cannot format double");
    return std::string(buf, ptr);
}

namespace {

struct RunLine {
    std::string qid;
    RunEntry entry;
    std::string tag;
    std::size_t line = 0;
};

std::optional<int> parse_rank(const std::string& text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1) return std::nullopt;
    return value;
}

std::optional<double> parse_score(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

struct RunScan {
    RunFile run;
    std::vector<LineMessage> errors;
    std::vector<LineMessage> warnings;
    std::map<std::string, std::size_t> first_line_of_qid;
    std::vector<RunLine> lines;
};

// Syntax pass plus per-qid structural checks; never stops at the first error.
RunScan scan_run(std::istream& in) {
    RunScan scan;
    std::string line;
    std::size_t number = 0;
    while (next_line(in, line, number)) {
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string tok; fields >> tok;) cols.push_back(tok);
        if (cols.size() != 6) {
            scan.errors.push_back({number, "expected 6 columns, found " + std::to_string(cols.size())});
            continue;
        }
        if (cols[1] != "Q0") {
            scan.errors.push_back({number, "second column must be the literal Q0, found '" + cols[1] + "'"});
            continue;
        }
        auto rank = parse_rank(cols[3]);
        if (!rank) {
            scan.errors.push_back({number, "rank must be a positive integer, found '" + cols[3] + "'"});
            continue;
        }
        auto score = parse_score(cols[4]);
        if (!score) {
            scan.errors.push_back({number, "score must be a finite real, found '" + cols[4] + "'"});
            continue;
        }
        if (scan.run.tag.empty()) {
            scan.run.tag = cols[5];
        } else if (cols[5] != scan.run.tag) {
            scan.errors.push_back({number, "run tag '" + cols[5] + "' differs from '" + scan.run.tag + "'"});
            continue;
        }
        scan.first_line_of_qid.emplace(cols[0], number);
        scan.lines.push_back({cols[0], {cols[2], *rank, *score}, cols[5], number});
    }

    std::map<std::string, std::vector<const RunLine*>> by_qid;
    for (const auto& l : scan.lines) by_qid[l.qid].push_back(&l);
    for (auto& [qid, rows] : by_qid) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const RunLine* a, const RunLine* b) { return a->entry.rank < b->entry.rank; });
        std::set<std::string> docs;
        auto& out = scan.run.entries[qid];
        int expected = 1;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = *rows[i];
            if (!docs.insert(row.entry.doc_id).second) {
                scan.errors.push_back({row.line, "duplicate doc_id '" + row.entry.doc_id + "' for qid " + qid});
                continue;
            }
            if (row.entry.rank < expected) {
                scan.errors.push_back(
                    {row.line, "duplicate rank " + std::to_string(row.entry.rank) + " for qid " + qid});
                continue;
            }
            if (row.entry.rank > expected) {
                scan.errors.push_back({row.line, "rank gap for qid " + qid + ": expected rank " +
                                                     std::to_string(expected) + ", found " +
                                                     std::to_string(row.entry.rank)});
            }
            if (!out.empty() && row.entry.score > out.back().score) {
                scan.warnings.push_back({row.line, "score increases with rank for qid " + qid});
            }
            out.push_back(row.entry);
            expected = row.entry.rank + 1;
        }
    }
    std::sort(scan.errors.begin(), scan.errors.end(),
              [](const LineMessage& a, const LineMessage& b) { return a.line < b.line; });
    std::sort(scan.warnings.begin(), scan.warnings.end(),
              [](const LineMessage& a, const LineMessage& b) { return a.line < b.line; });
    return scan;
}

}  // namespace

RunFile parse_run(std::istream& in, const std::filesystem::path& label) {
    auto scan = scan_run(in);
    if (!scan.errors.empty()) throw ParseError(label, scan.errors.front().line, scan.errors.front().message);
    return std::move(scan.run);
}

RunFile parse_run_file(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return parse_run(in, path);
}

void write_run_file(std::ostream& out, const RunFile& run) {
    for (const auto& [qid, list] : run.entries) {
        for (const auto& e : list) {
            out << qid << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_double(e.score) << ' ' << run.tag
                << '\n';
        }
    }
}

ValidationReport validate_run(std::istream& in, const std::optional<std::set<std::string>>& known_qids,
                              const std::optional<std::set<std::string>>& known_doc_ids) {
    auto scan = scan_run(in);
    ValidationReport report;
    report.line_errors = std::move(scan.errors);
    report.warnings = std::move(scan.warnings);
    if (known_qids) {
        for (const auto& [qid, line] : scan.first_line_of_qid) {
            if (!known_qids->count(qid)) report.warnings.push_back({line, "unknown qid " + qid});
        }
    }
    if (known_doc_ids) {
        for (const auto& l : scan.lines) {
            if (!known_doc_ids->count(l.entry.doc_id)) {
                report.warnings.push_back({l.line, "unknown doc_id " + l.entry.doc_id});
            }
        }
    }
    if (scan.lines.empty() && report.line_errors.empty()) report.warnings.push_back({0, "no entries"});
    std::stable_sort(report.warnings.begin(), report.warnings.end(),
                     [](const LineMessage& a, const LineMessage& b) { return a.line < b.line; });
    report.ok = report.line_errors.empty();
    return report;
}

ValidationReport validate_run_file(const std::filesystem::path& path,
                                   const std::optional<std::set<std::string>>& known_qids,
                                   const std::optional<std::set<std::string>>& known_doc_ids) {
    auto in = open_or_throw(path);
    return validate_run(in, known_qids, known_doc_ids);
}

}  // namespace livinglab
