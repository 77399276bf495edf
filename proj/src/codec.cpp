#include "livinglab/codec.hpp"

namespace livinglab {

namespace {

const Json& require(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw DomainError(std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const Json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_string()) throw DomainError(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::int64_t require_int(const Json& obj, const char* key) {
    const auto& v = require(obj, key);
    if (!v.is_number_integer()) throw DomainError(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

}  // namespace

Json interleaved_to_json(const InterleavedList& list) {
    Json body = Json::array();
    for (const auto& e : list.entries) body.push_back({{"docid", e.doc_id}, {"type", to_string(e.team)}});
    return body;
}

InterleavedList interleaved_from_json(const Json& body, std::string exp_system, std::string base_system) {
    if (!body.is_array()) throw DomainError("interleaved list must be an array");
    InterleavedList list;
    list.exp_system = std::move(exp_system);
    list.base_system = std::move(base_system);
    for (const auto& item : body) {
        list.entries.push_back({require_string(item, "docid"), parse_team(require_string(item, "type"))});
    }
    return list;
}

Json impression_to_json(const Impression& imp) {
    Json record;
    record["type"] = "impression";
    record["impression_id"] = imp.impression_id;
    record["session_id"] = imp.session_id;
    record["task"] = to_string(imp.task);
    record[imp.task == Task::Ranking ? "q" : "itemid"] = imp.query_or_item;
    record["page"] = imp.page;
    record["rpp"] = imp.rpp;
    record["ts"] = to_millis(imp.timestamp);
    record["exp"] = imp.interleaved.exp_system;
    record["base"] = imp.interleaved.base_system;
    record["list"] = interleaved_to_json(imp.interleaved);
    return record;
}

Impression impression_from_json(const Json& record) {
    Impression imp;
    imp.impression_id = require_string(record, "impression_id");
    imp.session_id = require_string(record, "session_id");
    imp.task = parse_task(require_string(record, "task"));
    imp.query_or_item = require_string(record, imp.task == Task::Ranking ? "q" : "itemid");
    imp.page = static_cast<int>(require_int(record, "page"));
    imp.rpp = static_cast<int>(require_int(record, "rpp"));
    imp.timestamp = from_millis(require_int(record, "ts"));
    imp.interleaved =
        interleaved_from_json(require(record, "list"), require_string(record, "exp"), require_string(record, "base"));
    if (imp.impression_id.empty()) throw DomainError("empty impression_id");
    if (imp.rpp < 1) throw DomainError("rpp must be positive");
    if (imp.interleaved.entries.size() > static_cast<std::size_t>(imp.rpp)) {
        throw DomainError("interleaved list longer than rpp");
    }
    return imp;
}

Json feedback_to_json(const FeedbackEvent& feedback) {
    Json clicks = Json::array();
    for (const auto& c : feedback.clicks) {
        clicks.push_back({{"docid", c.doc_id}, {"element", c.serp_element}, {"ts", to_millis(c.timestamp)}});
    }
    return {{"impression_id", feedback.impression_id}, {"clicks", clicks}};
}

FeedbackEvent feedback_from_json(const Json& payload, Timestamp default_ts) {
    if (!payload.is_object()) throw DomainError("feedback must be a JSON object");
    FeedbackEvent fb;
    fb.impression_id = require_string(payload, "impression_id");
    const auto& clicks = require(payload, "clicks");
    if (!clicks.is_array()) throw DomainError("'clicks' must be an array");
    for (const auto& c : clicks) {
        if (!c.is_object()) throw DomainError("click entries must be objects");
        ClickEvent click;
        click.doc_id = require_string(c, "docid");
        if (auto el = c.find("element"); el != c.end() && !el->is_null()) {
            if (!el->is_string()) throw DomainError("'element' must be a string");
            click.serp_element = el->get<std::string>();
        }
        click.timestamp = default_ts;
        if (auto ts = c.find("ts"); ts != c.end() && !ts->is_null()) {
            if (!ts->is_number_integer()) throw DomainError("'ts' must be integer milliseconds");
            click.timestamp = from_millis(ts->get<std::int64_t>());
        }
        fb.clicks.push_back(std::move(click));
    }
    return fb;
}

Json session_to_json(const std::string& session_id, const std::string& site_user, Timestamp start) {
    return {{"type", "session"}, {"session_id", session_id}, {"site_user", site_user}, {"start", to_millis(start)}};
}

Json document_to_json(const DocumentRecord& doc, std::string_view id_field) {
    Json obj;
    obj[std::string(id_field)] = doc.doc_id;
    for (const auto& [name, values] : doc.fields) obj[name] = values;
    return obj;
}

}  // namespace livinglab
