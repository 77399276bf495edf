#include "livinglab/store.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "livinglab/ingest.hpp"
#include "livinglab/log.hpp"

namespace livinglab {

namespace {

std::string require_str(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw DomainError(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

std::int64_t require_i64(const Json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer()) {
        throw DomainError(std::string("missing integer field '") + key + "'");
    }
    return it->get<std::int64_t>();
}

using ClickKey = std::tuple<std::string, std::int64_t, std::string, std::string>;

// Replays log records into a snapshot, enforcing referential integrity.
// Every check runs before any mutation, so a rejected record leaves the
// state untouched.
struct SnapshotBuilder {
    StoreSnapshot data;
    std::unordered_map<std::string, std::size_t> impression_index;
    std::set<ClickKey> click_keys;
    std::set<std::string> session_ids;

    void apply(const Json& record) {
        if (!record.is_object()) throw DomainError("log record must be a JSON object");
        const auto type = require_str(record, "type");
        if (type == "session") {
            SessionRecord s{require_str(record, "session_id"), require_str(record, "site_user"),
                            from_millis(require_i64(record, "start"))};
            if (!session_ids.insert(s.session_id).second) throw DomainError("duplicate session " + s.session_id);
            data.sessions.push_back(std::move(s));
        } else if (type == "impression") {
            auto imp = impression_from_json(record);
            if (impression_index.count(imp.impression_id)) {
                throw DomainError("duplicate impression " + imp.impression_id);
            }
            impression_index.emplace(imp.impression_id, data.impressions.size());
            data.impressions.push_back(std::move(imp));
        } else if (type == "traffic") {
            TrafficRecord t;
            t.session_id = require_str(record, "session_id");
            t.task = parse_task(require_str(record, "task"));
            t.query_or_item = require_str(record, t.task == Task::Ranking ? "q" : "itemid");
            t.base_system = require_str(record, "base");
            t.timestamp = from_millis(require_i64(record, "ts"));
            data.traffic.push_back(std::move(t));
        } else if (type == "feedback") {
            auto fb = feedback_from_json(record);
            auto it = impression_index.find(fb.impression_id);
            if (it == impression_index.end()) throw DomainError("feedback for unknown impression " + fb.impression_id);
            check_referential_integrity(data.impressions[it->second], fb);
            for (const auto& c : fb.clicks) {
                click_keys.emplace(fb.impression_id, to_millis(c.timestamp), c.doc_id, c.serp_element);
            }
            data.feedback.push_back(std::move(fb));
        } else {
            throw DomainError("unknown record type '" + type + "'");
        }
    }
};

}  // namespace

struct FeedbackStore::ReplayState : SnapshotBuilder {};

FeedbackStore::FeedbackStore() : state_(std::make_unique<ReplayState>()) {}

std::unordered_map<std::string, std::vector<ClickEvent>> StoreSnapshot::clicks_by_impression() const {
    std::unordered_map<std::string, std::vector<ClickEvent>> out;
    for (const auto& fb : feedback) {
        auto& dst = out[fb.impression_id];
        dst.insert(dst.end(), fb.clicks.begin(), fb.clicks.end());
    }
    return out;
}

StoreSnapshot load_snapshot(std::istream& in, const std::filesystem::path& label) {
    SnapshotBuilder builder;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        try {
            builder.apply(Json::parse(line));
        } catch (const std::exception& e) {
            throw ParseError(label, number, e.what());
        }
    }
    return std::move(builder.data);
}

StoreSnapshot load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_snapshot(in, path);
}

DirectorySink::DirectorySink(std::filesystem::path dir) : dir_(std::move(dir)) {}

bool DirectorySink::deliver(std::span<const ForwardRecord> records) {
    std::lock_guard lock(mutex_);
    try {
        std::filesystem::create_directories(dir_);
        std::map<std::string, std::vector<const ForwardRecord*>> by_source;
        for (const auto& r : records) by_source[r.source].push_back(&r);
        for (auto& [source, rows] : by_source) {
            const auto file = dir_ / (source + ".jsonl");
            auto& seen = seen_[source];
            if (scanned_.insert(source).second && std::filesystem::exists(file)) {
                std::ifstream in(file);
                for (std::string line; std::getline(in, line);) {
                    auto obj = Json::parse(line, nullptr, false);
                    if (obj.is_object() && obj.contains("seq")) seen.insert(obj["seq"].get<std::uint64_t>());
                }
            }
            std::ofstream out(file, std::ios::app | std::ios::binary);
            if (!out) return false;
            for (const auto* r : rows) {
                if (seen.count(r->seq)) continue;
                out << r->line << '\n';
                seen.insert(r->seq);
            }
            out.flush();
            if (!out) return false;
        }
        return true;
    } catch (const std::exception& e) {
        log(LogLevel::Warning, std::string("directory sink failed: ") + e.what());
        return false;
    }
}

HttpSink::HttpSink(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
    auto scheme = url.find("://");
    auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    base_ = url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

bool HttpSink::deliver(std::span<const ForwardRecord> records) {
    if (records.empty()) return true;
    Json body;
    body["source"] = records.front().source;
    body["records"] = Json::array();
    for (const auto& r : records) body["records"].push_back(Json::parse(r.line));
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Post(path_, body.dump(), "application/json");
    return res && res->status >= 200 && res->status < 300;
}

std::unique_ptr<FeedbackSink> make_sink(const std::string& target) {
    if (target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0) return std::make_unique<HttpSink>(target);
    return std::make_unique<DirectorySink>(target);
}

std::shared_ptr<FeedbackStore> FeedbackStore::in_memory(std::string source) {
    std::shared_ptr<FeedbackStore> store(new FeedbackStore());
    store->source_ = std::move(source);
    return store;
}

std::shared_ptr<FeedbackStore> FeedbackStore::open(const std::filesystem::path& path, std::string source) {
    std::shared_ptr<FeedbackStore> store(new FeedbackStore());
    store->path_ = path;
    store->source_ = source.empty() ? path.stem().string() : std::move(source);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

    std::string content;
    if (std::filesystem::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        content = buf.str();
    }
    const auto complete = content.rfind('\n');
    const std::size_t keep = complete == std::string::npos ? 0 : complete + 1;
    if (keep < content.size()) {
        log(LogLevel::Warning, "dropping torn final record in " + path.string());
        std::filesystem::resize_file(path, keep);
    }
    std::size_t number = 0;
    std::size_t start = 0;
    while (start < keep) {
        const auto end = content.find('\n', start);
        std::string line = content.substr(start, end - start);
        start = end + 1;
        ++number;
        try {
            store->state_->apply(Json::parse(line));
        } catch (const std::exception& e) {
            throw ParseError(path, number, e.what());
        }
        store->lines_.push_back(std::move(line));
    }

    const auto cursor = std::filesystem::path(path.string() + ".forwarded");
    if (std::filesystem::exists(cursor)) {
        std::ifstream in(cursor);
        std::size_t n = 0;
        if (in >> n) store->forwarded_ = std::min(n, store->lines_.size());
    }

    store->file_ = std::fopen(path.string().c_str(), "ab");
    if (!store->file_) throw std::runtime_error("cannot open " + path.string() + " for appending");
    return store;
}

FeedbackStore::~FeedbackStore() {
    if (file_) std::fclose(file_);
}

void FeedbackStore::append_locked(Json record) {
    record["seq"] = lines_.size() + 1;
    state_->apply(record);
    std::string line = record.dump();
    if (file_) {
        const std::string out = line + '\n';
        if (std::fwrite(out.data(), 1, out.size(), file_) != out.size() || std::fflush(file_) != 0) {
            throw std::runtime_error("failed to append to feedback log");
        }
    }
    lines_.push_back(std::move(line));
}

void FeedbackStore::record_session(const SessionRecord& session) {
    std::lock_guard lock(mutex_);
    append_locked(session_to_json(session.session_id, session.site_user, session.start));
}

void FeedbackStore::record_impression(const Impression& impression) {
    std::lock_guard lock(mutex_);
    append_locked(impression_to_json(impression));
}

void FeedbackStore::record_traffic(const TrafficRecord& t) {
    Json record;
    record["type"] = "traffic";
    record["session_id"] = t.session_id;
    record["task"] = to_string(t.task);
    record[t.task == Task::Ranking ? "q" : "itemid"] = t.query_or_item;
    record["base"] = t.base_system;
    record["ts"] = to_millis(t.timestamp);
    std::lock_guard lock(mutex_);
    append_locked(std::move(record));
}

FeedbackAppend FeedbackStore::record_feedback(const FeedbackEvent& feedback) {
    std::lock_guard lock(mutex_);
    auto it = state_->impression_index.find(feedback.impression_id);
    if (it == state_->impression_index.end()) {
        throw DomainError("unknown impression_id '" + feedback.impression_id + "'");
    }
    check_referential_integrity(state_->data.impressions[it->second], feedback);
    FeedbackEvent fresh{feedback.impression_id, {}};
    FeedbackAppend result;
    std::set<ClickKey> batch;
    for (const auto& c : feedback.clicks) {
        ClickKey key{feedback.impression_id, to_millis(c.timestamp), c.doc_id, c.serp_element};
        if (state_->click_keys.count(key) || !batch.insert(key).second) {
            ++result.duplicate_clicks;
            continue;
        }
        fresh.clicks.push_back(c);
    }
    result.new_clicks = fresh.clicks.size();
    if (!fresh.clicks.empty()) {
        Json record = feedback_to_json(fresh);
        record["type"] = "feedback";
        append_locked(std::move(record));
    }
    return result;
}

std::optional<Impression> FeedbackStore::find_impression(const std::string& impression_id) const {
    std::lock_guard lock(mutex_);
    auto it = state_->impression_index.find(impression_id);
    if (it == state_->impression_index.end()) return std::nullopt;
    return state_->data.impressions[it->second];
}

StoreSnapshot FeedbackStore::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_->data;
}

std::size_t FeedbackStore::record_count() const {
    std::lock_guard lock(mutex_);
    return lines_.size();
}

std::size_t FeedbackStore::forwarded_count() const {
    std::lock_guard lock(mutex_);
    return forwarded_;
}

void FeedbackStore::persist_cursor_locked() {
    if (!path_) return;
    const auto cursor = std::filesystem::path(path_->string() + ".forwarded");
    const auto tmp = std::filesystem::path(cursor.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << forwarded_ << '\n';
    }
    std::filesystem::rename(tmp, cursor);
}

std::size_t FeedbackStore::flush_to(FeedbackSink& sink) {
    std::lock_guard flush_lock(flush_mutex_);
    std::vector<ForwardRecord> batch;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = forwarded_; i < lines_.size(); ++i) batch.push_back({source_, i + 1, lines_[i]});
    }
    if (batch.empty()) return 0;
    if (!sink.deliver(batch)) return 0;
    std::lock_guard lock(mutex_);
    forwarded_ += batch.size();
    persist_cursor_locked();
    return batch.size();
}

std::size_t flush_feedback(FeedbackStore& store, FeedbackSink& sink) { return store.flush_to(sink); }

}  // namespace livinglab
