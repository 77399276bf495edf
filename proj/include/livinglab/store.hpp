#pragma once

// Append-only feedback log: sessions, experiment impressions, baseline-only
// traffic and click feedback, one JSON object per line.

#include <cstdio>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "livinglab/codec.hpp"
#include "livinglab/model.hpp"

namespace livinglab {

struct SessionRecord {
    std::string session_id;
    std::string site_user;
    Timestamp start{};
};

/// A page served without an experimental participant.
struct TrafficRecord {
    std::string session_id;
    Task task = Task::Ranking;
    std::string query_or_item;
    std::string base_system;
    Timestamp timestamp{};
};

struct StoreSnapshot {
    std::vector<SessionRecord> sessions;
    std::vector<Impression> impressions;
    std::vector<TrafficRecord> traffic;
    std::vector<FeedbackEvent> feedback;

    /// Clicks per impression id, merged over all feedback events.
    std::unordered_map<std::string, std::vector<ClickEvent>> clicks_by_impression() const;
};

/// Strict reader: any malformed line throws ParseError with its line number;
/// feedback must reference an earlier impression.
StoreSnapshot load_snapshot(const std::filesystem::path& path);
StoreSnapshot load_snapshot(std::istream& in, const std::filesystem::path& label = "<stream>");

struct ForwardRecord {
    std::string source;
    std::uint64_t seq = 0;
    std::string line;
};

/// Destination of forwarded log records. Deliveries may repeat; sinks key
/// records by (source, seq).
class FeedbackSink {
public:
    virtual ~FeedbackSink() = default;
    virtual bool deliver(std::span<const ForwardRecord> records) = 0;
};

/// Appends to <dir>/<source>.jsonl, skipping (source, seq) keys already there.
class DirectorySink final : public FeedbackSink {
public:
    explicit DirectorySink(std::filesystem::path dir);
    bool deliver(std::span<const ForwardRecord> records) override;

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::set<std::uint64_t>> seen_;
    std::set<std::string> scanned_;
};

/// POSTs {"source": ..., "records": [...]} to a URL; success on 2xx.
class HttpSink final : public FeedbackSink {
public:
    explicit HttpSink(std::string url, std::chrono::milliseconds timeout = std::chrono::seconds(5));
    bool deliver(std::span<const ForwardRecord> records) override;

private:
    std::string base_;
    std::string path_;
    std::chrono::milliseconds timeout_;
};

std::unique_ptr<FeedbackSink> make_sink(const std::string& target);

struct FeedbackAppend {
    std::size_t new_clicks = 0;
    std::size_t duplicate_clicks = 0;
};

class FeedbackStore {
public:
    /// Volatile store; nothing touches the filesystem.
    static std::shared_ptr<FeedbackStore> in_memory(std::string source = "memory");
    /// Opens (creating if needed) a log file and replays it. A torn final
    /// line left by an abrupt stop is dropped and truncated away.
    static std::shared_ptr<FeedbackStore> open(const std::filesystem::path& path, std::string source = {});

    ~FeedbackStore();
    FeedbackStore(const FeedbackStore&) = delete;
    FeedbackStore& operator=(const FeedbackStore&) = delete;

    void record_session(const SessionRecord& session);
    void record_impression(const Impression& impression);
    void record_traffic(const TrafficRecord& traffic);

    /// Validates referential integrity, then appends the clicks not seen
    /// before under the key (impression_id, ts, doc_id, element). Nothing is
    /// written when every click is a duplicate. Throws DomainError on an
    /// unknown impression or a click outside the impression.
    FeedbackAppend record_feedback(const FeedbackEvent& feedback);

    std::optional<Impression> find_impression(const std::string& impression_id) const;

    StoreSnapshot snapshot() const;
    std::size_t record_count() const;
    std::size_t forwarded_count() const;
    const std::string& source() const { return source_; }
    const std::optional<std::filesystem::path>& path() const { return path_; }

    /// Sends every not-yet-forwarded record; marks them forwarded only when
    /// the sink accepts the batch. Concurrent calls are serialized.
    std::size_t flush_to(FeedbackSink& sink);

private:
    FeedbackStore();

    struct ReplayState;

    void append_locked(Json record);
    void persist_cursor_locked();

    mutable std::mutex mutex_;
    std::mutex flush_mutex_;
    std::string source_;
    std::optional<std::filesystem::path> path_;
    std::FILE* file_ = nullptr;
    std::vector<std::string> lines_;
    std::size_t forwarded_ = 0;
    std::unique_ptr<ReplayState> state_;
};

std::size_t flush_feedback(FeedbackStore& store, FeedbackSink& sink);

}  // namespace livinglab
