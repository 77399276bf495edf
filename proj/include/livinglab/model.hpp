#pragma once

// Shared domain vocabulary for the living-lab gateway: documents, queries,
// result lists, impressions, feedback, sessions and system identity.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace livinglab {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

inline std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_millis(std::int64_t ms) { return Timestamp{Millis{ms}}; }

enum class Task { Ranking, Recommendation };
enum class Team { Exp, Base };
enum class SystemKind { Precomputed, LiveRemote, BuiltinBaseline };

std::string_view to_string(Task task);
std::string_view to_string(Team team);
std::string_view to_string(SystemKind kind);
Task parse_task(std::string_view text);
Team parse_team(std::string_view text);
SystemKind parse_system_kind(std::string_view text);

/// Raised when a value violates a domain invariant.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DocumentRecord {
    std::string doc_id;
    std::map<std::string, std::vector<std::string>> fields;

    /// All values of a field joined by a single space; empty when absent.
    std::string field_text(const std::string& name) const;
};

struct HeadQuery {
    std::int64_t qid = 0;
    std::string qstr;
    std::int64_t freq = 0;
};

struct Candidate {
    std::string doc_id;
    std::optional<double> score;
};

struct CandidateList {
    std::string key;  // qid for ranking, seed doc_id for recommendation
    std::vector<Candidate> candidates;
};

struct RankedResult {
    std::string doc_id;
    int rank = 0;  // 1-based
    double score = 0.0;
};

struct InterleavedEntry {
    std::string doc_id;
    Team team = Team::Exp;

    bool operator==(const InterleavedEntry&) const = default;
};

struct InterleavedList {
    std::vector<InterleavedEntry> entries;
    std::string exp_system;
    std::string base_system;

    /// 0-based position of a document, or nullopt.
    std::optional<std::size_t> position_of(std::string_view doc_id) const;
};

struct Impression {
    std::string impression_id;
    std::string session_id;
    Task task = Task::Ranking;
    std::string query_or_item;
    int page = 0;
    int rpp = 10;
    InterleavedList interleaved;
    Timestamp timestamp{};
};

struct ClickEvent {
    std::string doc_id;
    std::string serp_element;
    Timestamp timestamp{};
};

struct FeedbackEvent {
    std::string impression_id;
    std::vector<ClickEvent> clicks;
};

struct Session {
    std::string session_id;
    std::string site_user;
    Timestamp start{};
    Timestamp end{};
    std::vector<std::string> impression_ids;
};

struct SystemDescriptor {
    std::string name;
    SystemKind kind = SystemKind::BuiltinBaseline;
    Task task = Task::Ranking;
    bool is_baseline = false;
    std::string source;
};

/// Throws DomainError unless exactly one baseline is registered for every
/// task that has systems, and names are unique.
void validate_registry(const std::vector<SystemDescriptor>& systems);

/// Checks that every click of `feedback` targets a document of `impression`.
/// Throws DomainError naming the first offending document.
void check_referential_integrity(const Impression& impression, const FeedbackEvent& feedback);

/// Monotonic id source; ids never repeat within one process lifetime and can
/// be resumed past a persisted high-water mark.
class ImpressionIdGenerator {
public:
    explicit ImpressionIdGenerator(std::string prefix = "imp-", std::uint64_t next = 1)
        : prefix_(std::move(prefix)), next_(next) {}

    std::string next();

    /// Ensures future ids are strictly greater than any id already issued
    /// with this prefix (ids with another prefix are ignored).
    void observe(std::string_view existing_id);

    std::uint64_t peek() const { return next_.load(); }

    const std::string& prefix() const { return prefix_; }

private:
    std::string prefix_;
    std::atomic<std::uint64_t> next_;
};

struct SessionResolution {
    std::string session_id;
    bool created = false;
    Timestamp start{};
};

/// Per-user session table. A request extends the user's open session when it
/// arrives within `timeout` of the last activity; otherwise a new session is
/// opened.
class SessionStore {
public:
    explicit SessionStore(std::string prefix = "ses-") : prefix_(std::move(prefix)) {}

    SessionResolution resolve(const std::string& site_user, Timestamp now, Millis timeout);

    /// Re-seeds the table from persisted sessions (replay on restart).
    void restore(const std::string& site_user, const std::string& session_id, Timestamp last_activity);

    std::size_t size() const;

private:
    struct OpenSession {
        std::string session_id;
        Timestamp last_activity{};
    };

    mutable std::mutex mutex_;
    std::string prefix_;
    std::uint64_t next_ = 1;
    std::unordered_map<std::string, OpenSession> open_;
};

std::string resolve_session(const std::string& site_user, Timestamp now, SessionStore& store, Millis timeout);

}  // namespace livinglab
