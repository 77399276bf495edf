#include "livinglab/model.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace livinglab {

std::string_view to_string(Task task) {
    return task == Task::Ranking ? "ranking" : "recommendation";
}

std::string_view to_string(Team team) {
    return team == Team::Exp ? "EXP" : "BASE";
}

std::string_view to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::Precomputed: return "precomputed";
        case SystemKind::LiveRemote: return "live_remote";
        case SystemKind::BuiltinBaseline: return "builtin_baseline";
    }
    return "unknown";
}

Task parse_task(std::string_view text) {
    if (text == "ranking") return Task::Ranking;
    if (text == "recommendation") return Task::Recommendation;
    throw DomainError("unknown task '" + std::string(text) + "'");
}

Team parse_team(std::string_view text) {
    if (text == "EXP") return Team::Exp;
    if (text == "BASE") return Team::Base;
    throw DomainError("unknown team label '" + std::string(text) + "'");
}

SystemKind parse_system_kind(std::string_view text) {
    if (text == "precomputed") return SystemKind::Precomputed;
    if (text == "live_remote") return SystemKind::LiveRemote;
    if (text == "builtin_baseline") return SystemKind::BuiltinBaseline;
    throw DomainError("unknown system kind '" + std::string(text) + "'");
}

std::string DocumentRecord::field_text(const std::string& name) const {
    auto it = fields.find(name);
    if (it == fields.end()) return {};
    std::string out;
    for (const auto& value : it->second) {
        if (!out.empty()) out.push_back(' ');
        out += value;
    }
    return out;
}

std::optional<std::size_t> InterleavedList::position_of(std::string_view doc_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].doc_id == doc_id) return i;
    }
    return std::nullopt;
}

void validate_registry(const std::vector<SystemDescriptor>& systems) {
    std::set<std::string> names;
    std::map<Task, int> baselines;
    std::set<Task> tasks;
    for (const auto& s : systems) {
        if (s.name.empty()) throw DomainError("system with empty name");
        if (!names.insert(s.name).second) throw DomainError("duplicate system name '" + s.name + "'");
        tasks.insert(s.task);
        if (s.is_baseline) ++baselines[s.task];
    }
    for (Task task : tasks) {
        const int n = baselines[task];
        if (n != 1) {
            throw DomainError("task " + std::string(to_string(task)) + " needs exactly one baseline, found " +
                              std::to_string(n));
        }
    }
}

void check_referential_integrity(const Impression& impression, const FeedbackEvent& feedback) {
    for (const auto& click : feedback.clicks) {
        if (!impression.interleaved.position_of(click.doc_id)) {
            throw DomainError("click on document '" + click.doc_id + "' absent from impression " +
                              impression.impression_id);
        }
    }
}

std::string ImpressionIdGenerator::next() {
    return prefix_ + std::to_string(next_.fetch_add(1));
}

void ImpressionIdGenerator::observe(std::string_view existing_id) {
    if (existing_id.substr(0, prefix_.size()) != prefix_) return;
    auto digits = existing_id.substr(prefix_.size());
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) return;
    std::uint64_t current = next_.load();
    while (current <= value && !next_.compare_exchange_weak(current, value + 1)) {
    }
}

SessionResolution SessionStore::resolve(const std::string& site_user, Timestamp now, Millis timeout) {
    if (timeout.count() <= 0) throw DomainError("session timeout must be positive");
    std::lock_guard lock(mutex_);
    auto it = open_.find(site_user);
    if (it != open_.end() && now >= it->second.last_activity && now - it->second.last_activity <= timeout) {
        it->second.last_activity = now;
        return {it->second.session_id, false, now};
    }
    // Out-of-order timestamps older than the open session also start a new
    // one; sessions of one user therefore never overlap.
    OpenSession fresh{prefix_ + std::to_string(next_++), now};
    open_[site_user] = fresh;
    return {fresh.session_id, true, now};
}

void SessionStore::restore(const std::string& site_user, const std::string& session_id, Timestamp last_activity) {
    std::lock_guard lock(mutex_);
    auto& slot = open_[site_user];
    if (slot.session_id.empty() || slot.last_activity <= last_activity) {
        slot = {session_id, last_activity};
    }
    if (session_id.rfind(prefix_, 0) == 0) {
        std::uint64_t value = 0;
        auto digits = std::string_view(session_id).substr(prefix_.size());
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec == std::errc{} && ptr == digits.data() + digits.size()) next_ = std::max(next_, value + 1);
    }
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return open_.size();
}

std::string resolve_session(const std::string& site_user, Timestamp now, SessionStore& store, Millis timeout) {
    return store.resolve(site_user, now, timeout).session_id;
}

}  // namespace livinglab
