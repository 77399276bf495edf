#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <thread>

#include "livinglab/systems.hpp"

namespace livinglab::testing {

inline SystemDescriptor describe(std::string name, Task task, bool baseline,
                                 SystemKind kind = SystemKind::BuiltinBaseline) {
    return {std::move(name), kind, task, baseline, ""};
}

/// Answers every request with the same ranked ids (paged), optionally slowly
/// or not at all.
class StubSystem final : public SystemAdapter {
public:
    StubSystem(SystemDescriptor d, std::vector<std::string> ids) : descriptor_(std::move(d)), ids_(std::move(ids)) {}

    const SystemDescriptor& descriptor() const override { return descriptor_; }

    SystemResponse respond(const SystemRequest& request) override {
        ++calls;
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        if (fail) throw std::runtime_error("stub failure");
        SystemResponse r;
        if (silent) return r;
        std::vector<RankedResult> all;
        for (std::size_t i = 0; i < ids_.size(); ++i) all.push_back({ids_[i], static_cast<int>(i) + 1, 1.0});
        r.responded = true;
        r.num_found = static_cast<std::int64_t>(all.size());
        r.results = page_slice(all, request.page, request.rpp);
        return r;
    }

    std::chrono::milliseconds delay{0};
    bool silent = false;
    bool fail = false;
    std::atomic<int> calls{0};

private:
    SystemDescriptor descriptor_;
    std::vector<std::string> ids_;
};

inline std::vector<std::string> numbered(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

}  // namespace livinglab::testing
