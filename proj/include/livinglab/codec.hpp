#pragma once

// JSON encodings of the domain types as they appear in the feedback log and
// on the gateway wire.

#include <json.hpp>

#include "livinglab/model.hpp"

namespace livinglab {

using Json = nlohmann::json;

Json interleaved_to_json(const InterleavedList& list);
InterleavedList interleaved_from_json(const Json& body, std::string exp_system, std::string base_system);

/// Log record {"type":"impression", ...}.
Json impression_to_json(const Impression& impression);
Impression impression_from_json(const Json& record);

/// Wire and log form {"impression_id": ..., "clicks": [{"docid","element","ts"}]}.
/// Clicks without "ts" take `default_ts`.
Json feedback_to_json(const FeedbackEvent& feedback);
FeedbackEvent feedback_from_json(const Json& payload, Timestamp default_ts = {});

Json session_to_json(const std::string& session_id, const std::string& site_user, Timestamp start);

Json document_to_json(const DocumentRecord& doc, std::string_view id_field);

}  // namespace livinglab
