#pragma once

#include <json.hpp>

#include "novelty/domain.hpp"

namespace novelty {

using json = nlohmann::json;

json to_json(const Paper& paper);
Paper paper_from_json(const json& j);

json to_json(const Idea& idea);
Idea idea_from_json(const json& j);

json to_json(const CandidatePool& pool);
CandidatePool pool_from_json(const json& j);

json to_json(const RankedList& list);
RankedList ranked_list_from_json(const json& j);

json to_json(const PipelineConfig& cfg);

json to_json(const LabeledExample& example);

/// Canonical serialization used for digests: sorted keys, no whitespace.
std::string canonical_dump(const json& j);

}  // namespace novelty
