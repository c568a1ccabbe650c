#pragma once

#include "ctxem/mixture.hpp"

#include <json.hpp>

namespace ctxem {

// {"family": ..., "weights": [...], "components": [{...}, ...]}
nlohmann::json mixture_to_json(const MixtureSpec& m);
MixtureSpec mixture_from_json(const nlohmann::json& j);

}  // namespace ctxem
