#pragma once

// Versioned single-file JSON persistence for trained models.

#include <string>

#include "slp/pipeline.hpp"

namespace slp {

inline constexpr int kModelFormatVersion = 1;

void save_model(const TrainedModel& model, const std::string& path);

// Throws on unreadable/corrupt files and on format-version mismatch.
TrainedModel load_model(const std::string& path);

}  // namespace slp
