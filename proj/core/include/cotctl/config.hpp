#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cotctl/control.hpp"
#include "cotctl/http_policy.hpp"

namespace cotctl {

struct ToyConfig {
  int max_len = 256;
  std::string checkpoint;  // optional path to a saved policy
};

/// Everything a run reads from the `--config` document. Absent sections
/// keep their defaults; unknown keys are rejected.
struct RunConfig {
  control::ControlConfig control;
  policy::ExternalModelConfig model;
  ToyConfig toy;
};

RunConfig parse_run_config(std::string_view json);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

}  // namespace cotctl
