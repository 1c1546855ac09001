#pragma once

#include <map>
#include <string>

namespace citgan {

inline constexpr const char* kVersion = "0.1.0";

/// Per-module format/behaviour versions recorded in run.json.
inline std::map<std::string, std::string> module_versions() {
  return {{"citgan", kVersion},  {"checkpoint", "1"}, {"manifest", "1"}, {"trainer", "1"},
          {"translate", "1"},    {"fid", "1"},        {"pad", "1"},      {"config", "1"}};
}

}  // namespace citgan
