#pragma once

#include "trapablate/scenario.hpp"

#include <string>

namespace trapablate::test {

inline std::string scenario_path(const std::string& name) {
    return std::string(TRAPABLATE_SCENARIO_DIR) + "/" + name;
}

/// The golden scenario, parsed once per process.
inline const Scenario& golden() {
    static const Scenario s = load_scenario(scenario_path("golden.json"));
    return s;
}

} // namespace trapablate::test
