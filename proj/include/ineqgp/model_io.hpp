#pragma once

#include <string>

#include "ineqgp/emulator.hpp"

namespace ineqgp {

// Versioned JSON model files. Doubles are stored with shortest round-trip
// formatting, so save/load reproduces predictions exactly up to the arithmetic
// of rebuilding derived matrices. Loading a file with an unknown
// format_version fails with an explicit error.
void save_model(const EmulatorModel& model, const std::string& path);
EmulatorModel load_model(const std::string& path);

std::string model_to_json(const EmulatorModel& model);
EmulatorModel model_from_json(const std::string& text);

}  // namespace ineqgp
