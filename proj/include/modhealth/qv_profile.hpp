#pragma once

#include <string>
#include <vector>

#include "modhealth/common.hpp"

namespace modhealth {

// One measured or simulated constant-current charge: charged capacity vs
// terminal voltage, plus the charging-condition metadata carried into feature
// extraction.
struct QVProfile {
  struct Sample {
    double capacity_ah = 0.0;
    double voltage_v = 0.0;
  };

  std::vector<Sample> samples;
  double c_rate = 0.0;
  double temperature_c = 25.0;
  std::string module_id;

  void validate() const {
    if (samples.size() < 50) throw InputError("QVProfile: need at least 50 samples");
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (samples[i].capacity_ah < samples[i - 1].capacity_ah) {
        throw InputError("QVProfile: capacity must be nondecreasing");
      }
      if (samples[i].voltage_v < samples[i - 1].voltage_v) {
        throw InputError("QVProfile: voltage must be nondecreasing in the CC window");
      }
    }
  }
};

}  // namespace modhealth
