#pragma once

#include <string>
#include <vector>

#include "tsobs/model.hpp"

namespace tsobs::fixtures {

// The two bundled demo plants, embedded so the CLI demo works from any
// working directory. The same documents ship as files under models/.
std::vector<std::string> bundled_model_names();
const std::string& bundled_model_text(const std::string& name);
TsDescriptorModel bundled_model(const std::string& name);

// Externally supplied certificates with fixed literature values, used as
// verifier diagnostics. Also shipped under models/ as *_reference.cert.
const std::string& reference_certificate_text(const std::string& name);

}  // namespace tsobs::fixtures
