#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mtbudget/synthetic.hpp"

namespace mtb::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on runtime errors, 2 on argument errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `k=10,d=20,n=5000,relatedness=0.9,noise=0.1,seed=3,margin=0,shifts=500:0.3/900:0.1`
/// Unlisted keys keep their defaults; `seed` defaults to `default_seed`.
SyntheticConfig parse_synth_spec(const std::string& text, std::uint64_t default_seed);

}  // namespace mtb::cli
