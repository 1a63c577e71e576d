#pragma once

// Command dispatch for the gts tool. Exit codes: 0 affirmative/valid,
// 1 negative/absent/invalid proof, 2 input error, 3 resource bound
// exhausted.

#include <iostream>
#include <string>
#include <vector>

namespace gts::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gts::cli
