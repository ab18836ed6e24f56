#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hrom {

/// Runs one `hrom` subcommand (collect, train, eval, roa, lemmas).
/// Returns 0 on success, 1 on invalid input or configuration, 2 on a
/// runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace hrom
