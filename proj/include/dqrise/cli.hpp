#pragma once

#include <string>
#include <vector>

#include "dqrise/codebook.hpp"
#include "dqrise/corpus.hpp"

namespace dqrise {

// Returns a process exit code: 0 success, 1 usage error, 2 data/validation error.
int cli_dispatch(int argc, const char* const* argv);
int cli_dispatch(const std::vector<std::string>& args);  // args without program name

// CSV with one row per codebook entry (kind=code, sorted by rank) followed by
// one row per dataset hand state (kind=data, dataset order). Columns pc1/pc2
// are projections onto the top two principal axes of the dataset hand states.
std::string plot_csv(const ReindexedCodebook& cb, const std::vector<Hand>& hands);

}  // namespace dqrise
