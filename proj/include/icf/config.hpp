#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icf/collab.hpp"
#include "icf/gateway.hpp"

namespace icf {

struct RunConfig {
    std::string dataset;
    std::vector<ModelProfile> participants;
    ModelProfile summarizer;
    LoopConfig loop;
    std::uint64_t seed = 0;
    std::string out_dir;
    int parallelism = 1;
};

/// Parses and validates a run configuration file. Relative paths in it
/// (dataset, output directory, scripted behavior files) resolve against the
/// config file's directory. Participant/summarizer roles are implied by
/// position and need not be spelled in the file.
RunConfig load_run_config(const std::string& path);

/// Same checks for configs assembled in memory.
void validate_run_config(const RunConfig& cfg);

}  // namespace icf
