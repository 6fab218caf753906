#pragma once

#include <ostream>
#include <string>

#include "icf/collab.hpp"
#include "icf/config.hpp"
#include "icf/gateway.hpp"

namespace icf {

struct RunResult {
    std::string run_dir;
    RunOutcome outcome;
};

/// Loads the dataset, runs the full collaboration pipeline, and writes the
/// run directory (manifest, events.log, reports/). `gateway_override` swaps
/// the backend (tests inject failures this way); by default backends come
/// from the profiles.
RunResult execute_run(const RunConfig& cfg, Gateway* gateway_override = nullptr,
                      std::ostream* progress = nullptr);

/// Continues an interrupted run. Completed generations are replayed from
/// the log instead of re-issued; the finished log and reports are
/// byte-identical to an uninterrupted run's.
RunResult resume_run(const std::string& run_dir, Gateway* gateway_override = nullptr,
                     std::ostream* progress = nullptr, int parallelism = 4);

/// Re-emits reports from the log alone; no generations are issued. Prints
/// the human-readable summary to `out` when given.
void report_run(const std::string& run_dir, std::ostream* out = nullptr);

/// Writes a self-contained offline demo (dataset, scripted behavior tables,
/// config) under `dir` and returns the config path. Three agents answer 30
/// five-choice questions; one agent dissents on twelve questions but yields
/// when it lacks teammate support, and one holds out forever on two, so the
/// run starts near 50% consensus and crosses the threshold in one round.
std::string write_demo_bundle(const std::string& dir);

}  // namespace icf
