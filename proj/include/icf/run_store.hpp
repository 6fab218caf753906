#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icf/collab.hpp"
#include "icf/gateway.hpp"
#include "icf/metrics.hpp"

namespace icf {

struct RunManifest {
    std::string run_id;
    std::string dataset_path;    // absolute
    std::string dataset_digest;  // SHA-256 of the dataset file bytes
    std::vector<ModelProfile> participants;
    ModelProfile summarizer;
    LoopConfig loop;
    std::uint64_t seed = 0;
    std::string created_at;  // informational; never part of determinism checks
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

enum class EventKind { generation, prediction, partition, termination };

const char* to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& s);

struct RunEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::generation;
    nlohmann::json payload;
};

void to_json(nlohmann::json& j, const RunEvent& e);
void from_json(const nlohmann::json& j, RunEvent& e);

/// Engine state recovered from a log: everything needed to continue a run
/// without repeating completed generations.
struct ReplayState {
    GenerationCache cache;
    std::map<int, RoundPredictions> predictions;
    std::vector<RoundPartition> partitions;
    std::optional<Termination> termination;
    std::optional<int> termination_rounds;
};

/// One run directory: `manifest`, append-only `events.log`, `timings.log`
/// (latency side channel, excluded from determinism), and `reports/`.
class RunStore : public RoundSink {
public:
    static std::unique_ptr<RunStore> create(const std::string& dir, const RunManifest& manifest);
    static std::unique_ptr<RunStore> open(const std::string& dir);

    const RunManifest& manifest() const { return manifest_; }
    const std::string& dir() const { return dir_; }
    std::uint64_t event_count() const { return next_seq_; }

    /// Strict append: event.seq must equal the current log length.
    void append_event(const RunEvent& event);

    /// Barrier appends, idempotent per logical record: generations already
    /// in the log (by key), predictions (by question/model/round), and
    /// partitions (by round) are skipped, which keeps a resumed log
    /// byte-identical to an uninterrupted one.
    void round_complete(int round, std::vector<GenRecord> generations, std::vector<Prediction> predictions,
                        const RoundPartition& partition) override;
    void run_terminated(Termination termination, int rounds) override;

    /// Re-reads the log from disk.
    ReplayState replay() const;
    /// RunOutcome view of the log; outcome.complete reflects whether the
    /// termination event was written.
    RunOutcome reconstruct_outcome() const;

    /// Writes reports/ from the outcome. Pass metrics = nullptr for keyless
    /// datasets; the consensus table and summary still appear, with a note.
    void emit_reports(const RunOutcome& outcome, const QuestionSet& qs, const MetricsBundle* metrics);

private:
    RunStore(std::string dir, RunManifest manifest);
    void scan_log();
    void write_line(const nlohmann::json& line);
    void append_unlocked(EventKind kind, nlohmann::json payload);

    std::string dir_;
    RunManifest manifest_;
    std::uint64_t next_seq_ = 0;
    std::set<std::string> seen_generations_;
    std::set<std::string> seen_predictions_;
    std::set<int> seen_partitions_;
    bool seen_termination_ = false;
    std::ofstream events_;
    std::ofstream timings_;
    std::mutex mutex_;
};

// Report renderers, pure over their inputs so fixtures can pin exact bytes.
std::string render_consensus_csv(const RunOutcome& outcome, const QuestionSet& qs);
std::string render_accuracy_csv(const MetricsBundle& metrics);
std::string render_confidence_csv(const MetricsBundle& metrics);
std::string render_consistency_csv(const MetricsBundle& metrics);
std::string render_summary_text(const RunManifest& manifest, const RunOutcome& outcome, const QuestionSet& qs,
                                const MetricsBundle* metrics);

}  // namespace icf
