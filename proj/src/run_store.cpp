#include "icf/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "icf/errors.hpp"

namespace fs = std::filesystem;

namespace icf {

void to_json(nlohmann::json& j, const RunManifest& m) {
    j = nlohmann::json{
        {"run_id", m.run_id},
        {"dataset_path", m.dataset_path},
        {"dataset_digest", m.dataset_digest},
        {"participants", m.participants},
        {"summarizer", m.summarizer},
        {"loop", m.loop},
        {"seed", m.seed},
        {"created_at", m.created_at},
    };
}

void from_json(const nlohmann::json& j, RunManifest& m) {
    j.at("run_id").get_to(m.run_id);
    j.at("dataset_path").get_to(m.dataset_path);
    j.at("dataset_digest").get_to(m.dataset_digest);
    j.at("participants").get_to(m.participants);
    j.at("summarizer").get_to(m.summarizer);
    j.at("loop").get_to(m.loop);
    j.at("seed").get_to(m.seed);
    j.at("created_at").get_to(m.created_at);
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::generation: return "generation";
        case EventKind::prediction: return "prediction";
        case EventKind::partition: return "partition";
        case EventKind::termination: return "termination";
    }
    return "unknown";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "generation") return EventKind::generation;
    if (s == "prediction") return EventKind::prediction;
    if (s == "partition") return EventKind::partition;
    if (s == "termination") return EventKind::termination;
    throw ParseError("unknown event kind '" + s + "'");
}

void to_json(nlohmann::json& j, const RunEvent& e) {
    j = nlohmann::json{{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
}

void from_json(const nlohmann::json& j, RunEvent& e) {
    j.at("seq").get_to(e.seq);
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
}

namespace {

std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string prediction_slot(const std::string& qid, const std::string& model, int round) {
    return qid + '\x1f' + model + '\x1f' + std::to_string(round);
}

}  // namespace

RunStore::RunStore(std::string dir, RunManifest manifest)
    : dir_(std::move(dir)), manifest_(std::move(manifest)) {}

std::unique_ptr<RunStore> RunStore::create(const std::string& dir, const RunManifest& manifest) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "reports", ec);
    if (ec) throw IoError("cannot create run directory '" + dir + "': " + ec.message());
    if (fs::exists(fs::path(dir) / "events.log")) {
        throw StoreError("'" + dir + "' already holds a run; use resume");
    }

    auto store = std::unique_ptr<RunStore>(new RunStore(dir, manifest));
    if (store->manifest_.created_at.empty()) store->manifest_.created_at = iso_utc_now();

    std::ofstream mf(fs::path(dir) / "manifest", std::ios::binary | std::ios::trunc);
    if (!mf) throw IoError("cannot write manifest in '" + dir + "'");
    mf << nlohmann::json(store->manifest_).dump(2) << "\n";
    mf.flush();
    if (!mf) throw IoError("manifest write failed in '" + dir + "'");

    store->events_.open(fs::path(dir) / "events.log", std::ios::binary | std::ios::app);
    if (!store->events_) throw IoError("cannot open events.log in '" + dir + "'");
    store->timings_.open(fs::path(dir) / "timings.log", std::ios::binary | std::ios::app);
    return store;
}

std::unique_ptr<RunStore> RunStore::open(const std::string& dir) {
    const fs::path manifest_path = fs::path(dir) / "manifest";
    std::ifstream mf(manifest_path, std::ios::binary);
    if (!mf) throw IoError("cannot read '" + manifest_path.string() + "'");
    std::ostringstream mbuf;
    mbuf << mf.rdbuf();

    RunManifest manifest;
    try {
        manifest = nlohmann::json::parse(mbuf.str()).get<RunManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw StoreError("manifest in '" + dir + "' is corrupt: " + e.what());
    }

    auto store = std::unique_ptr<RunStore>(new RunStore(dir, std::move(manifest)));
    store->scan_log();
    store->events_.open(fs::path(dir) / "events.log", std::ios::binary | std::ios::app);
    if (!store->events_) throw IoError("cannot open events.log in '" + dir + "'");
    store->timings_.open(fs::path(dir) / "timings.log", std::ios::binary | std::ios::app);
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "reports", ec);
    return store;
}

void RunStore::scan_log() {
    const fs::path log_path = fs::path(dir_) / "events.log";
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + log_path.string() + "'");

    std::string line;
    std::uintmax_t good_bytes = 0;
    bool partial_tail = false;
    while (std::getline(in, line)) {
        const bool had_newline = !in.eof();
        RunEvent event;
        try {
            event = nlohmann::json::parse(line).get<RunEvent>();
        } catch (const nlohmann::json::exception& e) {
            if (!had_newline) {
                partial_tail = true;  // crash mid-write; drop the torn record
                break;
            }
            throw StoreError("events.log record " + std::to_string(next_seq_) + " is corrupt: " + e.what());
        }
        if (!had_newline) {
            // A parseable but newline-less tail is still a torn write.
            partial_tail = true;
            break;
        }
        if (event.seq != next_seq_) {
            throw StoreError("events.log sequence gap: expected " + std::to_string(next_seq_) + ", found " +
                             std::to_string(event.seq));
        }
        switch (event.kind) {
            case EventKind::generation: {
                const GenerationKey key = event.payload.at("key").get<GenerationKey>();
                seen_generations_.insert(key.cache_token());
                break;
            }
            case EventKind::prediction: {
                const auto qid = event.payload.at("question_id").get<std::string>();
                const auto model = event.payload.at("model_id").get<std::string>();
                const int round = event.payload.at("round").get<int>();
                seen_predictions_.insert(prediction_slot(qid, model, round));
                break;
            }
            case EventKind::partition:
                seen_partitions_.insert(event.payload.at("round").get<int>());
                break;
            case EventKind::termination:
                seen_termination_ = true;
                break;
        }
        ++next_seq_;
        good_bytes += static_cast<std::uintmax_t>(line.size()) + 1;
    }
    in.close();
    if (partial_tail) {
        fs::resize_file(log_path, good_bytes);
    }
}

void RunStore::write_line(const nlohmann::json& line) {
    events_ << line.dump() << "\n";
    events_.flush();
    if (!events_) throw StoreError("write to events.log failed in '" + dir_ + "'");
}

void RunStore::append_unlocked(EventKind kind, nlohmann::json payload) {
    RunEvent event;
    event.seq = next_seq_;
    event.kind = kind;
    event.payload = std::move(payload);
    write_line(nlohmann::json(event));
    ++next_seq_;
}

void RunStore::append_event(const RunEvent& event) {
    std::lock_guard lock(mutex_);
    if (event.seq != next_seq_) {
        if (event.seq < next_seq_) {
            throw StoreError("duplicate append at sequence " + std::to_string(event.seq));
        }
        throw StoreError("sequence gap: next is " + std::to_string(next_seq_) + ", got " +
                         std::to_string(event.seq));
    }
    write_line(nlohmann::json(event));
    ++next_seq_;
}

void RunStore::round_complete(int round, std::vector<GenRecord> generations, std::vector<Prediction> predictions,
                              const RoundPartition& partition) {
    std::lock_guard lock(mutex_);
    for (const auto& rec : generations) {
        if (!seen_generations_.insert(rec.key.cache_token()).second) continue;
        append_unlocked(EventKind::generation,
                        nlohmann::json{{"key", rec.key}, {"completion", rec.completion}});
        if (!rec.from_cache && timings_) {
            timings_ << nlohmann::json{{"at", iso_utc_now()},
                                       {"attempts", rec.attempt_count},
                                       {"key", rec.key},
                                       {"latency_ms", rec.latency.count()}}
                            .dump()
                     << "\n";
            timings_.flush();
        }
    }
    for (const auto& pred : predictions) {
        if (!seen_predictions_.insert(prediction_slot(pred.question_id, pred.model_id, pred.round)).second) {
            continue;
        }
        append_unlocked(EventKind::prediction, nlohmann::json(pred));
    }
    if (seen_partitions_.insert(round).second) {
        append_unlocked(EventKind::partition, nlohmann::json(partition));
    }
}

void RunStore::run_terminated(Termination termination, int rounds) {
    std::lock_guard lock(mutex_);
    if (seen_termination_) return;
    seen_termination_ = true;
    append_unlocked(EventKind::termination,
                    nlohmann::json{{"reason", to_string(termination)}, {"rounds", rounds}});
}

ReplayState RunStore::replay() const {
    const fs::path log_path = fs::path(dir_) / "events.log";
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + log_path.string() + "'");

    ReplayState state;
    std::map<int, RoundPartition> partitions;
    std::string line;
    std::uint64_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RunEvent event;
        try {
            event = nlohmann::json::parse(line).get<RunEvent>();
        } catch (const nlohmann::json::exception& e) {
            if (in.eof()) break;  // torn tail, same rule as scan_log
            throw StoreError("events.log record " + std::to_string(expected) + " is corrupt: " + e.what());
        }
        if (event.seq != expected) {
            throw StoreError("events.log sequence gap at " + std::to_string(expected));
        }
        ++expected;
        switch (event.kind) {
            case EventKind::generation: {
                const GenerationKey key = event.payload.at("key").get<GenerationKey>();
                state.cache.put(key, event.payload.at("completion").get<std::string>());
                break;
            }
            case EventKind::prediction: {
                Prediction pred = event.payload.get<Prediction>();
                auto round = pred.round;
                auto qid = pred.question_id;
                auto model = pred.model_id;
                state.predictions[round][std::move(qid)].insert_or_assign(std::move(model), std::move(pred));
                break;
            }
            case EventKind::partition: {
                RoundPartition part = event.payload.get<RoundPartition>();
                partitions.insert_or_assign(part.round, std::move(part));
                break;
            }
            case EventKind::termination:
                state.termination = termination_from_string(event.payload.at("reason").get<std::string>());
                state.termination_rounds = event.payload.at("rounds").get<int>();
                break;
        }
    }
    int next_round = 0;
    for (auto& [round, part] : partitions) {
        if (round != next_round) {
            throw StoreError("events.log is missing the partition for round " + std::to_string(next_round));
        }
        state.partitions.push_back(std::move(part));
        ++next_round;
    }
    return state;
}

RunOutcome RunStore::reconstruct_outcome() const {
    ReplayState state = replay();
    if (state.partitions.empty()) {
        throw StoreError("run in '" + dir_ + "' has no completed rounds to report");
    }
    RunOutcome outcome;
    outcome.predictions = std::move(state.predictions);
    outcome.partitions = std::move(state.partitions);
    if (state.termination) {
        outcome.termination = *state.termination;
        outcome.complete = true;
    } else {
        outcome.termination = Termination::round_cap_reached;
        outcome.complete = false;
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct StepShare {
    int step = 0;
    int questions = 0;
    double initial = 0.0;
    double final_rate = 0.0;
};

/// Per-step and pooled consensus rates at the first and last partition.
std::vector<StepShare> consensus_by_step(const RunOutcome& outcome, const QuestionSet& qs) {
    std::map<int, StepShare> by_step;
    const auto& first = outcome.partitions.front();
    const auto& last = outcome.partitions.back();
    for (const auto& q : qs.questions) {
        auto& share = by_step[q.step];
        share.step = q.step;
        ++share.questions;
        if (first.consensus_ids.count(q.id)) share.initial += 1.0;
        if (last.consensus_ids.count(q.id)) share.final_rate += 1.0;
    }
    std::vector<StepShare> rows;
    StepShare pooled;
    pooled.step = 0;  // "average" row
    for (auto& [step, share] : by_step) {
        pooled.questions += share.questions;
        pooled.initial += share.initial;
        pooled.final_rate += share.final_rate;
        share.initial = 100.0 * share.initial / share.questions;
        share.final_rate = 100.0 * share.final_rate / share.questions;
        rows.push_back(share);
    }
    pooled.initial = 100.0 * pooled.initial / pooled.questions;
    pooled.final_rate = 100.0 * pooled.final_rate / pooled.questions;
    rows.push_back(pooled);
    return rows;
}

std::string scope_name(int step) { return step == 0 ? "average" : "step" + std::to_string(step); }

}  // namespace

std::string render_consensus_csv(const RunOutcome& outcome, const QuestionSet& qs) {
    if (outcome.partitions.empty()) throw StoreError("no partitions to report");
    std::string out = "scope,questions,initial_pcon,final_pcon,delta\n";
    for (const auto& row : consensus_by_step(outcome, qs)) {
        out += scope_name(row.step) + "," + std::to_string(row.questions) + "," + fixed2(row.initial) + "," +
               fixed2(row.final_rate) + "," + fixed2(row.final_rate - row.initial) + "\n";
    }
    return out;
}

std::string render_accuracy_csv(const MetricsBundle& metrics) {
    std::string out = "model,scope,questions,initial,post_collaboration,delta\n";
    for (std::size_t i = 0; i < metrics.accuracy_initial.size(); ++i) {
        const auto& initial = metrics.accuracy_initial[i];
        const auto& final_rep = metrics.accuracy_final[i];
        for (const auto& [step, cell] : initial.per_step) {
            const auto& final_cell = final_rep.per_step.at(step);
            out += initial.model_id + "," + scope_name(step) + "," + std::to_string(cell.total) + "," +
                   fixed2(cell.percent()) + "," + fixed2(final_cell.percent()) + "," +
                   fixed2(final_cell.percent() - cell.percent()) + "\n";
        }
        out += initial.model_id + ",average," + std::to_string(initial.overall.total) + "," +
               fixed2(initial.overall.percent()) + "," + fixed2(final_rep.overall.percent()) + "," +
               fixed2(final_rep.overall.percent() - initial.overall.percent()) + "\n";
    }
    return out;
}

std::string render_confidence_csv(const MetricsBundle& metrics) {
    std::string out = "metric";
    for (const auto& c : metrics.confidences) out += "," + c.model_id;
    out += "\ninsist_without_support";
    for (const auto& c : metrics.confidences) {
        out += ",";
        out += c.without_support_defined ? fixed2(100.0 * c.insist_without_support) : "n/a";
    }
    out += "\ninsist_with_support";
    for (const auto& c : metrics.confidences) {
        out += ",";
        out += c.with_support_defined ? fixed2(100.0 * c.insist_with_support) : "n/a";
    }
    out += "\nconfidence";
    for (const auto& c : metrics.confidences) out += "," + fixed2(c.confidence);
    out += "\n";
    return out;
}

std::string render_consistency_csv(const MetricsBundle& metrics) {
    std::string out = "stage,metric,";
    {
        std::string models;
        for (const auto& r : metrics.consistency_initial) {
            if (!models.empty()) models += ",";
            models += r.model_id;
        }
        out += models + "\n";
    }
    const auto emit_stage = [&out](const char* stage, const std::vector<ConsistencyReport>& rows) {
        out += std::string(stage) + ",when_correct";
        for (const auto& r : rows) out += "," + (r.correct_defined ? fixed2(r.avg_correct) : std::string("n/a"));
        out += "\n" + std::string(stage) + ",when_incorrect";
        for (const auto& r : rows)
            out += "," + (r.incorrect_defined ? fixed2(r.avg_incorrect) : std::string("n/a"));
        out += "\n" + std::string(stage) + ",difference";
        for (const auto& r : rows) {
            out += "," + (r.correct_defined && r.incorrect_defined ? fixed2(r.difference) : std::string("n/a"));
        }
        out += "\n" + std::string(stage) + ",overall";
        for (const auto& r : rows) out += "," + fixed2(r.overall);
        out += "\n";
    };
    emit_stage("initial", metrics.consistency_initial);
    emit_stage("post_collaboration", metrics.consistency_final);
    return out;
}

namespace {

void append_table(std::string& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    for (const auto& row : rows) {
        out += "  ";
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            if (i + 1 < row.size()) out += std::string(widths[i] - row[i].size() + 2, ' ');
        }
        out += "\n";
    }
}

}  // namespace

std::string render_summary_text(const RunManifest& manifest, const RunOutcome& outcome, const QuestionSet& qs,
                                const MetricsBundle* metrics) {
    std::string out;
    out += "run " + manifest.run_id + "\n";
    const std::string basename = fs::path(manifest.dataset_path).filename().string();
    out += "dataset " + basename + " (sha256 " + manifest.dataset_digest.substr(0, 8) + ", " +
           std::to_string(qs.size()) + " questions)\n";
    out += "participants:";
    for (const auto& p : manifest.participants) out += " " + p.model_id;
    out += "; summarizer: " + manifest.summarizer.model_id + "\n";
    out += "seed " + std::to_string(manifest.seed) + "; threshold " + fixed2(manifest.loop.threshold) +
           "%; n " + std::to_string(manifest.loop.n) + "; max rounds " +
           std::to_string(manifest.loop.max_rounds) + "\n";
    if (outcome.complete) {
        out += std::string("status: ") +
               (outcome.termination == Termination::threshold_met ? "consensus threshold met"
                                                                  : "round cap reached") +
               " after " + std::to_string(outcome.collaboration_rounds()) + " collaboration round(s)\n";
    } else {
        out += "status: in progress (" + std::to_string(outcome.collaboration_rounds()) +
               " collaboration round(s) logged)\n";
    }

    out += "\nConsensus convergence\n";
    {
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"scope", "questions", "initial", "final", "delta"});
        for (const auto& row : consensus_by_step(outcome, qs)) {
            rows.push_back({scope_name(row.step), std::to_string(row.questions), fixed2(row.initial),
                            fixed2(row.final_rate), fixed2(row.final_rate - row.initial)});
        }
        append_table(out, rows);
    }

    if (!metrics) {
        out += "\nanswer keys absent: accuracy, confidence, and consistency are not computable\n";
        return out;
    }

    out += "\nAccuracy (% correct; abstentions count as wrong)\n";
    {
        std::vector<std::vector<std::string>> rows;
        rows.push_back({"model", "scope", "questions", "initial", "final", "delta"});
        for (std::size_t i = 0; i < metrics->accuracy_initial.size(); ++i) {
            const auto& initial = metrics->accuracy_initial[i];
            const auto& final_rep = metrics->accuracy_final[i];
            for (const auto& [step, cell] : initial.per_step) {
                const auto& fc = final_rep.per_step.at(step);
                rows.push_back({initial.model_id, scope_name(step), std::to_string(cell.total),
                                fixed2(cell.percent()), fixed2(fc.percent()),
                                fixed2(fc.percent() - cell.percent())});
            }
            rows.push_back({initial.model_id, "average", std::to_string(initial.overall.total),
                            fixed2(initial.overall.percent()), fixed2(final_rep.overall.percent()),
                            fixed2(final_rep.overall.percent() - initial.overall.percent())});
        }
        append_table(out, rows);
    }

    if (!metrics->confidences.empty()) {
        out += "\nConfidence (insist rates over initially disagreed questions)\n";
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header{"metric"};
        for (const auto& c : metrics->confidences) header.push_back(c.model_id);
        rows.push_back(header);
        std::vector<std::string> row{"insist w/o support (%)"};
        for (const auto& c : metrics->confidences) {
            row.push_back(c.without_support_defined ? fixed2(100.0 * c.insist_without_support) : "n/a");
        }
        rows.push_back(row);
        row = {"insist w/ support (%)"};
        for (const auto& c : metrics->confidences) {
            row.push_back(c.with_support_defined ? fixed2(100.0 * c.insist_with_support) : "n/a");
        }
        rows.push_back(row);
        row = {"confidence"};
        for (const auto& c : metrics->confidences) row.push_back(fixed2(c.confidence));
        rows.push_back(row);
        append_table(out, rows);
    } else if (outcome.collaboration_rounds() < 1) {
        out += "\nconfidence: not computable without a collaboration round\n";
    }

    out += "\nConsistency (majority vote counts, n = " + std::to_string(manifest.loop.n) + ")\n";
    {
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header{"stage", "metric"};
        for (const auto& r : metrics->consistency_initial) header.push_back(r.model_id);
        rows.push_back(header);
        const auto add_stage = [&rows](const char* stage, const std::vector<ConsistencyReport>& reports) {
            std::vector<std::string> row{stage, "when correct"};
            for (const auto& r : reports) row.push_back(r.correct_defined ? fixed2(r.avg_correct) : "n/a");
            rows.push_back(row);
            row = {stage, "when incorrect"};
            for (const auto& r : reports) row.push_back(r.incorrect_defined ? fixed2(r.avg_incorrect) : "n/a");
            rows.push_back(row);
            row = {stage, "difference"};
            for (const auto& r : reports) {
                row.push_back(r.correct_defined && r.incorrect_defined ? fixed2(r.difference) : "n/a");
            }
            rows.push_back(row);
            row = {stage, "overall (share)"};
            for (const auto& r : reports) row.push_back(fixed2(r.overall));
            rows.push_back(row);
        };
        add_stage("initial", metrics->consistency_initial);
        add_stage("final", metrics->consistency_final);
        append_table(out, rows);
    }

    if (metrics->confidence_gain_spearman) {
        out += "\nSpearman rank correlation, confidence vs accuracy gain: " +
               fixed2(*metrics->confidence_gain_spearman) + "\n";
    }
    return out;
}

void RunStore::emit_reports(const RunOutcome& outcome, const QuestionSet& qs, const MetricsBundle* metrics) {
    if (outcome.partitions.empty()) throw StoreError("nothing to report: run has no completed rounds");
    const fs::path reports = fs::path(dir_) / "reports";
    std::error_code ec;
    fs::create_directories(reports, ec);
    if (ec) throw IoError("cannot create '" + reports.string() + "': " + ec.message());

    const auto write_file = [&reports](const char* name, const std::string& content) {
        std::ofstream out(reports / name, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(std::string("cannot write report '") + name + "'");
        out << content;
        out.flush();
        if (!out) throw IoError(std::string("report write failed for '") + name + "'");
    };

    write_file("consensus_convergence.csv", render_consensus_csv(outcome, qs));
    if (metrics) {
        write_file("accuracy.csv", render_accuracy_csv(*metrics));
        if (!metrics->confidences.empty()) write_file("confidence.csv", render_confidence_csv(*metrics));
        write_file("consistency.csv", render_consistency_csv(*metrics));
    }
    write_file("summary.txt", render_summary_text(manifest_, outcome, qs, metrics));
}

}  // namespace icf
