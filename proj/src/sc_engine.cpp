#include "icf/sc_engine.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "icf/errors.hpp"
#include "icf/executor.hpp"

namespace icf {

namespace {

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Extracted extract_letter(const std::string& completion, char first, char last) {
    if (completion.empty()) return Extracted::invalid("empty completion");
    for (std::size_t i = 0; i < completion.size(); ++i) {
        const char c = completion[i];
        if (c < first || c > last) continue;
        const bool left_ok = i == 0 || !word_char(completion[i - 1]);
        const bool right_ok = i + 1 == completion.size() || !word_char(completion[i + 1]);
        if (left_ok && right_ok) return Extracted::ok(c);
    }
    return Extracted::invalid("no in-range letter");
}

std::optional<VoteResult> majority_vote(const std::vector<Extracted>& votes) {
    std::map<char, int> counts;
    for (const auto& v : votes) {
        if (v.valid()) ++counts[v.letter];
    }
    if (counts.empty()) return std::nullopt;
    VoteResult best;
    for (const auto& [letter, count] : counts) {  // ascending letters, so ties stay alphabetical
        if (count > best.count) {
            best.letter = letter;
            best.count = count;
        }
    }
    return best;
}

void to_json(nlohmann::json& j, const Extracted& e) {
    if (e.valid()) {
        j = std::string(1, e.letter);
    } else {
        j = nlohmann::json{{"invalid", e.reason}};
    }
}

void from_json(const nlohmann::json& j, Extracted& e) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s.size() != 1) throw ParseError("extracted letter must be a single character");
        e = Extracted::ok(s[0]);
    } else {
        e = Extracted::invalid(j.at("invalid").get<std::string>());
    }
}

void to_json(nlohmann::json& j, const Sample& s) {
    j = nlohmann::json{{"sample_index", s.sample_index}, {"reasoning", s.reasoning}, {"extracted", s.extracted}};
}

void from_json(const nlohmann::json& j, Sample& s) {
    j.at("sample_index").get_to(s.sample_index);
    j.at("reasoning").get_to(s.reasoning);
    j.at("extracted").get_to(s.extracted);
}

void to_json(nlohmann::json& j, const Prediction& p) {
    j = nlohmann::json{
        {"question_id", p.question_id},
        {"model_id", p.model_id},
        {"round", p.round},
        {"majority", p.majority ? nlohmann::json(std::string(1, *p.majority)) : nlohmann::json(nullptr)},
        {"vote_count", p.vote_count},
        {"n", p.n},
        {"samples", p.samples},
        {"summary", p.summary},
    };
}

void from_json(const nlohmann::json& j, Prediction& p) {
    j.at("question_id").get_to(p.question_id);
    j.at("model_id").get_to(p.model_id);
    j.at("round").get_to(p.round);
    if (j.at("majority").is_null()) {
        p.majority.reset();
    } else {
        const auto s = j.at("majority").get<std::string>();
        if (s.size() != 1) throw ParseError("majority must be a single letter");
        p.majority = s[0];
    }
    j.at("vote_count").get_to(p.vote_count);
    j.at("n").get_to(p.n);
    j.at("samples").get_to(p.samples);
    j.at("summary").get_to(p.summary);
}

void GenCollector::push(GenRecord record) {
    std::lock_guard lock(mutex_);
    records_.push_back(std::move(record));
}

std::vector<GenRecord> GenCollector::drain() {
    std::lock_guard lock(mutex_);
    return std::exchange(records_, {});
}

std::string generate_cached(const EngineContext& ctx, const ModelProfile& profile, const RenderedPrompt& prompt,
                            const GenerationKey& key) {
    if (ctx.cache) {
        if (const std::string* hit = ctx.cache->find(key)) {
            if (ctx.collector) ctx.collector->push({key, *hit, {}, 1, true});
            return *hit;
        }
    }
    GenerationResult result = ctx.gateway->generate(profile, prompt, key);
    if (ctx.collector) {
        ctx.collector->push({key, result.completion, result.latency, result.attempt_count, false});
    }
    return result.completion;
}

std::string summarize(const EngineContext& ctx, char majority, const std::vector<std::string>& reasonings,
                      const ModelProfile& summarizer, const std::string& question_id,
                      const std::string& participant_id, int round) {
    const GenerationKey key{question_id, participant_id, round, 0, GenerationStage::summary};
    const RenderedPrompt prompt = ctx.forge->summary(majority, reasonings, summarizer.dialect_id);
    return trim(generate_cached(ctx, summarizer, prompt, key));
}

Prediction run_zscot_sc(const EngineContext& ctx, const Question& q, const ModelProfile& participant, int n,
                        const ModelProfile& summarizer, const ScMode& mode, bool summarize_all_samples) {
    if (n < 1) throw EngineError("sample count must be at least 1");

    Prediction pred;
    pred.question_id = q.id;
    pred.model_id = participant.model_id;
    pred.n = n;
    pred.samples.resize(static_cast<std::size_t>(n));

    const auto* review = std::get_if<ReviewMode>(&mode);
    pred.round = review ? review->round : 0;

    parallel_for(static_cast<std::size_t>(n), ctx.parallelism, [&](std::size_t i) {
        const int index = static_cast<int>(i);
        Sample& sample = pred.samples[i];
        sample.sample_index = index;
        if (review) {
            const GenerationKey key{q.id, participant.model_id, review->round, index, GenerationStage::review};
            const auto prompt = ctx.forge->review(q, review->transcript, participant.dialect_id);
            sample.reasoning = generate_cached(ctx, participant, prompt, key);
            sample.extracted = extract_letter(sample.reasoning, q.first_letter(), q.last_letter());
        } else {
            const GenerationKey rkey{q.id, participant.model_id, 0, index, GenerationStage::reasoning};
            sample.reasoning =
                generate_cached(ctx, participant, ctx.forge->reasoning(q, participant.dialect_id), rkey);
            const GenerationKey akey{q.id, participant.model_id, 0, index, GenerationStage::answer};
            const auto answer =
                generate_cached(ctx, participant, ctx.forge->answer(q, sample.reasoning, participant.dialect_id), akey);
            sample.extracted = extract_letter(answer, q.first_letter(), q.last_letter());
        }
    });

    std::vector<Extracted> votes;
    votes.reserve(pred.samples.size());
    for (const auto& s : pred.samples) votes.push_back(s.extracted);

    if (const auto winner = majority_vote(votes)) {
        pred.majority = winner->letter;
        pred.vote_count = winner->count;
        std::vector<std::string> reasonings;
        for (const auto& s : pred.samples) {
            if (summarize_all_samples || (s.extracted.valid() && s.extracted.letter == winner->letter)) {
                reasonings.push_back(s.reasoning);
            }
        }
        pred.summary =
            summarize(ctx, winner->letter, reasonings, summarizer, q.id, participant.model_id, pred.round);
    }
    return pred;
}

}  // namespace icf
