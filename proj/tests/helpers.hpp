#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "icf/dataset.hpp"
#include "icf/errors.hpp"
#include "icf/gateway.hpp"

namespace testutil {

/// Unique scratch directory, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "icf_test_XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline icf::Question make_question(std::string id, int step = 1, int nchoices = 5,
                                   std::optional<char> key = 'A') {
    icf::Question q;
    q.id = std::move(id);
    q.step = step;
    q.stem = "Stem for " + q.id + "?";
    for (int i = 0; i < nchoices; ++i) {
        q.choices.push_back("Option " + std::string(1, static_cast<char>('A' + i)));
    }
    q.answer_key = key;
    return q;
}

inline icf::QuestionSet make_set(std::vector<icf::Question> questions, std::string source = "test") {
    icf::QuestionSet qs;
    qs.questions = std::move(questions);
    qs.source = std::move(source);
    return qs;
}

inline icf::ModelProfile scripted_profile(std::string id, std::string behavior_ref,
                                          icf::ModelRole role = icf::ModelRole::participant) {
    icf::ModelProfile p;
    p.model_id = std::move(id);
    p.role = role;
    icf::ScriptedRef ref;
    ref.behavior = std::move(behavior_ref);
    p.backend = ref;
    return p;
}

/// Gateway scripted by a lambda; counts calls.
class LambdaGateway : public icf::Gateway {
public:
    using Fn = std::function<std::string(const icf::ModelProfile&, const icf::RenderedPrompt&,
                                         const icf::GenerationKey&)>;

    explicit LambdaGateway(Fn fn) : fn_(std::move(fn)) {}

    icf::GenerationResult generate(const icf::ModelProfile& profile, const icf::RenderedPrompt& prompt,
                                   const icf::GenerationKey& key) override {
        ++calls_;
        icf::GenerationResult res;
        res.completion = fn_(profile, prompt, key);
        res.backend_meta = "lambda";
        return res;
    }

    int calls() const { return calls_; }

private:
    Fn fn_;
    std::atomic<int> calls_{0};
};

}  // namespace testutil
