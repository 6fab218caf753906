#include "icf/runner.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "icf/digest.hpp"
#include "icf/dispatch.hpp"
#include "icf/errors.hpp"
#include "icf/metrics.hpp"
#include "icf/prompt.hpp"
#include "icf/run_store.hpp"

namespace fs = std::filesystem;

namespace icf {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string make_run_id(std::uint64_t seed, const std::string& digest) {
    return "run-" + std::to_string(seed) + "-" + digest.substr(0, 8);
}

/// Dataset for the run: loaded, validated, media questions dropped.
QuestionSet load_run_dataset(const std::string& path, std::string* digest_out) {
    const std::string bytes = read_file(path);
    if (digest_out) *digest_out = sha256_hex(bytes);
    QuestionSet qs = load_question_set(bytes, fs::path(path).filename().string());
    QuestionSet text_only = filter_text_only(qs);
    if (text_only.empty()) {
        throw ValidationError("dataset '" + path + "' is unusable",
                              {"no text-only questions remain after dropping media items"});
    }
    return text_only;
}

RunResult finish_run(RunStore& store, const RunOutcome& outcome, const QuestionSet& qs,
                     const std::vector<std::string>& roster) {
    if (qs.all_keyed()) {
        const MetricsBundle metrics = compute_all_metrics(outcome, qs, roster);
        store.emit_reports(outcome, qs, &metrics);
    } else {
        store.emit_reports(outcome, qs, nullptr);
    }
    return {store.dir(), outcome};
}

std::vector<std::string> roster_ids(const std::vector<ModelProfile>& participants) {
    std::vector<std::string> ids;
    ids.reserve(participants.size());
    for (const auto& p : participants) ids.push_back(p.model_id);
    return ids;
}

}  // namespace

RunResult execute_run(const RunConfig& cfg, Gateway* gateway_override, std::ostream* progress) {
    validate_run_config(cfg);

    std::string digest;
    const QuestionSet qs = load_run_dataset(cfg.dataset, &digest);

    RunManifest manifest;
    manifest.run_id = make_run_id(cfg.seed, digest);
    manifest.dataset_path = fs::absolute(cfg.dataset).lexically_normal().string();
    manifest.dataset_digest = digest;
    manifest.participants = cfg.participants;
    manifest.summarizer = cfg.summarizer;
    manifest.loop = cfg.loop;
    manifest.seed = cfg.seed;

    auto store = RunStore::create(cfg.out_dir, manifest);

    DispatchGateway dispatch(cfg.seed);
    Gateway* gateway = gateway_override ? gateway_override : &dispatch;
    const PromptForge forge = PromptForge::builtin();
    GenCollector collector;

    EngineContext ctx;
    ctx.gateway = gateway;
    ctx.forge = &forge;
    ctx.parallelism = cfg.parallelism;
    ctx.collector = &collector;

    const RunOutcome outcome =
        run_collaboration(ctx, qs, cfg.participants, cfg.summarizer, cfg.loop, store.get(), progress);
    return finish_run(*store, outcome, qs, roster_ids(cfg.participants));
}

RunResult resume_run(const std::string& run_dir, Gateway* gateway_override, std::ostream* progress,
                     int parallelism) {
    auto store = RunStore::open(run_dir);
    const RunManifest& manifest = store->manifest();

    std::string digest;
    const QuestionSet qs = load_run_dataset(manifest.dataset_path, &digest);
    if (digest != manifest.dataset_digest) {
        throw ValidationError("dataset digest mismatch for '" + manifest.dataset_path + "'",
                              {"the dataset file changed since the run was created",
                               "expected sha256 " + manifest.dataset_digest, "found    sha256 " + digest});
    }

    const ReplayState replay = store->replay();

    DispatchGateway dispatch(manifest.seed);
    Gateway* gateway = gateway_override ? gateway_override : &dispatch;
    const PromptForge forge = PromptForge::builtin();
    GenCollector collector;

    EngineContext ctx;
    ctx.gateway = gateway;
    ctx.forge = &forge;
    ctx.parallelism = parallelism;
    ctx.cache = &replay.cache;
    ctx.collector = &collector;

    const RunOutcome outcome = run_collaboration(ctx, qs, manifest.participants, manifest.summarizer,
                                                 manifest.loop, store.get(), progress);
    return finish_run(*store, outcome, qs, roster_ids(manifest.participants));
}

void report_run(const std::string& run_dir, std::ostream* out) {
    auto store = RunStore::open(run_dir);
    const RunManifest& manifest = store->manifest();

    std::string digest;
    const QuestionSet qs = load_run_dataset(manifest.dataset_path, &digest);
    if (digest != manifest.dataset_digest) {
        throw ValidationError("dataset digest mismatch for '" + manifest.dataset_path + "'",
                              {"the dataset file changed since the run was created"});
    }

    const RunOutcome outcome = store->reconstruct_outcome();
    const MetricsBundle* metrics_ptr = nullptr;
    MetricsBundle metrics;
    if (qs.all_keyed()) {
        metrics = compute_all_metrics(outcome, qs, roster_ids(manifest.participants));
        metrics_ptr = &metrics;
    }
    store->emit_reports(outcome, qs, metrics_ptr);
    if (out) *out << render_summary_text(manifest, outcome, qs, metrics_ptr);
}

// ---------------------------------------------------------------------------
// Offline demo bundle

namespace {

struct DemoQuestion {
    const char* id;
    int step;
    const char* stem;
    std::array<const char*, 5> choices;
    char key;
    bool media;
    int kind;    // 0 all agree; 1 gamma dissents, yields on review; 2 alpha dissents, never yields
    char common; // letter the majority pair (or everyone) holds
    char other;  // the dissenting letter for kinds 1 and 2
};

// Initial agreement on 14 of the 28 text-only questions (50%). The twelve
// kind-1 questions converge in round one; the two kind-2 questions never do,
// leaving 26/28 (92.86%) and a threshold_met stop after one round.
constexpr std::array<DemoQuestion, 30> kDemoQuestions{{
    {"s1-q01", 1, "Which vitamin deficiency classically presents with night blindness?",
     {"Vitamin B12", "Vitamin A", "Vitamin C", "Vitamin D", "Vitamin K"}, 'B', false, 0, 'B', 0},
    {"s1-q02", 1, "A tall patient has an arm span exceeding height and upward lens dislocation. Which protein is most likely defective?",
     {"Collagen type I", "Elastin", "Fibrillin-1", "Laminin", "Keratin"}, 'C', false, 0, 'C', 0},
    {"s1-q03", 1, "Which cell type produces pulmonary surfactant?",
     {"Type I pneumocytes", "Goblet cells", "Club cells", "Type II pneumocytes", "Alveolar macrophages"},
     'D', false, 1, 'D', 'B'},
    {"s1-q04", 1, "Which enzyme is deficient in classic phenylketonuria?",
     {"Phenylalanine hydroxylase", "Tyrosinase", "Homogentisate oxidase",
      "Branched-chain ketoacid dehydrogenase", "Cystathionine synthase"}, 'A', false, 1, 'A', 'C'},
    {"s1-q05", 1, "A patient on isoniazid develops stocking-glove numbness; the attached nerve-conduction tracing shows axonal neuropathy. Supplementing which vitamin would have prevented this?",
     {"Thiamine", "Riboflavin", "Niacin", "Folate", "Pyridoxine"}, 'E', true, 0, 'E', 0},
    {"s1-q06", 1, "Which immunoglobulin class crosses the placenta?",
     {"IgA", "IgM", "IgG", "IgE", "IgD"}, 'C', false, 0, 'C', 0},
    {"s1-q07", 1, "Profuse rice-water stools follow raw shellfish ingestion. Which organism is responsible?",
     {"Vibrio cholerae", "Shigella dysenteriae", "Salmonella typhi", "Yersinia enterocolitica",
      "Campylobacter jejuni"}, 'A', false, 1, 'B', 'A'},
    {"s1-q08", 1, "Cardiac output equals stroke volume multiplied by which quantity?",
     {"Heart rate", "Mean arterial pressure", "Ejection fraction", "Systemic vascular resistance",
      "Preload"}, 'A', false, 0, 'B', 0},
    {"s1-q09", 1, "Which tracer measures glomerular filtration rate most accurately?",
     {"Para-aminohippurate", "Inulin", "Creatinine", "Urea", "Glucose"}, 'B', false, 1, 'B', 'C'},
    {"s1-q10", 1, "A midshaft humeral fracture most endangers which nerve?",
     {"Median nerve", "Ulnar nerve", "Radial nerve", "Axillary nerve", "Musculocutaneous nerve"},
     'C', false, 0, 'C', 0},

    {"s2-q01", 2, "A 55-year-old smoker has painless gross hematuria. What is the most appropriate initial imaging?",
     {"Renal ultrasound", "CT urography", "MRI abdomen", "Plain radiograph", "Retrograde pyelogram"},
     'B', false, 0, 'B', 0},
    {"s2-q02", 2, "A young woman has episodic headache, palpitations, and severe hypertension. Which screening test is best?",
     {"Plasma free metanephrines", "24-hour urine cortisol", "Renin-aldosterone ratio", "TSH", "HbA1c"},
     'A', false, 1, 'A', 'C'},
    {"s2-q03", 2, "Which laboratory finding most strongly supports iron deficiency anemia?",
     {"High ferritin", "Low total iron-binding capacity", "Low ferritin", "Macrocytosis", "Target cells"},
     'C', false, 0, 'C', 0},
    {"s2-q04", 2, "A patient with atrial fibrillation and a CHA2DS2-VASc score of 4 should receive which therapy?",
     {"Aspirin alone", "No antithrombotic therapy", "Oral anticoagulation", "Clopidogrel alone",
      "Dual antiplatelet therapy"}, 'C', false, 1, 'C', 'E'},
    {"s2-q05", 2, "Which maintenance therapy is first-line for persistent asthma?",
     {"Long-acting beta agonist alone", "Daily inhaled corticosteroid", "Oral prednisone",
      "Montelukast alone", "Theophylline"}, 'B', false, 2, 'B', 'D'},
    {"s2-q06", 2, "A febrile toddler has a barking cough and the lateral neck film shown. Most likely diagnosis?",
     {"Epiglottitis", "Bacterial tracheitis", "Croup", "Foreign body aspiration", "Bronchiolitis"},
     'C', true, 0, 'C', 0},
    {"s2-q07", 2, "Sudden painless monocular vision loss with a cherry-red macula suggests which diagnosis?",
     {"Central retinal vein occlusion", "Central retinal artery occlusion", "Retinal detachment",
      "Acute angle-closure glaucoma", "Optic neuritis"}, 'B', false, 1, 'B', 'A'},
    {"s2-q08", 2, "Which antibiotic class is first-line for community-acquired pneumonia in an otherwise healthy outpatient?",
     {"Macrolides", "Fluoroquinolones", "Carbapenems", "Aminoglycosides", "Glycopeptides"},
     'A', false, 0, 'B', 0},
    {"s2-q09", 2, "A trauma patient has hypotension, distended neck veins, and muffled heart sounds. What is the next step?",
     {"Needle thoracostomy", "Pericardiocentesis", "Tube thoracostomy", "CT chest",
      "Diagnostic peritoneal lavage"}, 'B', false, 1, 'A', 'B'},
    {"s2-q10", 2, "Which acid-base and electrolyte pattern most commonly follows prolonged vomiting?",
     {"Hyperkalemic metabolic acidosis", "Hypokalemic hypochloremic metabolic alkalosis",
      "Hyponatremic respiratory acidosis", "Hypercalcemic alkalosis", "Hypermagnesemic acidosis"},
     'B', false, 0, 'B', 0},

    {"s3-q01", 3, "A nursing-home resident on warfarin has an INR of 9 without bleeding. Best management?",
     {"Continue the current dose", "Hold warfarin and give oral vitamin K", "Fresh frozen plasma",
      "Protamine sulfate", "Platelet transfusion"}, 'B', false, 0, 'B', 0},
    {"s3-q02", 3, "A diabetic patient's blood pressure remains 150/95 despite lifestyle measures. Which agent is preferred?",
     {"Hydrochlorothiazide", "Metoprolol", "Lisinopril", "Amlodipine", "Clonidine"},
     'C', false, 1, 'C', 'D'},
    {"s3-q03", 3, "On postoperative day five a patient has calf swelling and pleuritic chest pain. Which test should be ordered first?",
     {"D-dimer", "CT pulmonary angiography", "Ventilation-perfusion scan", "Compression ultrasound",
      "Chest radiograph"}, 'B', false, 1, 'A', 'B'},
    {"s3-q04", 3, "Which vaccine is contraindicated during high-dose immunosuppressive therapy?",
     {"Inactivated influenza", "Live attenuated varicella", "Tetanus toxoid",
      "Pneumococcal polysaccharide", "Hepatitis B"}, 'B', false, 0, 'B', 0},
    {"s3-q05", 3, "An agitated patient in alcohol withdrawal requires which first-line medication?",
     {"Haloperidol", "Phenytoin", "Lorazepam", "Quetiapine", "Propranolol"}, 'C', false, 0, 'A', 0},
    {"s3-q06", 3, "A patient with suspected bacterial meningitis and papilledema needs which sequence of care?",
     {"Empiric antibiotics, then CT head before lumbar puncture", "CT head, then antibiotics after the scan",
      "Immediate lumbar puncture without imaging", "MRI brain before any therapy",
      "EEG before any intervention"}, 'A', false, 1, 'A', 'B'},
    {"s3-q07", 3, "At 39 weeks a fetal heart tracing is category III. What is the best next step?",
     {"Expectant management", "Oxytocin augmentation", "Emergency cesarean delivery", "Amnioinfusion",
      "External cephalic version"}, 'C', false, 0, 'C', 0},
    {"s3-q08", 3, "A dialysis patient who missed two sessions has peaked T waves. Which medication comes first?",
     {"Insulin with dextrose", "Intravenous calcium gluconate", "Sodium polystyrene sulfonate",
      "Furosemide", "Albuterol"}, 'B', false, 2, 'B', 'D'},
    {"s3-q09", 3, "Which therapy most improves survival in chronic systolic heart failure?",
     {"Digoxin", "Furosemide", "ACE inhibitors", "Nitrates", "Aspirin"}, 'C', false, 1, 'A', 'C'},
    {"s3-q10", 3, "A STEMI patient presents 30 minutes from a catheterization lab. Best reperfusion strategy?",
     {"Immediate fibrinolysis", "Transfer for primary PCI", "Heparin alone", "Beta blockade alone",
      "Delayed elective angiography"}, 'B', false, 0, 'B', 0},
}};

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

nlohmann::json demo_dataset() {
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : kDemoQuestions) {
        nlohmann::json choices;
        for (std::size_t i = 0; i < q.choices.size(); ++i) {
            choices[std::string(1, static_cast<char>('A' + i))] = q.choices[i];
        }
        nlohmann::json rec{{"id", q.id},       {"step", q.step},           {"stem", q.stem},
                           {"choices", choices}, {"answer", std::string(1, q.key)}};
        if (q.media) rec["has_media"] = true;
        questions.push_back(std::move(rec));
    }
    return nlohmann::json{{"source", "demo-usmle-style"}, {"questions", std::move(questions)}};
}

enum class DemoAgent { alpha, beta, gamma };

nlohmann::json demo_behavior(DemoAgent agent) {
    const char* tmpl = "";
    switch (agent) {
        case DemoAgent::alpha:
            tmpl = "The stem's key findings fit option {letter} best. Competing choices each fail on at "
                   "least one criterion.";
            break;
        case DemoAgent::beta:
            tmpl = "Working from first principles, option {letter} follows directly. Nothing in the stem "
                   "supports the alternatives.";
            break;
        case DemoAgent::gamma:
            tmpl = "Option {letter} matches the classic presentation. The remaining options would require "
                   "findings the stem does not mention.";
            break;
    }

    nlohmann::json questions;
    for (const auto& q : kDemoQuestions) {
        char letter = q.common;
        nlohmann::json spec;
        if (q.kind == 1 && agent == DemoAgent::gamma) {
            letter = q.other;
            spec["sway_probability"] = 1.0;  // yields once it sees the panel against it
        }
        if (q.kind == 2 && agent == DemoAgent::alpha) {
            letter = q.other;
            spec["sway_probability"] = 0.0;  // never yields
        }
        spec["distribution"] = nlohmann::json{{std::string(1, letter), 1.0}};
        questions[q.id] = std::move(spec);
    }
    return nlohmann::json{
        {"defaults", {{"sway_probability", 0.5}, {"reasoning_template", tmpl}}},
        {"questions", std::move(questions)},
        {"summary_cap", 400},
    };
}

}  // namespace

std::string write_demo_bundle(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "behaviors", ec);
    if (ec) throw IoError("cannot create demo directory '" + dir + "': " + ec.message());

    write_text(fs::path(dir) / "dataset.json", demo_dataset().dump(2) + "\n");
    write_text(fs::path(dir) / "behaviors" / "alpha.json", demo_behavior(DemoAgent::alpha).dump(2) + "\n");
    write_text(fs::path(dir) / "behaviors" / "beta.json", demo_behavior(DemoAgent::beta).dump(2) + "\n");
    write_text(fs::path(dir) / "behaviors" / "gamma.json", demo_behavior(DemoAgent::gamma).dump(2) + "\n");
    write_text(fs::path(dir) / "behaviors" / "summarizer.json",
               nlohmann::json{{"summary_cap", 400}}.dump(2) + "\n");

    const nlohmann::json config{
        {"dataset", "dataset.json"},
        {"participants",
         {
             {{"model_id", "alpha"},
              {"backend", {{"scripted", {{"behavior", "behaviors/alpha.json"}}}}},
              {"max_new_tokens", 512}},
             {{"model_id", "beta"},
              {"backend", {{"scripted", {{"behavior", "behaviors/beta.json"}}}}},
              {"max_new_tokens", 512}},
             {{"model_id", "gamma"},
              {"backend", {{"scripted", {{"behavior", "behaviors/gamma.json"}}}}},
              {"max_new_tokens", 512}},
         }},
        {"summarizer",
         {{"model_id", "condenser"},
          {"backend", {{"scripted", {{"behavior", "behaviors/summarizer.json"}}}}},
          {"dialect", "instruction_bracketed"},
          {"max_new_tokens", 256}}},
        {"loop", {{"threshold", 80.0}, {"max_rounds", 10}, {"n", 10}, {"summarize_all_samples", false}}},
        {"seed", 7},
        {"out", "run"},
        {"parallelism", 4},
    };
    const fs::path config_path = fs::path(dir) / "demo_config.json";
    write_text(config_path, config.dump(2) + "\n");
    return config_path.string();
}

}  // namespace icf
