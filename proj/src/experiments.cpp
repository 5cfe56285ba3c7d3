#include "itlab/experiments.hpp"

#include "itlab/errors.hpp"
#include "itlab/grammar.hpp"
#include "itlab/topsim.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

namespace itlab {

using nlohmann::json;

const char* to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::mappings_census: return "mappings_census";
    case ExperimentKind::bayes_il: return "bayes_il";
    case ExperimentKind::krr: return "krr";
    case ExperimentKind::learning_speed: return "learning_speed";
    case ExperimentKind::sem_il_sweep: return "sem_il_sweep";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name)
{
    for (ExperimentKind k : {ExperimentKind::mappings_census, ExperimentKind::bayes_il, ExperimentKind::krr,
                             ExperimentKind::learning_speed, ExperimentKind::sem_il_sweep})
        if (name == to_string(k))
            return k;
    fail(ErrorCode::config_invalid, "unknown experiment kind: " + name);
}

namespace {

// Reads typed keys with defaults and rejects anything it did not consume.
class ParamReader {
public:
    ParamReader(const json& j, std::string scope) : j_(j), scope_(std::move(scope))
    {
        require(j_.is_object(), ErrorCode::config_invalid, scope_ + " must be a JSON object");
    }

    template <typename T>
    T get(const std::string& key, T fallback)
    {
        seen_.insert(key);
        if (!j_.contains(key))
            return fallback;
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail(ErrorCode::config_invalid, scope_ + "." + key + " has the wrong type");
        }
    }

    void finish() const
    {
        for (const auto& item : j_.items())
            require(seen_.count(item.key()) != 0, ErrorCode::config_invalid,
                    "unknown key " + scope_ + "." + item.key());
    }

private:
    const json& j_;
    std::string scope_;
    std::set<std::string> seen_;
};

void check(bool cond, const std::string& msg) { require(cond, ErrorCode::config_invalid, msg); }

FactorSpace space_from(const std::vector<int>& cards, const std::string& what)
{
    check(!cards.empty(), what + " must list at least one factor");
    for (int c : cards)
        check(c >= 1, what + " entries must be >= 1");
    return FactorSpace(cards);
}

NamingTable naming_for(const std::string& naming, const FactorSpace& space)
{
    if (naming == "shapes_and_colors") {
        check(space == FactorSpace::uniform(2, 2), "shapes_and_colors naming needs the 2x2 space");
        return NamingTable::shapes_and_colors();
    }
    check(naming == "generic", "naming must be shapes_and_colors or generic");
    return NamingTable::generic(space);
}

// ---- per-kind (de)serialization -------------------------------------------

CensusParams census_from(const json& j)
{
    ParamReader r(j, "params");
    CensusParams p;
    p.cardinalities = r.get("cardinalities", p.cardinalities);
    p.cap = r.get("cap", p.cap);
    p.naming = r.get("naming", p.naming);
    r.finish();
    const FactorSpace space = space_from(p.cardinalities, "cardinalities");
    check(count_all_mappings(space, p.cap).has_value(), "the mapping space exceeds cap");
    naming_for(p.naming, space);
    return p;
}

json to_json(const CensusParams& p)
{
    return {{"cardinalities", p.cardinalities}, {"cap", p.cap}, {"naming", p.naming}};
}

BayesIlParams bayes_from(const json& j)
{
    ParamReader r(j, "params");
    BayesIlParams p;
    ILConfig& c = p.il;
    c.space = space_from(r.get("cardinalities", c.space.cardinalities()), "cardinalities");
    c.generations = r.get("generations", c.generations);
    c.dataset_size = r.get("dataset_size", c.dataset_size);
    c.interaction_rounds = r.get("interaction_rounds", c.interaction_rounds);
    c.likelihood_noise = r.get("likelihood_noise", c.likelihood_noise);
    c.num_candidates = r.get("num_candidates", c.num_candidates);
    const auto prior = r.get<std::string>("prior", "coding_length");
    check(prior == "coding_length" || prior == "uniform", "prior must be coding_length or uniform");
    c.prior_mode = prior == "uniform" ? PriorMode::uniform : PriorMode::coding_length;
    c.interaction_enabled = r.get("interaction", c.interaction_enabled);
    const auto lik = r.get<std::string>("interaction_likelihood", "success");
    check(lik == "success" || lik == "agreement", "interaction_likelihood must be success or agreement");
    c.interaction_likelihood = lik == "agreement" ? InteractionLikelihood::agreement : InteractionLikelihood::success;
    p.initial_copies = r.get("initial_copies", p.initial_copies);
    p.ablations = r.get("ablations", p.ablations);
    r.finish();

    check(c.space == FactorSpace::uniform(2, 2), "bayes_il enumerates every mapping; only the 2x2 space is supported");
    check(c.generations >= 1, "generations must be >= 1");
    check(c.dataset_size >= 1, "dataset_size must be >= 1");
    check(c.likelihood_noise >= 0.0 && c.likelihood_noise < 0.5, "likelihood_noise must lie in [0, 0.5)");
    check(c.interaction_rounds >= 1, "interaction_rounds must be >= 1");
    check(c.num_candidates >= 2 && c.num_candidates <= c.space.total_points(),
          "num_candidates must lie in [2, total_points]");
    check(p.initial_copies >= 1, "initial_copies must be >= 1");
    return p;
}

json to_json(const BayesIlParams& p)
{
    const ILConfig& c = p.il;
    return {{"cardinalities", c.space.cardinalities()},
            {"generations", c.generations},
            {"dataset_size", c.dataset_size},
            {"interaction_rounds", c.interaction_rounds},
            {"likelihood_noise", c.likelihood_noise},
            {"num_candidates", c.num_candidates},
            {"prior", c.prior_mode == PriorMode::uniform ? "uniform" : "coding_length"},
            {"interaction", c.interaction_enabled},
            {"interaction_likelihood",
             c.interaction_likelihood == InteractionLikelihood::agreement ? "agreement" : "success"},
            {"initial_copies", p.initial_copies},
            {"ablations", p.ablations}};
}

KrrParams krr_from(const json& j)
{
    ParamReader r(j, "params");
    KrrParams p;
    p.points = r.get("points", p.points);
    const auto kernel = r.get<std::string>("kernel", "rbf");
    check(kernel == "rbf" || kernel == "min", "kernel must be rbf or min");
    const double gamma = r.get("gamma", p.kernel.gamma);
    p.kernel = kernel == "rbf" ? krr::Kernel::rbf(gamma) : krr::Kernel::min_kernel();
    p.generations = r.get("generations", p.generations);
    const auto schedule = r.get<std::string>("schedule", "fixed");
    check(schedule == "fixed" || schedule == "tolerance", "schedule must be fixed or tolerance");
    const double c = r.get("c", 0.1);
    const double eps = r.get("epsilon", 0.01);
    p.schedule = schedule == "fixed" ? krr::CSchedule::fixed(c) : krr::CSchedule::tolerance(eps);
    p.threshold = r.get("threshold", p.threshold);
    r.finish();
    check(p.points >= 1, "points must be >= 1");
    check(kernel == "min" || gamma > 0.0, "gamma must be > 0");
    check(p.generations >= 1, "generations must be >= 1");
    check(p.schedule.value > 0.0, "c and epsilon must be > 0");
    check(p.threshold > 0.0 && p.threshold < 1.0, "threshold must lie in (0, 1)");
    return p;
}

json to_json(const KrrParams& p)
{
    const bool fixed = p.schedule.mode == krr::CSchedule::Mode::fixed;
    json j = {{"points", p.points},
              {"kernel", p.kernel.kind == krr::Kernel::Kind::rbf ? "rbf" : "min"},
              {"generations", p.generations},
              {"schedule", fixed ? "fixed" : "tolerance"},
              {"threshold", p.threshold}};
    if (p.kernel.kind == krr::Kernel::Kind::rbf)
        j["gamma"] = p.kernel.gamma;
    j[fixed ? "c" : "epsilon"] = p.schedule.value;
    return j;
}

LearningSpeedParams speed_from(const json& j)
{
    ParamReader r(j, "params");
    LearningSpeedParams p;
    p.cardinalities = r.get("cardinalities", p.cardinalities);
    p.train.learning_rate = r.get("learning_rate", p.train.learning_rate);
    p.train.weight_decay = r.get("weight_decay", p.train.weight_decay);
    p.train.steps = r.get("steps", p.train.steps);
    p.hidden_dim = r.get("hidden_dim", p.hidden_dim);
    p.code_dim = r.get("code_dim", p.code_dim);
    r.finish();
    const FactorSpace space = space_from(p.cardinalities, "cardinalities");
    check(space.is_uniform(), "learning_speed needs equal cardinalities");
    check(count_all_mappings(space, kDefaultEnumerationCap).has_value(), "the mapping space is too large");
    check(p.train.learning_rate > 0.0, "learning_rate must be > 0");
    check(p.train.weight_decay >= 0.0, "weight_decay must be >= 0");
    check(p.train.steps >= 2, "steps must be >= 2");
    check(p.hidden_dim >= 1 && p.code_dim >= 1, "hidden_dim and code_dim must be >= 1");
    return p;
}

json to_json(const LearningSpeedParams& p)
{
    return {{"cardinalities", p.cardinalities}, {"learning_rate", p.train.learning_rate},
            {"weight_decay", p.train.weight_decay}, {"steps", p.train.steps},
            {"hidden_dim", p.hidden_dim}, {"code_dim", p.code_dim}};
}

const char* to_string(nn::StudentInit s)
{
    switch (s) {
    case nn::StudentInit::random: return "random";
    case nn::StudentInit::fixed_checkpoint: return "fixed_checkpoint";
    case nn::StudentInit::teacher_copy: return "teacher_copy";
    }
    return "?";
}

SemIlSweepParams sweep_from(const json& j)
{
    ParamReader r(j, "params");
    SemIlSweepParams p;
    GeneratorConfig& g = p.generator;
    nn::SemIlConfig& m = p.model;

    g.space = space_from(r.get("cardinalities", g.space.cardinalities()), "cardinalities");
    const auto noise = r.get("noise_cardinalities", g.noise_space ? g.noise_space->cardinalities() : std::vector<int>{});
    g.noise_space = noise.empty() ? std::nullopt : std::optional<FactorSpace>(space_from(noise, "noise_cardinalities"));
    g.factor_values = r.get("factor_values", std::vector<std::vector<double>>{});
    const auto label = r.get<std::string>("label_fn", "linear");
    check(label == "linear" || label == "nonlinear", "label_fn must be linear or nonlinear");
    g.label_fn.kind = label == "linear" ? LabelFunction::Kind::linear : LabelFunction::Kind::nonlinear;
    g.label_fn.weights = r.get("label_weights", label == "linear" ? g.label_fn.weights : std::vector<double>{1, 1, 1});
    g.label_noise_sigma = r.get("label_noise_sigma", g.label_noise_sigma);
    g.samples_per_tuple = r.get("samples_per_tuple", g.samples_per_tuple);

    p.split_ratios = r.get("split_ratios", p.split_ratios);
    std::vector<std::string> variant_names;
    for (nn::Variant v : p.variants)
        variant_names.emplace_back(nn::to_string(v));
    variant_names = r.get("variants", variant_names);
    p.variants.clear();
    for (const auto& name : variant_names)
        p.variants.push_back(nn::variant_from_string(name));
    p.argmax_ablation = r.get("argmax_ablation", p.argmax_ablation);

    m.generations = r.get("generations", m.generations);
    m.hidden_dim = r.get("hidden_dim", m.hidden_dim);
    m.sem.num_blocks = r.get("num_blocks", m.sem.num_blocks);
    m.sem.block_width = r.get("block_width", m.sem.block_width);
    m.sem.temperature = r.get("temperature", m.sem.temperature);
    m.imitation.steps = r.get("imitation_steps", m.imitation.steps);
    m.interaction.steps = r.get("interaction_steps", m.interaction.steps);
    m.imitation.learning_rate = r.get("imitation_learning_rate", m.imitation.learning_rate);
    m.interaction.learning_rate = r.get("learning_rate", m.interaction.learning_rate);
    m.imitation.weight_decay = m.interaction.weight_decay = r.get("weight_decay", m.interaction.weight_decay);
    m.imitation.batch_size = m.interaction.batch_size = r.get("batch_size", m.interaction.batch_size);
    m.eval_every = r.get("eval_every", m.eval_every);
    m.topsim_points = r.get("topsim_points", m.topsim_points);
    m.match_total_budget = r.get("match_total_budget", m.match_total_budget);
    const auto init = r.get<std::string>("student_init", "random");
    check(init == "random" || init == "fixed_checkpoint" || init == "teacher_copy",
          "student_init must be random, fixed_checkpoint or teacher_copy");
    m.student_init = init == "random"           ? nn::StudentInit::random
                     : init == "teacher_copy" ? nn::StudentInit::teacher_copy
                                              : nn::StudentInit::fixed_checkpoint;
    p.confidence_probe_points = r.get("confidence_probe_points", p.confidence_probe_points);
    p.confidence_trace_every = r.get("confidence_trace_every", p.confidence_trace_every);
    p.confidence_split = r.get("confidence_split", p.confidence_split);
    p.write_curves = r.get("write_curves", p.write_curves);
    r.finish();

    try {
        GeneratorConfig probe = g;
        probe.validate();
        m.validate();
    } catch (const LabError& e) {
        fail(ErrorCode::config_invalid, e.what());
    }
    check(!p.split_ratios.empty(), "split_ratios must not be empty");
    for (double s : p.split_ratios)
        check(s > 0.0 && s < 1.0, "split ratios must lie in (0, 1) so the test support is nonempty");
    check(!p.variants.empty() || p.argmax_ablation, "nothing to run");
    const bool wants_given_g = std::find(p.variants.begin(), p.variants.end(), nn::Variant::given_g) != p.variants.end();
    if (wants_given_g) {
        check(m.sem.num_blocks == g.space.num_factors(), "given_g needs num_blocks = number of factors");
        for (int c : g.space.cardinalities())
            check(c <= m.sem.block_width, "given_g needs block_width >= every cardinality");
    }
    check(p.confidence_trace_every >= 1, "confidence_trace_every must be >= 1");
    return p;
}

json to_json(const SemIlSweepParams& p)
{
    const GeneratorConfig& g = p.generator;
    const nn::SemIlConfig& m = p.model;
    std::vector<std::string> variants;
    for (nn::Variant v : p.variants)
        variants.emplace_back(nn::to_string(v));
    return {{"cardinalities", g.space.cardinalities()},
            {"noise_cardinalities", g.noise_space ? g.noise_space->cardinalities() : std::vector<int>{}},
            {"factor_values", g.factor_values},
            {"label_fn", g.label_fn.kind == LabelFunction::Kind::linear ? "linear" : "nonlinear"},
            {"label_weights", g.label_fn.weights},
            {"label_noise_sigma", g.label_noise_sigma},
            {"samples_per_tuple", g.samples_per_tuple},
            {"split_ratios", p.split_ratios},
            {"variants", variants},
            {"argmax_ablation", p.argmax_ablation},
            {"generations", m.generations},
            {"hidden_dim", m.hidden_dim},
            {"num_blocks", m.sem.num_blocks},
            {"block_width", m.sem.block_width},
            {"temperature", m.sem.temperature},
            {"imitation_steps", m.imitation.steps},
            {"interaction_steps", m.interaction.steps},
            {"imitation_learning_rate", m.imitation.learning_rate},
            {"learning_rate", m.interaction.learning_rate},
            {"weight_decay", m.interaction.weight_decay},
            {"batch_size", m.interaction.batch_size},
            {"eval_every", m.eval_every},
            {"topsim_points", m.topsim_points},
            {"match_total_budget", m.match_total_budget},
            {"student_init", to_string(m.student_init)},
            {"confidence_probe_points", p.confidence_probe_points},
            {"confidence_trace_every", p.confidence_trace_every},
            {"confidence_split", p.confidence_split},
            {"write_curves", p.write_curves}};
}

json normalize_params(ExperimentKind kind, const json& raw)
{
    switch (kind) {
    case ExperimentKind::mappings_census: return to_json(census_from(raw));
    case ExperimentKind::bayes_il: return to_json(bayes_from(raw));
    case ExperimentKind::krr: return to_json(krr_from(raw));
    case ExperimentKind::learning_speed: return to_json(speed_from(raw));
    case ExperimentKind::sem_il_sweep: return to_json(sweep_from(raw));
    }
    return raw;
}

} // namespace

SemIlSweepParams::SemIlSweepParams()
{
    generator.space = FactorSpace({10, 10, 10, 8});
    generator.noise_space = FactorSpace({10, 10});
    generator.label_fn = LabelFunction::linear({1.0, 1.0, 1.0, 1.0});
    generator.label_noise_sigma = 0.2;
    generator.samples_per_tuple = 1;
    model.generations = 4;
}

CensusParams ExperimentConfig::census() const { return census_from(params); }
BayesIlParams ExperimentConfig::bayes_il() const { return bayes_from(params); }
KrrParams ExperimentConfig::krr() const { return krr_from(params); }
LearningSpeedParams ExperimentConfig::learning_speed() const { return speed_from(params); }
SemIlSweepParams ExperimentConfig::sem_il_sweep() const { return sweep_from(params); }

ExperimentConfig parse_experiment_config(const json& j)
{
    ParamReader r(j, "config");
    ExperimentConfig c;
    c.kind = experiment_kind_from_string(r.get<std::string>("kind", ""));
    c.seeds = r.get("seeds", c.seeds);
    c.output_dir = r.get<std::string>("output_dir", c.output_dir.string());
    const json raw = r.get("params", json::object());
    r.finish();
    c.params = normalize_params(c.kind, raw);
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const LabError& e) {
        fail(ErrorCode::config_invalid, e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::config_invalid, "config is not valid JSON: " + std::string(e.what()));
    }
    return parse_experiment_config(j);
}

json canonical_config(const ExperimentConfig& config)
{
    return {{"kind", to_string(config.kind)}, {"seeds", config.seeds}, {"params", config.params}};
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text)
{
    auto parse_one = [&](const std::string& s) -> std::uint64_t {
        check(!s.empty() && s.find_first_not_of("0123456789") == std::string::npos, "bad seed: '" + s + "'");
        return std::stoull(s);
    };
    std::vector<std::uint64_t> seeds;
    const auto range = text.find("..");
    if (range != std::string::npos) {
        const std::uint64_t lo = parse_one(text.substr(0, range));
        const std::uint64_t hi = parse_one(text.substr(range + 2));
        check(lo <= hi, "seed range must be ascending");
        for (std::uint64_t s = lo; s <= hi; ++s)
            seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        seeds.push_back(parse_one(text.substr(start, comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return seeds;
}

bool RunManifest::all_ok() const
{
    return std::all_of(runs.begin(), runs.end(), [](const RunStatus& r) { return r.ok; });
}

bool RunManifest::any_ok() const
{
    return std::any_of(runs.begin(), runs.end(), [](const RunStatus& r) { return r.ok; });
}

nlohmann::ordered_json RunManifest::to_json() const
{
    nlohmann::ordered_json j;
    j["kind"] = kind;
    j["version"] = version;
    j["config_hash"] = config_hash;
    j["duration_seconds"] = duration_seconds;
    j["runs"] = nlohmann::ordered_json::array();
    for (const RunStatus& r : runs) {
        nlohmann::ordered_json jr;
        jr["label"] = r.label;
        jr["seed"] = r.seed ? nlohmann::ordered_json(*r.seed) : nlohmann::ordered_json(nullptr);
        jr["status"] = r.ok ? "ok" : "failed";
        if (!r.ok)
            jr["error"] = r.error;
        jr["files"] = r.files;
        j["runs"].push_back(std::move(jr));
    }
    return j;
}

// ---- tables ----------------------------------------------------------------

namespace {

std::string codes_string(const Mapping& m)
{
    std::string s;
    for (std::size_t x = 0; x < m.table().size(); ++x) {
        if (x)
            s += ' ';
        s += m.target().code_string(m(x));
    }
    return s;
}

double mapping_topsim(const Mapping& m)
{
    const auto sources = m.source().all_tuples();
    std::vector<FactorTuple> codes;
    codes.reserve(sources.size());
    for (std::size_t x = 0; x < sources.size(); ++x)
        codes.push_back(m.target().unflatten(m(x)));
    return topological_similarity(codes, sources);
}

std::string join_rules(const Grammar& g)
{
    std::string s;
    for (std::size_t i = 0; i < g.rules.size(); ++i) {
        if (i)
            s += "; ";
        s += g.rules[i];
    }
    return s;
}

} // namespace

Table census_table(const CensusParams& params)
{
    const FactorSpace space(params.cardinalities);
    const NamingTable names = naming_for(params.naming, space);
    const std::vector<Mapping> all = enumerate_all_mappings(space, params.cap);
    std::vector<int> lengths;
    std::vector<CodedGrammar> coded;
    for (const Mapping& m : all) {
        coded.push_back(grammar_and_coding_length(m, names));
        lengths.push_back(coded.back().coding_length);
    }
    const std::vector<double> prior = prior_from_coding_lengths(lengths);

    Table t({"index", "codes", "class", "coding_length", "prior", "topsim", "grammar"});
    for (std::size_t i = 0; i < all.size(); ++i)
        t.add_row({static_cast<std::int64_t>(i), codes_string(all[i]), std::string(to_string(coded[i].mapping_class)),
                   static_cast<std::int64_t>(coded[i].coding_length), prior[i], mapping_topsim(all[i]),
                   join_rules(coded[i].grammar)});
    return t;
}

Table census_class_counts(const Table& census)
{
    std::array<std::int64_t, kNumMappingClasses> counts{};
    std::array<double, kNumMappingClasses> mass{};
    for (const auto& row : census.rows) {
        const auto& cls = std::get<std::string>(row.at(2));
        for (int c = 0; c < kNumMappingClasses; ++c) {
            if (cls == to_string(static_cast<MappingClass>(c))) {
                ++counts[static_cast<std::size_t>(c)];
                mass[static_cast<std::size_t>(c)] += std::get<double>(row.at(4));
            }
        }
    }
    Table t({"class", "count", "prior_mass"});
    for (int c = 0; c < kNumMappingClasses; ++c)
        t.add_row({std::string(to_string(static_cast<MappingClass>(c))), counts[static_cast<std::size_t>(c)],
                   mass[static_cast<std::size_t>(c)]});
    return t;
}

namespace {

const MappingUniverse& universe_2x2()
{
    static const MappingUniverse universe(FactorSpace::uniform(2, 2), NamingTable::shapes_and_colors());
    return universe;
}

} // namespace

Table bayes_il_table(const BayesIlParams& params, std::uint64_t seed)
{
    const MappingUniverse& u = universe_2x2();
    const SignalDataset d0 = mapping_graph(u.mapping(first_of_class(u, MappingClass::holistic)), params.initial_copies);

    struct Arm {
        std::string name;
        ILConfig config;
    };
    std::vector<Arm> arms{{"main", params.il}};
    if (params.ablations) {
        Arm no_interaction{"no_interaction", params.il};
        no_interaction.config.interaction_enabled = false;
        Arm uniform{"uniform_prior", params.il};
        uniform.config.prior_mode = PriorMode::uniform;
        arms.push_back(no_interaction);
        arms.push_back(uniform);
    }

    Table t({"run", "generation", "degenerate", "other", "holistic", "compositional", "game_success_rate",
             "dominant_mapping"});
    for (Arm& arm : arms) {
        arm.config.seed = seed;
        for (const GenerationRecord& rec : run_iterated_learning(u, arm.config, d0))
            t.add_row({arm.name, static_cast<std::int64_t>(rec.generation), rec.class_mass[0], rec.class_mass[1],
                       rec.class_mass[2], rec.class_mass[3], rec.game_success_rate,
                       static_cast<std::int64_t>(rec.dominant_mapping)});
    }
    return t;
}

Table krr_table(const KrrParams& params, std::uint64_t seed, Table* active)
{
    Rng rng = make_rng(seed);
    std::vector<Eigen::VectorXd> points;
    Eigen::VectorXd targets(static_cast<Eigen::Index>(params.points));
    for (std::size_t i = 0; i < params.points; ++i)
        points.push_back(Eigen::VectorXd::Constant(1, uniform01(rng)));
    for (std::size_t i = 0; i < params.points; ++i)
        targets(static_cast<Eigen::Index>(i)) = standard_normal(rng);

    const krr::KernelSpectrum spectrum = krr::eigendecompose(krr::gram_matrix(points, params.kernel));
    const krr::DistillTrajectory traj = krr::distill_trajectory(spectrum, targets, params.schedule, params.generations);

    Table t({"generation", "c", "index", "eigenvalue", "shrink_product", "prediction"});
    for (std::size_t g = 0; g < traj.generations(); ++g)
        for (Eigen::Index j = 0; j < spectrum.eigenvalues.size(); ++j)
            t.add_row({static_cast<std::int64_t>(g), traj.c_schedule[g], static_cast<std::int64_t>(j),
                       spectrum.eigenvalues(j), traj.shrink_products[g](j), traj.predictions[g](j)});
    if (active) {
        *active = Table({"generation", "c", "active_basis"});
        const auto counts = krr::active_basis_count(traj, params.threshold);
        for (std::size_t g = 0; g < counts.size(); ++g)
            active->add_row({static_cast<std::int64_t>(g), traj.c_schedule[g], static_cast<std::int64_t>(counts[g])});
    }
    return t;
}

Table learning_speed_table(const LearningSpeedParams& params, std::uint64_t seed)
{
    const FactorSpace space(params.cardinalities);
    const NamingTable names = space == FactorSpace::uniform(2, 2) ? NamingTable::shapes_and_colors()
                                                                  : NamingTable::generic(space);
    const std::vector<Mapping> all = enumerate_all_mappings(space);
    std::vector<int> lengths;
    std::vector<MappingClass> classes;
    for (const Mapping& m : all) {
        const CodedGrammar cg = grammar_and_coding_length(m, names);
        lengths.push_back(cg.coding_length);
        classes.push_back(cg.mapping_class);
    }
    const std::vector<double> prior = prior_from_coding_lengths(lengths);

    nn::TrainConfig train = params.train;
    train.seed = seed; // identical initialization for every dataset
    Table t({"index", "codes", "class", "coding_length", "prior", "learning_speed", "final_loss"});
    for (std::size_t i = 0; i < all.size(); ++i) {
        const nn::MappingSpeed ms = nn::mapping_learning_speed(all[i], train, params.hidden_dim, params.code_dim);
        t.add_row({static_cast<std::int64_t>(i), codes_string(all[i]), std::string(to_string(classes[i])),
                   static_cast<std::int64_t>(lengths[i]), prior[i], ms.speed, ms.loss_curve.back()});
    }
    return t;
}

Table metrics_table(const nn::SemIlRun& run)
{
    Table t({"generation", "step", "split", "loss", "topsim", "mean_entropy"});
    for (const nn::GenerationMetrics& gm : run.generations) {
        for (std::size_t k = 0; k < gm.curve.size(); ++k) {
            const nn::CurvePoint& p = gm.curve[k];
            const bool last_test = p.split == "test" && k + 1 == gm.curve.size();
            t.add_row({static_cast<std::int64_t>(p.generation), static_cast<std::int64_t>(p.step), p.split, p.loss,
                       last_test ? Cell(gm.topsim) : Cell(std::monostate{}),
                       last_test ? Cell(gm.mean_entropy) : Cell(std::monostate{})});
        }
    }
    return t;
}

// ---- orchestration ---------------------------------------------------------

namespace {

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::vector<std::string> run_sem_il_seed(const SemIlSweepParams& p, std::uint64_t seed,
                                         const std::filesystem::path& dir)
{
    std::vector<std::string> files;
    Table summary({"split_ratio", "variant", "generation", "train_loss", "test_loss", "topsim", "mean_entropy"});

    struct Arm {
        std::string name;
        nn::Variant variant;
        nn::PseudoLabelMode labels;
    };
    std::vector<Arm> arms;
    for (nn::Variant v : p.variants)
        arms.push_back({nn::to_string(v), v, nn::PseudoLabelMode::sampled});
    if (p.argmax_ablation)
        arms.push_back({"sem_il_argmax", nn::Variant::sem_il, nn::PseudoLabelMode::argmax});

    for (std::size_t si = 0; si < p.split_ratios.size(); ++si) {
        GeneratorConfig g = p.generator;
        g.split_ratio = p.split_ratios[si];
        g.seed = derive_seed(seed, si);
        const nn::SemIlData data = nn::make_sem_il_data(g);
        for (const Arm& arm : arms) {
            const auto t0 = std::chrono::steady_clock::now();
            nn::SemIlConfig cfg = p.model;
            cfg.variant = arm.variant;
            cfg.pseudo_labels = arm.labels;
            cfg.seed = derive_seed(seed, si);
            const nn::SemIlRun run = nn::run_sem_il(cfg, data);
            for (const nn::GenerationMetrics& gm : run.generations)
                summary.add_row({p.split_ratios[si], arm.name, static_cast<std::int64_t>(gm.generation), gm.train_loss,
                                 gm.test_loss, gm.topsim, gm.mean_entropy});
            if (p.write_curves) {
                const std::string name = "metrics_" + seed_tag(seed) + "_split" + std::to_string(si) + "_" + arm.name + ".csv";
                write_results(metrics_table(run), ResultFormat::csv, dir / name);
                files.push_back(name);
            }
            spdlog::debug("seed {} split {} {}: test {:.5f} topsim {:.4f} ({:.1f}s)", seed, p.split_ratios[si], arm.name,
                          run.generations.back().test_loss, run.generations.back().topsim,
                          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        if (p.confidence_probe_points > 0 && std::abs(p.split_ratios[si] - p.confidence_split) < 1e-12) {
            nn::SemIlConfig cfg = p.model;
            cfg.variant = nn::Variant::sem_il;
            cfg.seed = derive_seed(seed, si);
            const auto cs = nn::confidence_speed_experiment(cfg, data, p.confidence_probe_points, p.confidence_trace_every);
            Table conf({"sample", "block", "confidence", "learning_speed"});
            const auto blocks = static_cast<std::size_t>(cfg.sem.num_blocks);
            for (std::size_t k = 0; k < cs.confidence.size(); ++k)
                conf.add_row({static_cast<std::int64_t>(k / blocks), static_cast<std::int64_t>(k % blocks),
                              cs.confidence[k], cs.speed[k]});
            const std::string name = "confidence_" + seed_tag(seed) + ".csv";
            write_results(conf, ResultFormat::csv, dir / name);
            files.push_back(name);
        }
    }
    const std::string name = "sem_il_sweep_" + seed_tag(seed) + ".csv";
    write_results(summary, ResultFormat::csv, dir / name);
    files.insert(files.begin(), name);
    return files;
}

std::vector<std::string> run_one(const ExperimentConfig& config, std::optional<std::uint64_t> seed)
{
    const std::filesystem::path& dir = config.output_dir;
    switch (config.kind) {
    case ExperimentKind::mappings_census: {
        const Table census = census_table(config.census());
        write_results(census, ResultFormat::csv, dir / "census.csv");
        write_results(census_class_counts(census), ResultFormat::csv, dir / "census_classes.csv");
        return {"census.csv", "census_classes.csv"};
    }
    case ExperimentKind::bayes_il: {
        const std::string name = "bayes_il_" + seed_tag(*seed) + ".csv";
        write_results(bayes_il_table(config.bayes_il(), *seed), ResultFormat::csv, dir / name);
        return {name};
    }
    case ExperimentKind::krr: {
        Table active;
        const Table t = krr_table(config.krr(), *seed, &active);
        const std::string a = "krr_" + seed_tag(*seed) + ".csv";
        const std::string b = "krr_active_" + seed_tag(*seed) + ".csv";
        write_results(t, ResultFormat::csv, dir / a);
        write_results(active, ResultFormat::csv, dir / b);
        return {a, b};
    }
    case ExperimentKind::learning_speed: {
        const std::string name = "learning_speed_" + seed_tag(*seed) + ".csv";
        write_results(learning_speed_table(config.learning_speed(), *seed), ResultFormat::csv, dir / name);
        return {name};
    }
    case ExperimentKind::sem_il_sweep:
        return run_sem_il_seed(config.sem_il_sweep(), *seed, dir);
    }
    return {};
}

} // namespace

RunManifest run_experiment(const ExperimentConfig& config, std::size_t jobs)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    require(!ec && std::filesystem::is_directory(config.output_dir), ErrorCode::io_error,
            "cannot create output directory " + config.output_dir.string());

    RunManifest manifest;
    manifest.kind = to_string(config.kind);
    manifest.config_hash = fnv1a_hex(canonical_config(config).dump());

    // the census does not depend on the seed
    if (config.kind == ExperimentKind::mappings_census) {
        manifest.runs.push_back({"census", std::nullopt, true, {}, {}});
    } else {
        require(!config.seeds.empty(), ErrorCode::config_invalid, "no seeds to run");
        for (std::uint64_t s : config.seeds)
            manifest.runs.push_back({seed_tag(s), s, true, {}, {}});
    }

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < manifest.runs.size(); i = next++) {
            RunStatus& run = manifest.runs[i];
            const auto start = std::chrono::steady_clock::now();
            try {
                run.files = run_one(config, run.seed);
                spdlog::info("{} {} done in {:.1f}s", manifest.kind, run.label,
                             std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            } catch (const std::exception& e) {
                run.ok = false;
                run.error = e.what();
                spdlog::error("{} {} failed: {}", manifest.kind, run.label, e.what());
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, manifest.runs.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    manifest.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_file(config.output_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

} // namespace itlab
