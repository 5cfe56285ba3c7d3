#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "itlab/errors.hpp"
#include "itlab/experiments.hpp"

using namespace itlab;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const LabError& e) {
        return e.code();
    }
    FAIL("expected a LabError");
    return ErrorCode::invalid_argument;
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("itlab_experiments_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("seed lists")
{
    CHECK(parse_seed_list("0..3") == std::vector<std::uint64_t>{0, 1, 2, 3});
    CHECK(parse_seed_list("5") == std::vector<std::uint64_t>{5});
    CHECK(parse_seed_list("0,3,7") == std::vector<std::uint64_t>{0, 3, 7});
    CHECK(parse_seed_list("2..2") == std::vector<std::uint64_t>{2});
    for (const char* bad : {"", "a", "3..1", "1,,2", "-1", "1..", "1,"})
        CHECK(code_of([&] { parse_seed_list(bad); }) == ErrorCode::config_invalid);
}

TEST_CASE("configs fill defaults and reject unknown keys")
{
    const ExperimentConfig c = parse_experiment_config(json::parse(R"({"kind": "krr", "seeds": [1, 2]})"));
    CHECK(c.kind == ExperimentKind::krr);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(c.params.at("points") == 10);
    CHECK(c.krr().kernel.gamma == 10.0);

    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "krr", "extra": 1})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "krr", "params": {"pts": 1}})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "krr", "params": {"points": "ten"}})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "nope"})")); }) == ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "bayes_il", "params": {"likelihood_noise": 0.7}})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "sem_il_sweep", "params": {"split_ratios": [1.0]}})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "sem_il_sweep", "params": {"variants": ["x"]}})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "sem_il_sweep", "params": {"num_blocks": 3}})")); }) ==
          ErrorCode::config_invalid);
    CHECK(code_of([] { parse_experiment_config(json::parse(R"({"kind": "mappings_census", "params": {"cardinalities": [3, 3]}})")); }) ==
          ErrorCode::config_invalid);
}

TEST_CASE("canonical config is stable under key order and explicit defaults")
{
    const auto a = parse_experiment_config(json::parse(R"({"kind": "krr", "params": {"points": 10, "c": 0.1}})"));
    const auto b = parse_experiment_config(json::parse(R"({"params": {}, "kind": "krr"})"));
    CHECK(canonical_config(a).dump() == canonical_config(b).dump());
    const auto c = parse_experiment_config(json::parse(R"({"kind": "krr", "params": {"points": 11}})"));
    CHECK(canonical_config(a).dump() != canonical_config(c).dump());
    // normalized params parse again to the same thing
    const auto again = parse_experiment_config(canonical_config(a));
    CHECK(again.params == a.params);
}

TEST_CASE("sweep defaults")
{
    const SemIlSweepParams p;
    CHECK(p.generator.space == FactorSpace({10, 10, 10, 8}));
    CHECK(p.generator.noise_space == FactorSpace({10, 10}));
    CHECK(p.generator.label_noise_sigma == 0.2);
    CHECK(p.model.generations == 4);
    const auto c = parse_experiment_config(json::parse(R"({"kind": "sem_il_sweep"})"));
    CHECK(c.sem_il_sweep().variants.size() == 5);
    CHECK(c.params.at("noise_cardinalities") == json::array({10, 10}));
}

TEST_CASE("census tables")
{
    const Table census = census_table(CensusParams{});
    CHECK(census.rows.size() == 256);
    const Table classes = census_class_counts(census);
    REQUIRE(classes.rows.size() == 4);
    CHECK(std::get<std::int64_t>(classes.rows[1][1]) == 228);
    CHECK(std::get<std::int64_t>(classes.rows[3][1]) == 8);
    double mass = 0.0;
    for (const auto& r : classes.rows)
        mass += std::get<double>(r[2]);
    CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("bayes and krr tables")
{
    BayesIlParams bp;
    bp.il.generations = 3;
    const Table b = bayes_il_table(bp, 0);
    CHECK(b.rows.size() == 9);
    bp.ablations = false;
    CHECK(bayes_il_table(bp, 0).rows.size() == 3);

    Table active;
    const Table k = krr_table(KrrParams{}, 1, &active);
    CHECK(k.rows.size() == 100);
    CHECK(active.rows.size() == 10);
    CHECK(to_csv(krr_table(KrrParams{}, 1)) == to_csv(k));
}

TEST_CASE("run_experiment writes files and a manifest")
{
    ExperimentConfig c = parse_experiment_config(json::parse(R"({"kind": "krr", "seeds": [0, 1, 2]})"));
    c.output_dir = scratch("krr");
    const RunManifest m = run_experiment(c, 2);
    CHECK(m.all_ok());
    CHECK(m.runs.size() == 3);
    CHECK(std::filesystem::exists(c.output_dir / "krr_seed2.csv"));
    const json manifest = json::parse(read_text_file(c.output_dir / "manifest.json"));
    CHECK(manifest["config_hash"] == fnv1a_hex(canonical_config(c).dump()));
    CHECK(manifest["runs"][1]["status"] == "ok");
    std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("failing runs are recorded without stopping the others")
{
    // the reachable residual range depends on the seed; 0.1 is out of range for some seeds only
    ExperimentConfig c = parse_experiment_config(json::parse(
        R"({"kind": "krr", "seeds": [0, 1, 2, 3, 4, 5], "params": {"kernel": "min", "schedule": "tolerance", "epsilon": 0.2, "generations": 2}})"));
    c.output_dir = scratch("partial");
    const RunManifest m = run_experiment(c, 1);
    CHECK(m.any_ok());
    CHECK_FALSE(m.all_ok());
    for (const RunStatus& r : m.runs)
        CHECK(r.ok == r.error.empty());
    std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("unwritable output directory")
{
    ExperimentConfig c = parse_experiment_config(json::parse(R"({"kind": "krr"})"));
    const auto file = scratch("blocker");
    write_text_file(file, "x");
    c.output_dir = file / "sub";
    CHECK(code_of([&] { run_experiment(c); }) == ErrorCode::io_error);
    std::filesystem::remove_all(file);
}
