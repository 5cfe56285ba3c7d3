#include "itlab/bayes_il.hpp"

#include "itlab/errors.hpp"
#include "itlab/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace itlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& values)
{
    double hi = kNegInf;
    for (double v : values)
        hi = std::max(hi, v);
    if (hi == kNegInf)
        return kNegInf;
    double acc = 0.0;
    for (double v : values)
        acc += std::exp(v - hi);
    return hi + std::log(acc);
}

// Seed streams inside one generation.
enum Phase : std::uint64_t { kInteraction = 0, kTransmission = 1 };

} // namespace

MappingUniverse::MappingUniverse(const FactorSpace& space, const NamingTable& names, std::uint64_t cap)
  : space_(space), mappings_(enumerate_all_mappings(space, cap))
{
    const std::size_t n = points();
    classes_.reserve(mappings_.size());
    coding_lengths_.reserve(mappings_.size());
    outputs_.reserve(mappings_.size() * n);
    for (const Mapping& m : mappings_) {
        const CodedGrammar coded = grammar_and_coding_length(m, names);
        classes_.push_back(coded.mapping_class);
        coding_lengths_.push_back(coded.coding_length);
        outputs_.insert(outputs_.end(), m.table().begin(), m.table().end());
    }
}

std::size_t MappingUniverse::index_of(const Mapping& mapping) const
{
    require(mapping.source() == space_ && mapping.target() == space_, ErrorCode::shape_mismatch,
            "mapping is not over this universe's space");
    // lexicographic enumeration: the table is the base-n digit string of the index
    std::size_t index = 0;
    for (std::size_t t : mapping.table())
        index = index * points() + t;
    return index;
}

Posterior::Posterior(std::vector<double> log_weights) : log_theta_(std::move(log_weights))
{
    require(!log_theta_.empty(), ErrorCode::empty_input, "empty posterior");
    const double log_z = log_sum_exp(log_theta_);
    require(log_z != kNegInf && std::isfinite(log_z), ErrorCode::all_zero_mass, "posterior has no mass left");
    for (double& v : log_theta_)
        v -= log_z;
}

Posterior Posterior::from_prior(const MappingUniverse& universe, PriorMode mode)
{
    std::vector<double> log_weights(universe.size(), 0.0);
    if (mode == PriorMode::coding_length) {
        for (std::size_t i = 0; i < universe.size(); ++i)
            log_weights[i] = -static_cast<double>(universe.coding_length(i)) * std::log(2.0);
    }
    return Posterior(std::move(log_weights));
}

std::vector<double> Posterior::probabilities() const
{
    std::vector<double> p(log_theta_.size());
    std::transform(log_theta_.begin(), log_theta_.end(), p.begin(), [](double v) { return std::exp(v); });
    return p;
}

double Posterior::probability(std::size_t i) const { return std::exp(log_theta_.at(i)); }

std::size_t Posterior::support_size() const
{
    return static_cast<std::size_t>(
        std::count_if(log_theta_.begin(), log_theta_.end(), [](double v) { return v != kNegInf; }));
}

std::size_t Posterior::mode() const
{
    return static_cast<std::size_t>(std::max_element(log_theta_.begin(), log_theta_.end()) - log_theta_.begin());
}

std::array<double, kNumMappingClasses> Posterior::class_mass(const MappingUniverse& universe) const
{
    require(universe.size() == size(), ErrorCode::length_mismatch, "posterior does not match the universe");
    std::array<double, kNumMappingClasses> mass{};
    for (std::size_t i = 0; i < size(); ++i)
        mass[static_cast<std::size_t>(universe.mapping_class(i))] += std::exp(log_theta_[i]);
    return mass;
}

SignalDataset mapping_graph(const Mapping& mapping, std::size_t copies)
{
    SignalDataset data;
    for (std::size_t c = 0; c < copies; ++c)
        for (std::size_t x = 0; x < mapping.source().total_points(); ++x)
            data.push_back({x, mapping(x)});
    return data;
}

Posterior bayes_update(const MappingUniverse& universe, const Posterior& posterior, const SignalDataset& data,
                       double likelihood_noise)
{
    require(posterior.size() == universe.size(), ErrorCode::length_mismatch, "posterior does not match the universe");
    require(likelihood_noise >= 0.0 && likelihood_noise < 1.0, ErrorCode::invalid_argument,
            "likelihood noise must lie in [0, 1)");
    if (data.empty())
        return posterior;

    const std::size_t n = universe.points();
    for (const SignalPair& p : data)
        require(p.x < n && p.msg < n, ErrorCode::invalid_argument, "signal pair out of range");

    const double log_agree = std::log1p(-likelihood_noise);
    const double log_disagree =
        n > 1 ? std::log(likelihood_noise / static_cast<double>(n - 1)) : kNegInf; // log(0) = -inf when eps = 0

    std::vector<double> log_weights = posterior.log_theta();
    for (std::size_t i = 0; i < universe.size(); ++i) {
        if (log_weights[i] == kNegInf)
            continue;
        std::size_t agree = 0;
        for (const SignalPair& p : data)
            agree += universe.output(i, p.x) == p.msg ? 1 : 0;
        const std::size_t disagree = data.size() - agree;
        double ll = static_cast<double>(agree) * log_agree;
        if (disagree > 0)
            ll += static_cast<double>(disagree) * log_disagree;
        log_weights[i] += ll;
    }
    if (log_sum_exp(log_weights) == kNegInf)
        fail(ErrorCode::all_zero_mass, "no mapping is consistent with the data");
    return Posterior(std::move(log_weights));
}

SignalDataset transmit_dataset(const MappingUniverse& universe, const Posterior& posterior,
                               std::span<const std::size_t> inputs, std::size_t n, std::uint64_t seed)
{
    require(n >= 1, ErrorCode::invalid_argument, "transmission needs n >= 1");
    require(!inputs.empty(), ErrorCode::empty_input, "transmission needs inputs");
    Rng rng = make_rng(seed);
    const std::vector<double> p = posterior.probabilities();
    const CategoricalSampler draw(p);
    SignalDataset data;
    data.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t x = inputs[uniform_index(rng, inputs.size())];
        const std::size_t l = draw(rng);
        data.push_back({x, universe.output(l, x)});
    }
    return data;
}

InteractionOutcome lewis_interaction(const MappingUniverse& universe, const Posterior& speaker,
                                     const Posterior& listener, std::size_t rounds, std::size_t num_candidates,
                                     std::uint64_t seed)
{
    const std::size_t n = universe.points();
    require(rounds >= 1, ErrorCode::invalid_argument, "the game needs at least one round");
    require(num_candidates >= 2 && num_candidates <= n, ErrorCode::invalid_argument,
            "num_candidates must lie in [2, total_points]");

    Rng rng = make_rng(seed);
    const std::vector<double> ps = speaker.probabilities();
    const std::vector<double> pl = listener.probabilities();
    const CategoricalSampler draw_speaker(ps);
    const CategoricalSampler draw_listener(pl);

    InteractionOutcome out;
    out.rounds = rounds;
    std::vector<std::size_t> others(n - 1);
    std::vector<std::size_t> preimage;
    for (std::size_t r = 0; r < rounds; ++r) {
        const std::size_t x = uniform_index(rng, n);

        // target plus (num_candidates - 1) distinct distractors, sorted
        std::size_t k = 0;
        for (std::size_t y = 0; y < n; ++y)
            if (y != x)
                others[k++] = y;
        for (std::size_t i = 0; i + 1 < num_candidates; ++i)
            std::swap(others[i], others[i + uniform_index(rng, others.size() - i)]);
        std::vector<std::size_t> candidates(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(num_candidates - 1));
        candidates.push_back(x);
        std::sort(candidates.begin(), candidates.end());

        const std::size_t msg = universe.output(draw_speaker(rng), x);
        const std::size_t l = draw_listener(rng);
        preimage.clear();
        for (std::size_t y : candidates)
            if (universe.output(l, y) == msg)
                preimage.push_back(y);
        const std::vector<std::size_t>& pool = preimage.empty() ? candidates : preimage;
        const std::size_t guess = pool[uniform_index(rng, pool.size())];

        if (guess == x) {
            out.successes.push_back({x, msg});
            out.candidates.push_back(std::move(candidates));
        }
    }
    out.success_rate = static_cast<double>(out.successes.size()) / static_cast<double>(rounds);
    return out;
}

Posterior success_update(const MappingUniverse& universe, const Posterior& posterior,
                         const InteractionOutcome& outcome)
{
    require(outcome.candidates.size() == outcome.successes.size(), ErrorCode::length_mismatch,
            "each success needs its candidate set");
    std::vector<double> log_weights = posterior.log_theta();
    for (std::size_t i = 0; i < universe.size(); ++i) {
        if (log_weights[i] == kNegInf)
            continue;
        double ll = 0.0;
        for (std::size_t s = 0; s < outcome.successes.size(); ++s) {
            const std::size_t x = outcome.successes[s].x;
            const std::size_t code = universe.output(i, x);
            std::size_t ambiguity = 0;
            for (std::size_t y : outcome.candidates[s])
                ambiguity += universe.output(i, y) == code ? 1 : 0;
            ll -= std::log(static_cast<double>(ambiguity));
        }
        log_weights[i] += ll;
    }
    return Posterior(std::move(log_weights));
}

void ILConfig::validate(const MappingUniverse& universe) const
{
    require(generations >= 1, ErrorCode::config_invalid, "generations must be >= 1");
    require(dataset_size >= 1, ErrorCode::config_invalid, "dataset_size must be >= 1");
    require(likelihood_noise >= 0.0 && likelihood_noise < 0.5, ErrorCode::config_invalid,
            "likelihood_noise must lie in [0, 0.5)");
    require(space == universe.space(), ErrorCode::config_invalid, "config space differs from the universe");
    if (interaction_enabled) {
        require(interaction_rounds >= 1, ErrorCode::config_invalid, "interaction_rounds must be >= 1");
        require(num_candidates >= 2 && num_candidates <= universe.points(), ErrorCode::config_invalid,
                "num_candidates must lie in [2, total_points]");
    }
}

std::vector<GenerationRecord> run_iterated_learning(const MappingUniverse& universe, const ILConfig& config,
                                                    const SignalDataset& initial_data)
{
    config.validate(universe);
    const Posterior prior = Posterior::from_prior(universe, config.prior_mode);
    std::vector<std::size_t> inputs(universe.points());
    for (std::size_t x = 0; x < inputs.size(); ++x)
        inputs[x] = x;

    std::vector<GenerationRecord> records;
    records.reserve(config.generations);
    SignalDataset data = initial_data;
    for (std::size_t t = 0; t < config.generations; ++t) {
        const std::uint64_t gen_seed = derive_seed(config.seed, t);
        Posterior agent = bayes_update(universe, prior, data, config.likelihood_noise);

        GenerationRecord rec;
        rec.generation = t;
        if (config.interaction_enabled) {
            // listener is a copy of the speaker's posterior
            const InteractionOutcome game =
                lewis_interaction(universe, agent, agent, config.interaction_rounds, config.num_candidates,
                                  derive_seed(gen_seed, kInteraction));
            rec.game_success_rate = game.success_rate;
            agent = config.interaction_likelihood == InteractionLikelihood::success
                        ? success_update(universe, agent, game)
                        : bayes_update(universe, agent, game.successes, config.likelihood_noise);
        }
        rec.class_mass = agent.class_mass(universe);
        rec.dominant_mapping = agent.mode();
        records.push_back(rec);

        data = transmit_dataset(universe, agent, inputs, config.dataset_size, derive_seed(gen_seed, kTransmission));
    }
    return records;
}

std::size_t first_of_class(const MappingUniverse& universe, MappingClass cls)
{
    for (std::size_t i = 0; i < universe.size(); ++i)
        if (universe.mapping_class(i) == cls)
            return i;
    fail(ErrorCode::invalid_argument, "no mapping of the requested class");
}

} // namespace itlab
