#include "itlab/sem_il.hpp"

#include "itlab/errors.hpp"
#include "itlab/topsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace itlab::nn {

namespace {

// Seed streams inside one generation.
enum Stream : std::uint64_t { kInit = 0, kImitation = 1, kInteraction = 2, kGroundTruth = 3 };
constexpr std::uint64_t kCheckpointStream = 0xc0ffee;

double full_loss(const NetworkParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)
{
    return evaluate_objective(params, x, Objective{LossKind::mse, y, 0});
}

} // namespace

Eigen::MatrixXd sample_pseudo_labels(const Eigen::MatrixXd& teacher_code, int block_width, PseudoLabelMode mode,
                                     Rng& rng)
{
    require(block_width >= 1 && teacher_code.rows() % block_width == 0, ErrorCode::dimension_mismatch,
            "teacher code is not a whole number of blocks");
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(teacher_code.rows(), teacher_code.cols());
    for (Eigen::Index c = 0; c < teacher_code.cols(); ++c) {
        for (Eigen::Index k = 0; k < teacher_code.rows(); k += block_width) {
            const auto block = teacher_code.col(c).segment(k, block_width);
            Eigen::Index pick = 0;
            if (mode == PseudoLabelMode::argmax) {
                for (Eigen::Index j = 1; j < block_width; ++j)
                    if (block(j) > block(pick))
                        pick = j;
            } else {
                pick = static_cast<Eigen::Index>(
                    sample_categorical(rng, std::span<const double>(block.data(), static_cast<std::size_t>(block_width))));
            }
            labels(k + pick, c) = 1.0;
        }
    }
    return labels;
}

Eigen::MatrixXd sample_pseudo_labels(const Eigen::MatrixXd& teacher_code, int block_width, PseudoLabelMode mode,
                                     std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    return sample_pseudo_labels(teacher_code, block_width, mode, rng);
}

const char* to_string(ImitationMode mode)
{
    switch (mode) {
    case ImitationMode::sampled: return "sampled";
    case ImitationMode::argmax: return "argmax";
    case ImitationMode::continuous_mse: return "continuous_mse";
    }
    return "?";
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
  : order_(n), batch_(std::min(batch_size, n)), rng_(make_rng(seed))
{
    require(n >= 1, ErrorCode::empty_input, "nothing to sample from");
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    shuffle(rng_, order_);
}

std::vector<Eigen::Index> BatchSampler::next()
{
    std::vector<Eigen::Index> batch;
    batch.reserve(batch_);
    while (batch.size() < batch_) {
        if (pos_ == order_.size()) {
            shuffle(rng_, order_);
            pos_ = 0;
        }
        batch.push_back(order_[pos_++]);
    }
    return batch;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols)
{
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = m.col(cols[k]);
    return out;
}

PhaseResult imitation_phase(NetworkParams student, const NetworkParams& teacher, const Eigen::MatrixXd& inputs,
                            ImitationMode mode, const TrainConfig& config, ImitationProbe* probe)
{
    config.validate();
    require(student.arch == teacher.arch, ErrorCode::config_mismatch, "student and teacher differ in architecture");
    const bool student_sem = student.arch.sem.has_value();
    const bool teacher_sem = teacher.arch.sem.has_value();
    if (mode == ImitationMode::continuous_mse)
        require(student_sem == teacher_sem, ErrorCode::mode_mismatch,
                "continuous_mse needs SEM on both sides or on neither");
    else
        require(student_sem && teacher_sem, ErrorCode::mode_mismatch, "pseudo-label imitation needs SEM blocks");

    PhaseResult result{std::move(student), {}};
    NetworkParams& s = result.params;
    const auto record = [&](std::size_t step) {
        if (probe && step % probe->every == 0)
            probe->trace.push_back(forward(s, gather_columns(inputs, probe->columns)).code);
    };
    if (probe)
        require(probe->every >= 1, ErrorCode::invalid_argument, "probe interval must be >= 1");
    if (config.steps == 0) {
        record(0);
        return result;
    }

    const Eigen::MatrixXd teacher_code = forward(teacher, inputs).code;
    BatchSampler batches(static_cast<std::size_t>(inputs.cols()), config.batch_size, derive_seed(config.seed, 0));
    Rng label_rng = make_rng(derive_seed(config.seed, 1));
    result.loss_curve.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
        record(step);
        const auto idx = batches.next();
        const Eigen::MatrixXd x = gather_columns(inputs, idx);
        const Eigen::MatrixXd t = gather_columns(teacher_code, idx);
        const ForwardCache cache = forward(s, x);
        LossValue lv;
        Upstream up;
        if (mode == ImitationMode::continuous_mse) {
            lv = mse_loss(cache.code, t);
        } else {
            const auto pl_mode = mode == ImitationMode::sampled ? PseudoLabelMode::sampled : PseudoLabelMode::argmax;
            lv = multilabel_cross_entropy(cache.code, sample_pseudo_labels(t, s.arch.sem->block_width, pl_mode, label_rng));
        }
        up.d_code = std::move(lv.grad);
        sgd_step(s, backward(s, cache, up), config);
        result.loss_curve.push_back(lv.value);
    }
    record(config.steps);
    return result;
}

PhaseResult train(NetworkParams params, const Eigen::MatrixXd& inputs, const Objective& objective,
                  const TrainConfig& config)
{
    config.validate();
    require(objective.target.cols() == inputs.cols(), ErrorCode::length_mismatch, "targets do not align with inputs");
    PhaseResult result{std::move(params), {}};
    if (config.steps == 0)
        return result;
    BatchSampler batches(static_cast<std::size_t>(inputs.cols()), config.batch_size, derive_seed(config.seed, 0));
    Objective batch_obj{objective.kind, {}, objective.block_width};
    Gradients grads;
    result.loss_curve.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
        const auto idx = batches.next();
        batch_obj.target = gather_columns(objective.target, idx);
        result.loss_curve.push_back(evaluate_objective(result.params, gather_columns(inputs, idx), batch_obj, &grads));
        sgd_step(result.params, grads, config);
    }
    return result;
}

PhaseResult interaction_phase(NetworkParams params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                              const TrainConfig& config, int block_width, bool fresh_head)
{
    require(config.loss_kind != LossKind::multilabel_ce, ErrorCode::mode_mismatch,
            "the downstream loss acts on the head output");
    if (fresh_head)
        params.reinit_head(derive_seed(config.seed, 7));
    return train(std::move(params), inputs, Objective{config.loss_kind, targets, block_width}, config);
}

RepresentationMetrics representation_metrics(const Eigen::MatrixXd& codes, int block_width,
                                             const Eigen::MatrixXd* teacher,
                                             const std::vector<Eigen::MatrixXd>* trace)
{
    require(block_width >= 1 && codes.rows() % block_width == 0, ErrorCode::dimension_mismatch,
            "codes are not a whole number of blocks");
    if (teacher)
        require(teacher->rows() == codes.rows() && teacher->cols() == codes.cols(), ErrorCode::dimension_mismatch,
                "teacher codes do not align");
    if (trace) {
        require(!trace->empty(), ErrorCode::empty_trace, "empty prediction trace");
        require(teacher != nullptr, ErrorCode::invalid_argument, "learning speed needs the teacher's codes");
        for (const auto& m : *trace)
            require(m.rows() == codes.rows() && m.cols() == codes.cols(), ErrorCode::dimension_mismatch,
                    "trace entries do not align");
    }

    RepresentationMetrics out;
    const Eigen::MatrixXd& conf_src = teacher ? *teacher : codes;
    for (Eigen::Index c = 0; c < codes.cols(); ++c) {
        out.entropy.push_back(block_entropies(codes.col(c), block_width));
        std::vector<double> conf;
        std::vector<double> speed;
        const std::vector<int> arg = block_argmax(conf_src.col(c), block_width);
        for (std::size_t k = 0; k < arg.size(); ++k) {
            const Eigen::Index row = static_cast<Eigen::Index>(k) * block_width + arg[k];
            conf.push_back(-std::log(conf_src(row, c)));
            if (trace) {
                double acc = 0.0;
                for (const auto& m : *trace)
                    acc += m(row, c);
                speed.push_back(acc);
            }
        }
        out.confidence.push_back(std::move(conf));
        if (trace)
            out.learning_speed.push_back(std::move(speed));
    }
    return out;
}

double dataset_learning_speed(const std::vector<double>& loss_curve, double spacing)
{
    require(!loss_curve.empty(), ErrorCode::empty_trace, "empty loss curve");
    require(spacing > 0.0, ErrorCode::invalid_argument, "spacing must be > 0");
    double area = 0.0;
    for (std::size_t t = 1; t < loss_curve.size(); ++t)
        area += 0.5 * (loss_curve[t - 1] + loss_curve[t]) * spacing;
    if (loss_curve.size() == 1)
        area = loss_curve.front() * spacing;
    return area > 0.0 ? 1.0 / area : std::numeric_limits<double>::infinity();
}

const char* to_string(Variant v)
{
    switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::sem_only: return "sem_only";
    case Variant::il_only: return "il_only";
    case Variant::sem_il: return "sem_il";
    case Variant::given_g: return "given_g";
    }
    return "?";
}

Variant variant_from_string(const std::string& name)
{
    for (Variant v : {Variant::baseline, Variant::sem_only, Variant::il_only, Variant::sem_il, Variant::given_g})
        if (name == to_string(v))
            return v;
    fail(ErrorCode::config_invalid, "unknown variant: " + name);
}

bool variant_uses_sem(Variant v) { return v != Variant::baseline && v != Variant::il_only; }

void SemIlConfig::validate() const
{
    require(generations >= 1, ErrorCode::config_invalid, "generations must be >= 1");
    require(hidden_dim >= 1, ErrorCode::config_invalid, "hidden_dim must be >= 1");
    require(eval_every >= 1, ErrorCode::config_invalid, "eval_every must be >= 1");
    require(topsim_points >= 3, ErrorCode::config_invalid, "topsim needs at least three points");
    require(interaction.steps >= 1, ErrorCode::config_invalid, "interaction needs at least one step");
    sem.validate();
    imitation.validate();
    interaction.validate();
}

std::size_t SemIlConfig::effective_generations() const
{
    return variant == Variant::il_only || variant == Variant::sem_il ? generations : 1;
}

Eigen::MatrixXd inputs_matrix(const LabeledDataset& data)
{
    require(data.size() >= 1, ErrorCode::empty_input, "empty dataset");
    const auto d = static_cast<Eigen::Index>(data.input_dim());
    Eigen::MatrixXd x(d, static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
        require(static_cast<Eigen::Index>(data.inputs[i].size()) == d, ErrorCode::dimension_mismatch,
                "inputs differ in width");
        x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(data.inputs[i].data(), d);
    }
    return x;
}

Eigen::MatrixXd labels_matrix(const LabeledDataset& data)
{
    Eigen::MatrixXd y(1, static_cast<Eigen::Index>(data.labels.size()));
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        y(0, static_cast<Eigen::Index>(i)) = data.labels[i];
    return y;
}

Eigen::MatrixXd factor_targets(const std::vector<FactorTuple>& tuples, int block_width)
{
    require(!tuples.empty(), ErrorCode::empty_input, "no tuples");
    const auto m = static_cast<Eigen::Index>(tuples.front().size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m * block_width, static_cast<Eigen::Index>(tuples.size()));
    for (std::size_t c = 0; c < tuples.size(); ++c) {
        require(static_cast<Eigen::Index>(tuples[c].size()) == m, ErrorCode::length_mismatch, "tuples differ in length");
        for (Eigen::Index k = 0; k < m; ++k) {
            const int v = tuples[c][static_cast<std::size_t>(k)];
            require(v >= 0 && v < block_width, ErrorCode::config_mismatch, "factor value exceeds the block width");
            t(k * block_width + v, static_cast<Eigen::Index>(c)) = 1.0;
        }
    }
    return t;
}

SemIlData make_sem_il_data(const GeneratorConfig& config_in)
{
    GeneratorConfig config = config_in;
    config.validate();
    const SupportSplit split = split_support(config.space, config.split_ratio, derive_seed(config.seed, 0));
    require(!split.test_empty, ErrorCode::config_invalid, "the test support is empty");
    SemIlData data;
    data.space = config.space;
    const LabeledDataset train = build_dataset(config, split.train, 1);
    const LabeledDataset test = build_dataset(config, split.test, 2);
    data.train_x = inputs_matrix(train);
    data.train_y = labels_matrix(train);
    data.test_x = inputs_matrix(test);
    data.test_y = labels_matrix(test);
    data.train_g = train.factor_tuples;
    data.test_g = test.factor_tuples;
    return data;
}

double representation_topsim(const NetworkParams& params, const Eigen::MatrixXd& inputs,
                             const std::vector<FactorTuple>& factors)
{
    const Eigen::MatrixXd code = forward(params, inputs).code;
    if (params.arch.sem) {
        std::vector<FactorTuple> codes;
        for (Eigen::Index c = 0; c < code.cols(); ++c)
            codes.push_back(block_argmax(code.col(c), params.arch.sem->block_width));
        return topological_similarity(codes, factors);
    }
    std::vector<std::vector<double>> codes;
    for (Eigen::Index c = 0; c < code.cols(); ++c)
        codes.emplace_back(code.col(c).data(), code.col(c).data() + code.rows());
    return topological_similarity(codes, factors, CodeMetric::cosine);
}

namespace {

Architecture architecture_for(const SemIlConfig& config, const SemIlData& data)
{
    const int input_dim = static_cast<int>(data.train_x.rows());
    if (variant_uses_sem(config.variant))
        return Architecture::with_sem(input_dim, 1, config.sem, config.hidden_dim);
    return Architecture::plain(input_dim, config.sem.code_dim(), 1, config.hidden_dim);
}

struct Probe {
    Eigen::MatrixXd x;
    std::vector<FactorTuple> g;
};

Probe topsim_probe(const SemIlConfig& config, const SemIlData& data)
{
    // the test split is already a random subset of the support
    const std::size_t n = std::min<std::size_t>(config.topsim_points, data.test_g.size());
    std::vector<Eigen::Index> cols(n);
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    return {gather_columns(data.test_x, cols), {data.test_g.begin(), data.test_g.begin() + static_cast<std::ptrdiff_t>(n)}};
}

void summarize(GenerationMetrics& gm, const NetworkParams& params, const SemIlData& data, const Probe& probe)
{
    gm.train_loss = full_loss(params, data.train_x, data.train_y);
    gm.test_loss = full_loss(params, data.test_x, data.test_y);
    gm.topsim = representation_topsim(params, probe.x, probe.g);
    gm.mean_entropy = std::numeric_limits<double>::quiet_NaN();
    if (params.arch.sem) {
        const Eigen::MatrixXd code = forward(params, probe.x).code;
        const RepresentationMetrics rm = representation_metrics(code, params.arch.sem->block_width);
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s < rm.entropy.size(); ++s) {
            for (std::size_t k = 0; k < rm.entropy[s].size(); ++k) {
                acc += rm.entropy[s][k];
                ++count;
                gm.confidences.push_back(rm.confidence[s][k]);
            }
        }
        gm.mean_entropy = acc / static_cast<double>(count);
    }
}

} // namespace

SemIlRun run_sem_il(const SemIlConfig& config, const SemIlData& data)
{
    config.validate();
    require(data.train_x.cols() >= 1 && data.test_x.cols() >= 1, ErrorCode::empty_input, "empty train or test set");
    require(data.train_x.rows() == data.test_x.rows(), ErrorCode::dimension_mismatch, "train and test widths differ");
    if (config.variant == Variant::given_g) {
        require(config.sem.num_blocks == data.space.num_factors(), ErrorCode::config_invalid,
                "given_g needs one block per factor");
        for (int c : data.space.cardinalities())
            require(c <= config.sem.block_width, ErrorCode::config_invalid, "given_g needs block_width >= every cardinality");
    }

    const Architecture arch = architecture_for(config, data);
    const std::size_t generations = config.effective_generations();
    TrainConfig interaction = config.interaction;
    interaction.loss_kind = LossKind::mse;
    if (generations == 1 && config.match_total_budget)
        interaction.steps *= config.generations;
    const Probe probe = topsim_probe(config, data);
    const NetworkParams checkpoint = NetworkParams::init(arch, derive_seed(config.seed, kCheckpointStream));

    SemIlRun run;
    std::optional<NetworkParams> teacher;
    std::size_t step = 0;
    for (std::size_t t = 0; t < generations; ++t) {
        const std::uint64_t gen_seed = derive_seed(config.seed, t);
        GenerationMetrics gm;
        gm.generation = t;

        NetworkParams student = NetworkParams::init(arch, derive_seed(gen_seed, kInit));
        if (config.student_init == StudentInit::fixed_checkpoint)
            student = checkpoint;
        else if (config.student_init == StudentInit::teacher_copy && teacher)
            student = *teacher;

        const auto log_imitation = [&](const std::vector<double>& losses) {
            for (std::size_t k = 0; k < losses.size(); k += config.eval_every) {
                const std::size_t end = std::min(losses.size(), k + config.eval_every);
                const double avg = std::accumulate(losses.begin() + static_cast<std::ptrdiff_t>(k),
                                                   losses.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
                                   static_cast<double>(end - k);
                gm.curve.push_back({t, step + end, "imitation", avg});
            }
            step += losses.size();
        };

        if (config.variant == Variant::given_g) {
            TrainConfig gt = config.imitation;
            gt.seed = derive_seed(gen_seed, kGroundTruth);
            const Objective obj{LossKind::multilabel_ce, factor_targets(data.train_g, config.sem.block_width), 0};
            PhaseResult r = train(std::move(student), data.train_x, obj, gt);
            log_imitation(r.loss_curve);
            student = std::move(r.params);
        } else if (teacher && config.imitation.steps > 0) {
            TrainConfig im = config.imitation;
            im.seed = derive_seed(gen_seed, kImitation);
            const ImitationMode mode = config.variant == Variant::il_only ? ImitationMode::continuous_mse
                                       : config.pseudo_labels == PseudoLabelMode::sampled ? ImitationMode::sampled
                                                                                           : ImitationMode::argmax;
            PhaseResult r = imitation_phase(std::move(student), *teacher, data.train_x, mode, im);
            log_imitation(r.loss_curve);
            student = std::move(r.params);
        }

        // interaction in chunks so the curve can be evaluated on full splits
        const std::uint64_t inter_seed = derive_seed(gen_seed, kInteraction);
        student.reinit_head(derive_seed(inter_seed, 7));
        std::size_t done = 0;
        for (std::size_t chunk = 0; done < interaction.steps; ++chunk) {
            TrainConfig part = interaction;
            part.steps = std::min(config.eval_every, interaction.steps - done);
            part.seed = derive_seed(inter_seed, chunk);
            PhaseResult r = interaction_phase(std::move(student), data.train_x, data.train_y, part, 0, false);
            student = std::move(r.params);
            done += part.steps;
            step += part.steps;
            gm.curve.push_back({t, step, "train", full_loss(student, data.train_x, data.train_y)});
            gm.curve.push_back({t, step, "test", full_loss(student, data.test_x, data.test_y)});
        }
        require(student.all_finite(), ErrorCode::domain_error, "training diverged (non-finite parameters)");

        summarize(gm, student, data, probe);
        run.generations.push_back(std::move(gm));
        teacher = std::move(student);
    }
    run.final_params = std::move(*teacher);
    return run;
}

ConfidenceSpeedSample confidence_speed_experiment(const SemIlConfig& config, const SemIlData& data,
                                                  std::size_t probe_points, std::size_t trace_every)
{
    config.validate();
    require(probe_points >= 2 && probe_points <= static_cast<std::size_t>(data.train_x.cols()),
            ErrorCode::invalid_argument, "probe_points must lie in [2, train size]");
    const Architecture arch = Architecture::with_sem(static_cast<int>(data.train_x.rows()), 1, config.sem,
                                                     config.hidden_dim);
    TrainConfig inter = config.interaction;
    inter.loss_kind = LossKind::mse;
    inter.seed = derive_seed(config.seed, kInteraction);
    const NetworkParams teacher =
        interaction_phase(NetworkParams::init(arch, derive_seed(config.seed, kInit)), data.train_x, data.train_y, inter)
            .params;

    ImitationProbe probe;
    probe.every = trace_every;
    probe.columns.resize(probe_points);
    std::iota(probe.columns.begin(), probe.columns.end(), Eigen::Index{0});
    TrainConfig im = config.imitation;
    im.seed = derive_seed(config.seed, kImitation);
    const ImitationMode mode =
        config.pseudo_labels == PseudoLabelMode::sampled ? ImitationMode::sampled : ImitationMode::argmax;
    const NetworkParams student = NetworkParams::init(arch, derive_seed(derive_seed(config.seed, 1), kInit));
    const PhaseResult r = imitation_phase(student, teacher, data.train_x, mode, im, &probe);

    const Eigen::MatrixXd probe_x = gather_columns(data.train_x, probe.columns);
    const Eigen::MatrixXd teacher_code = forward(teacher, probe_x).code;
    const Eigen::MatrixXd student_code = forward(r.params, probe_x).code;
    const RepresentationMetrics rm =
        representation_metrics(student_code, config.sem.block_width, &teacher_code, &probe.trace);

    ConfidenceSpeedSample out;
    for (std::size_t s = 0; s < rm.confidence.size(); ++s) {
        out.confidence.insert(out.confidence.end(), rm.confidence[s].begin(), rm.confidence[s].end());
        out.speed.insert(out.speed.end(), rm.learning_speed[s].begin(), rm.learning_speed[s].end());
    }
    return out;
}

MappingSpeed mapping_learning_speed(const Mapping& mapping, const TrainConfig& config, int hidden_dim, int code_dim)
{
    require(mapping.target().is_uniform(), ErrorCode::unequal_cardinalities, "target blocks need one width");
    const LabeledDataset data = mapping_dataset(mapping);
    const int width = mapping.target().cardinality(0);
    const Eigen::MatrixXd x = inputs_matrix(data);
    const Objective obj{LossKind::cross_entropy, factor_targets(data.block_labels, width), width};
    const Architecture arch = Architecture::plain(static_cast<int>(x.rows()), code_dim,
                                                  static_cast<int>(obj.target.rows()), hidden_dim);
    TrainConfig full = config;
    full.batch_size = static_cast<std::size_t>(x.cols());
    full.loss_kind = LossKind::cross_entropy;
    PhaseResult r = train(NetworkParams::init(arch, derive_seed(config.seed, kInit)), x, obj, full);
    MappingSpeed out;
    out.loss_curve = std::move(r.loss_curve);
    out.speed = dataset_learning_speed(out.loss_curve);
    return out;
}

} // namespace itlab::nn
