#pragma once

#include "itlab/factor_space.hpp"
#include "itlab/mappings.hpp"
#include "itlab/network.hpp"
#include "itlab/random.hpp"
#include "itlab/synth_data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace itlab::nn {

enum class PseudoLabelMode { sampled, argmax };

/// One-hot pseudo labels per block, columns align with teacher_code. Sampled
/// mode draws from each block's categorical; argmax takes the largest entry
/// with ties to the lowest index.
Eigen::MatrixXd sample_pseudo_labels(const Eigen::MatrixXd& teacher_code, int block_width, PseudoLabelMode mode,
                                     Rng& rng);
Eigen::MatrixXd sample_pseudo_labels(const Eigen::MatrixXd& teacher_code, int block_width, PseudoLabelMode mode,
                                     std::uint64_t seed);

enum class ImitationMode { sampled, argmax, continuous_mse };

const char* to_string(ImitationMode mode);

/// Epoch-shuffled minibatch indices.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
    std::vector<Eigen::Index> next();

private:
    std::vector<Eigen::Index> order_;
    std::size_t batch_;
    std::size_t pos_ = 0;
    Rng rng_;
};

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols);

/// Student codes on a fixed probe set, recorded every `every` steps
/// (step 0 included).
struct ImitationProbe {
    std::vector<Eigen::Index> columns;
    std::size_t every = 10;
    std::vector<Eigen::MatrixXd> trace;
};

struct PhaseResult {
    NetworkParams params;
    std::vector<double> loss_curve; ///< minibatch loss per step
};

/// Student learns the teacher's code on `inputs`: cross-entropy against
/// freshly drawn pseudo labels each step, or squared error against the
/// teacher code (continuous_mse).
PhaseResult imitation_phase(NetworkParams student, const NetworkParams& teacher, const Eigen::MatrixXd& inputs,
                            ImitationMode mode, const TrainConfig& config, ImitationProbe* probe = nullptr);

/// Fresh head (seeded by config.seed), then joint training on the
/// downstream objective. targets: one column per input.
PhaseResult interaction_phase(NetworkParams params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                              const TrainConfig& config, int block_width = 0, bool fresh_head = true);

/// Generic minibatch SGD on an objective whose targets are columns aligned
/// with inputs.
PhaseResult train(NetworkParams params, const Eigen::MatrixXd& inputs, const Objective& objective,
                  const TrainConfig& config);

struct RepresentationMetrics {
    std::vector<std::vector<double>> entropy;        ///< [sample][block]
    std::vector<std::vector<double>> confidence;     ///< -log max prob of the teacher (or of the codes)
    std::vector<std::vector<double>> learning_speed; ///< sum over the trace of the student's prob of the teacher's index
};

/// codes: SEM codes per sample (columns). teacher: optional teacher codes on
/// the same samples. trace: optional student codes over time; needs a teacher
/// (the designated index is the teacher's argmax).
RepresentationMetrics representation_metrics(const Eigen::MatrixXd& codes, int block_width,
                                             const Eigen::MatrixXd* teacher = nullptr,
                                             const std::vector<Eigen::MatrixXd>* trace = nullptr);

/// Inverse of the trapezoidal area under a loss curve sampled every
/// `spacing` steps.
double dataset_learning_speed(const std::vector<double>& loss_curve, double spacing = 1.0);

enum class Variant { baseline, sem_only, il_only, sem_il, given_g };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);
bool variant_uses_sem(Variant v);

enum class StudentInit { random, fixed_checkpoint, teacher_copy };

struct SemIlConfig {
    Variant variant = Variant::sem_il;
    PseudoLabelMode pseudo_labels = PseudoLabelMode::sampled;
    std::size_t generations = 5;
    int hidden_dim = 64;
    SemConfig sem{4, 10, 1.0};
    TrainConfig imitation{0.1, 5e-4, 2000, 32, LossKind::multilabel_ce, 0};
    TrainConfig interaction{0.1, 5e-4, 4000, 32, LossKind::mse, 0};
    /// baseline/sem_only/given_g get generations x interaction steps in their one generation
    bool match_total_budget = true;
    StudentInit student_init = StudentInit::random;
    std::size_t eval_every = 500;
    std::size_t topsim_points = 600;
    std::uint64_t seed = 0;

    void validate() const;
    /// Generations actually run by this variant.
    std::size_t effective_generations() const;
};

struct SemIlData {
    FactorSpace space = FactorSpace({2, 2});
    Eigen::MatrixXd train_x;
    Eigen::MatrixXd train_y; ///< 1 x n
    Eigen::MatrixXd test_x;
    Eigen::MatrixXd test_y;
    std::vector<FactorTuple> train_g;
    std::vector<FactorTuple> test_g;
};

/// Split the support, build train and test sets from one generator config.
SemIlData make_sem_il_data(const GeneratorConfig& config);

Eigen::MatrixXd inputs_matrix(const LabeledDataset& data);
Eigen::MatrixXd labels_matrix(const LabeledDataset& data);
/// Concatenated one-hot per tuple, each block block_width wide.
Eigen::MatrixXd factor_targets(const std::vector<FactorTuple>& tuples, int block_width);

struct CurvePoint {
    std::size_t generation = 0;
    std::size_t step = 0; ///< cumulative over the run
    std::string split;    ///< imitation, train, test
    double loss = 0.0;
};

struct GenerationMetrics {
    std::size_t generation = 0;
    std::vector<CurvePoint> curve;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double topsim = 0.0;
    double mean_entropy = 0.0; ///< NaN without SEM
    std::vector<double> confidences; ///< [sample * num_blocks + block] on the topsim probe set
};

struct SemIlRun {
    std::vector<GenerationMetrics> generations;
    NetworkParams final_params;
};

SemIlRun run_sem_il(const SemIlConfig& config, const SemIlData& data);

/// Topsim of a network's code on the given points: per-block argmax with
/// Hamming for SEM nets, cosine on the raw code otherwise.
double representation_topsim(const NetworkParams& params, const Eigen::MatrixXd& inputs,
                             const std::vector<FactorTuple>& factors);

/// Teacher-confidence vs student-speed pairs from one imitation phase.
struct ConfidenceSpeedSample {
    std::vector<double> confidence; ///< -log p_max of the teacher
    std::vector<double> speed;      ///< sum over the trace of the student's prob of the teacher's argmax
};

/// Trains a teacher with one interaction phase, then records a fresh
/// student's imitation on probe_points training inputs.
ConfidenceSpeedSample confidence_speed_experiment(const SemIlConfig& config, const SemIlData& data,
                                                  std::size_t probe_points, std::size_t trace_every);

struct MappingSpeed {
    std::vector<double> loss_curve;
    double speed = 0.0;
};

/// Full-batch training of a fresh plain network on one mapping dataset with
/// the multi-block cross-entropy.
MappingSpeed mapping_learning_speed(const Mapping& mapping, const TrainConfig& config, int hidden_dim = 64,
                                    int code_dim = 16);

} // namespace itlab::nn
