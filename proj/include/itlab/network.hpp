#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace itlab::nn {

/// Simplicial embedding bottleneck: num_blocks softmax blocks of block_width
/// entries each, at temperature tau.
struct SemConfig {
    int num_blocks = 4;
    int block_width = 10;
    double temperature = 1.0;

    void validate() const;
    int code_dim() const noexcept { return num_blocks * block_width; }
    bool operator==(const SemConfig&) const = default;
};

/// input -> hidden (ReLU) -> code logits -> [per-block softmax] -> head.
/// Without SEM the code logits feed the head directly.
struct Architecture {
    int input_dim = 1;
    int hidden_dim = 64;
    int code_dim = 40;
    int output_dim = 1;
    std::optional<SemConfig> sem;

    static Architecture with_sem(int input_dim, int output_dim, SemConfig sem, int hidden_dim = 64);
    static Architecture plain(int input_dim, int code_dim, int output_dim, int hidden_dim = 64);

    void validate() const;
    bool operator==(const Architecture&) const = default;
};

struct Layer {
    Eigen::MatrixXd w; ///< out x in
    Eigen::VectorXd b;
};

using Gradients = std::vector<Layer>;

/// Layers in order: hidden, code, head.
struct NetworkParams {
    Architecture arch;
    std::vector<Layer> layers;
    std::uint64_t revision = 0; ///< bumped on every mutation through the API

    static constexpr std::size_t kHidden = 0;
    static constexpr std::size_t kCode = 1;
    static constexpr std::size_t kHead = 2;

    /// Glorot-uniform weights, zero biases.
    static NetworkParams init(const Architecture& arch, std::uint64_t seed);
    void reinit_head(std::uint64_t seed);
    void touch() noexcept { ++revision; }

    std::size_t num_parameters() const;
    bool all_finite() const;
    Gradients zeros_like() const;
};

/// Intermediates of a batch forward pass; columns are samples.
struct ForwardCache {
    std::uint64_t revision = 0;
    const NetworkParams* owner = nullptr;
    Eigen::MatrixXd input;
    Eigen::MatrixXd hidden_pre;
    Eigen::MatrixXd hidden;
    Eigen::MatrixXd logits;
    Eigen::MatrixXd code;   ///< softmax blocks with SEM, else the logits
    Eigen::MatrixXd output;

    Eigen::Index batch() const noexcept { return input.cols(); }
};

/// Column-wise per-block softmax at temperature tau (max-shifted).
Eigen::MatrixXd block_softmax(const Eigen::MatrixXd& logits, int block_width, double tau);

ForwardCache forward(const NetworkParams& params, const Eigen::MatrixXd& inputs);
ForwardCache forward(const NetworkParams& params, const Eigen::VectorXd& input);

/// Loss gradients arriving at the head output and/or at the code. Either
/// matrix may be empty.
struct Upstream {
    Eigen::MatrixXd d_output;
    Eigen::MatrixXd d_code;
};

/// Exact backprop. Throws stale_cache if params changed since the forward pass.
Gradients backward(const NetworkParams& params, const ForwardCache& cache, const Upstream& upstream);

enum class LossKind { mse, cross_entropy, multilabel_ce };

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

/// mse and cross_entropy act on the head output; multilabel_ce on the SEM
/// code. cross_entropy softmaxes the head output per block of block_width;
/// targets for both CE kinds are concatenated one-hot (or soft) blocks.
struct Objective {
    LossKind kind = LossKind::mse;
    Eigen::MatrixXd target; ///< columns align with inputs
    int block_width = 0;    ///< cross_entropy only
};

struct LossValue {
    double value = 0.0;
    Eigen::MatrixXd grad;
};

/// mean over samples of sum_k (pred_k - target_k)^2
LossValue mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
/// mean over samples of sum over blocks of -t^T log softmax(logits)
LossValue block_cross_entropy(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target, int block_width);
/// mean over samples of -sum_i g_i^T log z_i, z already on the simplex
LossValue multilabel_cross_entropy(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& target);

/// Loss of a batch; fills gradients when requested.
double evaluate_objective(const NetworkParams& params, const Eigen::MatrixXd& inputs, const Objective& objective,
                          Gradients* grads = nullptr);

struct TrainConfig {
    double learning_rate = 0.05;
    double weight_decay = 5e-4;
    std::size_t steps = 1000;
    std::size_t batch_size = 32;
    LossKind loss_kind = LossKind::mse;
    std::uint64_t seed = 0;

    void validate() const;
};

/// p <- p - lr (grad + wd p)
void sgd_step(NetworkParams& params, const Gradients& grads, const TrainConfig& config);

/// Max relative error between backward and central differences with step h;
/// denominator max(|analytic|, |numeric|, 1e-12).
double gradient_check(const NetworkParams& params, const Eigen::MatrixXd& inputs, const Objective& objective,
                      double h = 1e-5);

/// Per-block entropy -sum p log p of one simplex vector split into blocks.
std::vector<double> block_entropies(const Eigen::VectorXd& code, int block_width);
/// Index of the largest entry per block, ties to the lowest index.
std::vector<int> block_argmax(const Eigen::VectorXd& code, int block_width);

void to_json(nlohmann::json& j, const NetworkParams& params);
NetworkParams params_from_json(const nlohmann::json& j);

} // namespace itlab::nn
