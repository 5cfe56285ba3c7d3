#include "itlab/network.hpp"

#include "itlab/errors.hpp"
#include "itlab/random.hpp"

#include <algorithm>
#include <cmath>

namespace itlab::nn {

void SemConfig::validate() const
{
    require(num_blocks >= 1, ErrorCode::config_invalid, "num_blocks must be >= 1");
    require(block_width >= 2, ErrorCode::config_invalid, "block_width must be >= 2");
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCode::config_invalid, "temperature must be > 0");
}

Architecture Architecture::with_sem(int input_dim, int output_dim, SemConfig sem, int hidden_dim)
{
    Architecture a;
    a.input_dim = input_dim;
    a.hidden_dim = hidden_dim;
    a.code_dim = sem.code_dim();
    a.output_dim = output_dim;
    a.sem = sem;
    return a;
}

Architecture Architecture::plain(int input_dim, int code_dim, int output_dim, int hidden_dim)
{
    Architecture a;
    a.input_dim = input_dim;
    a.hidden_dim = hidden_dim;
    a.code_dim = code_dim;
    a.output_dim = output_dim;
    return a;
}

void Architecture::validate() const
{
    require(input_dim >= 1 && hidden_dim >= 1 && code_dim >= 1 && output_dim >= 1, ErrorCode::config_invalid,
            "layer widths must be >= 1");
    if (sem) {
        sem->validate();
        require(sem->code_dim() == code_dim, ErrorCode::config_invalid, "code_dim must equal num_blocks * block_width");
    }
}

namespace {

Layer glorot_layer(int in, int out, Rng& rng)
{
    const double s = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    // column-major fill order is part of the reproducibility contract
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
            layer.w(r, c) = uniform_real(rng, -s, s);
    return layer;
}

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what)
{
    require(m.rows() == rows && m.cols() == cols, ErrorCode::dimension_mismatch, what);
}

} // namespace

NetworkParams NetworkParams::init(const Architecture& arch, std::uint64_t seed)
{
    arch.validate();
    Rng rng = make_rng(seed);
    NetworkParams p;
    p.arch = arch;
    p.layers.push_back(glorot_layer(arch.input_dim, arch.hidden_dim, rng));
    p.layers.push_back(glorot_layer(arch.hidden_dim, arch.code_dim, rng));
    p.layers.push_back(glorot_layer(arch.code_dim, arch.output_dim, rng));
    return p;
}

void NetworkParams::reinit_head(std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    layers.at(kHead) = glorot_layer(arch.code_dim, arch.output_dim, rng);
    touch();
}

std::size_t NetworkParams::num_parameters() const
{
    std::size_t n = 0;
    for (const Layer& l : layers)
        n += static_cast<std::size_t>(l.w.size() + l.b.size());
    return n;
}

bool NetworkParams::all_finite() const
{
    return std::all_of(layers.begin(), layers.end(),
                       [](const Layer& l) { return l.w.allFinite() && l.b.allFinite(); });
}

Gradients NetworkParams::zeros_like() const
{
    Gradients g;
    for (const Layer& l : layers)
        g.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()), Eigen::VectorXd::Zero(l.b.size())});
    return g;
}

Eigen::MatrixXd block_softmax(const Eigen::MatrixXd& logits, int block_width, double tau)
{
    require(block_width >= 1 && logits.rows() % block_width == 0, ErrorCode::dimension_mismatch,
            "logit rows are not a multiple of the block width");
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    const Eigen::Index blocks = logits.rows() / block_width;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        for (Eigen::Index k = 0; k < blocks; ++k) {
            const auto in = logits.col(c).segment(k * block_width, block_width);
            auto o = out.col(c).segment(k * block_width, block_width);
            const double hi = in.maxCoeff();
            o = ((in.array() - hi) / tau).exp().matrix();
            o /= o.sum();
        }
    }
    return out;
}

ForwardCache forward(const NetworkParams& params, const Eigen::MatrixXd& inputs)
{
    const Architecture& a = params.arch;
    require(params.layers.size() == 3, ErrorCode::dimension_mismatch, "network needs three layers");
    require(inputs.rows() == a.input_dim && inputs.cols() >= 1, ErrorCode::dimension_mismatch,
            "input width does not match the network");

    ForwardCache c;
    c.revision = params.revision;
    c.owner = &params;
    c.input = inputs;
    const Layer& l0 = params.layers[NetworkParams::kHidden];
    const Layer& l1 = params.layers[NetworkParams::kCode];
    const Layer& l2 = params.layers[NetworkParams::kHead];
    c.hidden_pre = (l0.w * inputs).colwise() + l0.b;
    c.hidden = c.hidden_pre.cwiseMax(0.0);
    c.logits = (l1.w * c.hidden).colwise() + l1.b;
    c.code = a.sem ? block_softmax(c.logits, a.sem->block_width, a.sem->temperature) : c.logits;
    c.output = (l2.w * c.code).colwise() + l2.b;
    return c;
}

ForwardCache forward(const NetworkParams& params, const Eigen::VectorXd& input)
{
    return forward(params, Eigen::MatrixXd(input));
}

Gradients backward(const NetworkParams& params, const ForwardCache& cache, const Upstream& up)
{
    require(cache.owner == &params && cache.revision == params.revision, ErrorCode::stale_cache,
            "cache does not come from the current parameters");
    const Architecture& a = params.arch;
    const Eigen::Index n = cache.batch();
    const bool has_out = up.d_output.size() > 0;
    const bool has_code = up.d_code.size() > 0;
    if (has_out)
        require_shape(up.d_output, a.output_dim, n, "d_output has the wrong shape");
    if (has_code)
        require_shape(up.d_code, a.code_dim, n, "d_code has the wrong shape");

    Gradients g = params.zeros_like();
    const Layer& l1 = params.layers[NetworkParams::kCode];
    const Layer& l2 = params.layers[NetworkParams::kHead];

    Eigen::MatrixXd d_code = has_code ? up.d_code : Eigen::MatrixXd::Zero(a.code_dim, n);
    if (has_out) {
        g[NetworkParams::kHead].w = up.d_output * cache.code.transpose();
        g[NetworkParams::kHead].b = up.d_output.rowwise().sum();
        d_code += l2.w.transpose() * up.d_output;
    }

    Eigen::MatrixXd d_logits;
    if (a.sem) {
        // per block: (diag(p) - p p^T) d / tau
        const int w = a.sem->block_width;
        const double tau = a.sem->temperature;
        d_logits.resize(a.code_dim, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            for (int k = 0; k < a.sem->num_blocks; ++k) {
                const auto p = cache.code.col(c).segment(k * w, w);
                const auto d = d_code.col(c).segment(k * w, w);
                const double dot = p.dot(d);
                d_logits.col(c).segment(k * w, w) = (p.array() * (d.array() - dot) / tau).matrix();
            }
        }
    } else {
        d_logits = std::move(d_code);
    }

    g[NetworkParams::kCode].w = d_logits * cache.hidden.transpose();
    g[NetworkParams::kCode].b = d_logits.rowwise().sum();
    const Eigen::MatrixXd d_hidden =
        (l1.w.transpose() * d_logits).cwiseProduct((cache.hidden_pre.array() > 0.0).cast<double>().matrix());
    g[NetworkParams::kHidden].w = d_hidden * cache.input.transpose();
    g[NetworkParams::kHidden].b = d_hidden.rowwise().sum();
    return g;
}

const char* to_string(LossKind kind)
{
    switch (kind) {
    case LossKind::mse: return "mse";
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::multilabel_ce: return "multilabel_ce";
    }
    return "?";
}

LossKind loss_kind_from_string(const std::string& name)
{
    if (name == "mse")
        return LossKind::mse;
    if (name == "cross_entropy")
        return LossKind::cross_entropy;
    if (name == "multilabel_ce")
        return LossKind::multilabel_ce;
    fail(ErrorCode::config_invalid, "unknown loss kind: " + name);
}

LossValue mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target)
{
    require_shape(target, pred.rows(), pred.cols(), "mse target shape mismatch");
    const double n = static_cast<double>(pred.cols());
    const Eigen::MatrixXd diff = pred - target;
    return {diff.squaredNorm() / n, 2.0 * diff / n};
}

LossValue block_cross_entropy(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& target, int block_width)
{
    require_shape(target, logits.rows(), logits.cols(), "cross-entropy target shape mismatch");
    const Eigen::MatrixXd p = block_softmax(logits, block_width, 1.0);
    const double n = static_cast<double>(logits.cols());
    double loss = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        for (Eigen::Index k = 0; k < logits.rows(); k += block_width) {
            const auto in = logits.col(c).segment(k, block_width);
            const double hi = in.maxCoeff();
            const double lse = hi + std::log((in.array() - hi).exp().sum());
            loss -= target.col(c).segment(k, block_width).dot((in.array() - lse).matrix());
        }
    }
    // the target blocks sum to one, so d/dlogits = p - t
    Eigen::MatrixXd grad = p - target;
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
        for (Eigen::Index k = 0; k < logits.rows(); k += block_width)
            grad.col(c).segment(k, block_width) += p.col(c).segment(k, block_width) *
                                                   (target.col(c).segment(k, block_width).sum() - 1.0);
    return {loss / n, grad / n};
}

LossValue multilabel_cross_entropy(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& target)
{
    require_shape(target, probs.rows(), probs.cols(), "multilabel target shape mismatch");
    constexpr double kTiny = 1e-300;
    const double n = static_cast<double>(probs.cols());
    const Eigen::ArrayXXd safe = probs.array().max(kTiny);
    const double loss = -(target.array() * safe.log()).sum() / n;
    return {loss, (-(target.array() / safe) / n).matrix()};
}

double evaluate_objective(const NetworkParams& params, const Eigen::MatrixXd& inputs, const Objective& obj,
                          Gradients* grads)
{
    const ForwardCache cache = forward(params, inputs);
    LossValue lv;
    Upstream up;
    switch (obj.kind) {
    case LossKind::mse:
        lv = mse_loss(cache.output, obj.target);
        up.d_output = std::move(lv.grad);
        break;
    case LossKind::cross_entropy:
        require(obj.block_width >= 1 && params.arch.output_dim % obj.block_width == 0, ErrorCode::dimension_mismatch,
                "cross_entropy needs a block width dividing the output");
        lv = block_cross_entropy(cache.output, obj.target, obj.block_width);
        up.d_output = std::move(lv.grad);
        break;
    case LossKind::multilabel_ce:
        require(params.arch.sem.has_value(), ErrorCode::mode_mismatch, "multilabel_ce needs SEM blocks");
        lv = multilabel_cross_entropy(cache.code, obj.target);
        up.d_code = std::move(lv.grad);
        break;
    }
    if (grads)
        *grads = backward(params, cache, up);
    return lv.value;
}

void TrainConfig::validate() const
{
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), ErrorCode::config_invalid,
            "learning_rate must be finite and >= 0");
    require(weight_decay >= 0.0, ErrorCode::config_invalid, "weight_decay must be >= 0");
    require(batch_size >= 1, ErrorCode::config_invalid, "batch_size must be >= 1");
}

void sgd_step(NetworkParams& params, const Gradients& grads, const TrainConfig& config)
{
    require(grads.size() == params.layers.size(), ErrorCode::dimension_mismatch, "gradient layer count mismatch");
    const double lr = config.learning_rate;
    const double wd = config.weight_decay;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        Layer& l = params.layers[i];
        require_shape(grads[i].w, l.w.rows(), l.w.cols(), "gradient shape mismatch");
        require(grads[i].b.size() == l.b.size(), ErrorCode::dimension_mismatch, "gradient shape mismatch");
        l.w -= lr * (grads[i].w + wd * l.w);
        l.b -= lr * (grads[i].b + wd * l.b);
    }
    params.touch();
}

double gradient_check(const NetworkParams& params, const Eigen::MatrixXd& inputs, const Objective& objective, double h)
{
    require(h >= 1e-7 && h <= 1e-3, ErrorCode::invalid_argument, "h must lie in [1e-7, 1e-3]");
    Gradients analytic;
    evaluate_objective(params, inputs, objective, &analytic);

    NetworkParams probe = params;
    double worst = 0.0;
    auto check = [&](double& slot, double a) {
        const double saved = slot;
        slot = saved + h;
        const double up = evaluate_objective(probe, inputs, objective);
        slot = saved - h;
        const double down = evaluate_objective(probe, inputs, objective);
        slot = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    };
    for (std::size_t i = 0; i < probe.layers.size(); ++i) {
        Layer& l = probe.layers[i];
        for (Eigen::Index k = 0; k < l.w.size(); ++k)
            check(l.w.data()[k], analytic[i].w.data()[k]);
        for (Eigen::Index k = 0; k < l.b.size(); ++k)
            check(l.b.data()[k], analytic[i].b.data()[k]);
    }
    return worst;
}

std::vector<double> block_entropies(const Eigen::VectorXd& code, int block_width)
{
    require(block_width >= 1 && code.size() % block_width == 0, ErrorCode::dimension_mismatch,
            "code is not a whole number of blocks");
    std::vector<double> out;
    for (Eigen::Index k = 0; k < code.size(); k += block_width) {
        double h = 0.0;
        for (Eigen::Index j = k; j < k + block_width; ++j)
            if (code(j) > 0.0)
                h -= code(j) * std::log(code(j));
        out.push_back(h);
    }
    return out;
}

std::vector<int> block_argmax(const Eigen::VectorXd& code, int block_width)
{
    require(block_width >= 1 && code.size() % block_width == 0, ErrorCode::dimension_mismatch,
            "code is not a whole number of blocks");
    std::vector<int> out;
    for (Eigen::Index k = 0; k < code.size(); k += block_width) {
        int best = 0;
        for (int j = 1; j < block_width; ++j)
            if (code(k + j) > code(k + best))
                best = j;
        out.push_back(best);
    }
    return out;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols)
{
    require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows, ErrorCode::dimension_mismatch,
            "checkpoint matrix has the wrong row count");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto row = j[static_cast<std::size_t>(r)].get<std::vector<double>>();
        require(static_cast<Eigen::Index>(row.size()) == cols, ErrorCode::dimension_mismatch,
                "checkpoint matrix has the wrong column count");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

constexpr int kCheckpointVersion = 1;

} // namespace

void to_json(nlohmann::json& j, const NetworkParams& p)
{
    const Architecture& a = p.arch;
    j = nlohmann::json::object();
    j["version"] = kCheckpointVersion;
    j["arch"] = {{"input_dim", a.input_dim}, {"hidden_dim", a.hidden_dim}, {"code_dim", a.code_dim},
                 {"output_dim", a.output_dim}};
    j["sem"] = a.sem ? nlohmann::json{{"num_blocks", a.sem->num_blocks},
                                      {"block_width", a.sem->block_width},
                                      {"temperature", a.sem->temperature}}
                     : nlohmann::json(nullptr);
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : p.layers) {
        std::vector<double> b(l.b.data(), l.b.data() + l.b.size());
        layers.push_back({{"w", matrix_to_json(l.w)}, {"b", b}});
    }
    j["layers"] = std::move(layers);
}

NetworkParams params_from_json(const nlohmann::json& j)
{
    try {
        require(j.at("version").get<int>() == kCheckpointVersion, ErrorCode::parse_error,
                "unsupported checkpoint version");
        Architecture a;
        const auto& ja = j.at("arch");
        a.input_dim = ja.at("input_dim").get<int>();
        a.hidden_dim = ja.at("hidden_dim").get<int>();
        a.code_dim = ja.at("code_dim").get<int>();
        a.output_dim = ja.at("output_dim").get<int>();
        if (!j.at("sem").is_null()) {
            const auto& js = j.at("sem");
            a.sem = SemConfig{js.at("num_blocks").get<int>(), js.at("block_width").get<int>(),
                              js.at("temperature").get<double>()};
        }
        a.validate();

        NetworkParams p;
        p.arch = a;
        const int dims[4] = {a.input_dim, a.hidden_dim, a.code_dim, a.output_dim};
        const auto& jl = j.at("layers");
        require(jl.size() == 3, ErrorCode::dimension_mismatch, "checkpoint needs three layers");
        for (std::size_t i = 0; i < 3; ++i) {
            Layer l;
            l.w = matrix_from_json(jl[i].at("w"), dims[i + 1], dims[i]);
            const auto b = jl[i].at("b").get<std::vector<double>>();
            require(static_cast<int>(b.size()) == dims[i + 1], ErrorCode::dimension_mismatch,
                    "checkpoint bias has the wrong length");
            l.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
            p.layers.push_back(std::move(l));
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, std::string("bad checkpoint: ") + e.what());
    }
}

} // namespace itlab::nn
