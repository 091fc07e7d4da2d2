#pragma once

// Two-layer logistic network with grouped weight decay whose hyperparameters are
// re-estimated by the evidence framework (automatic relevance determination).
//
// Parameter layout for n inputs and H hidden units:
//   [0, nH)        input->hidden weights, input-major: weight(i -> j) at i*H + j
//   [nH, nH+H)     hidden biases
//   [nH+H, nH+2H)  hidden->output weights
//   nH+2H          output bias
// Groups: one per input (its fan-out), then hidden->output weights, then all biases.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ripsel/dataset.hpp"
#include "ripsel/eigen_util.hpp"
#include "ripsel/error.hpp"

namespace ripsel {

struct MlpArchitecture {
    std::size_t n_inputs = 1;
    std::size_t n_hidden = 8;

    void validate() const {
        if (n_inputs < 1 || n_hidden < 1)
            throw ConfigError("network needs at least one input and one hidden unit");
    }

    std::size_t num_params() const { return n_inputs * n_hidden + 2 * n_hidden + 1; }
    std::size_t hidden_bias(std::size_t j) const { return n_inputs * n_hidden + j; }
    std::size_t output_weight(std::size_t j) const { return n_inputs * n_hidden + n_hidden + j; }
    std::size_t output_bias() const { return n_inputs * n_hidden + 2 * n_hidden; }
    std::size_t input_weight(std::size_t i, std::size_t j) const { return i * n_hidden + j; }
    std::size_t output_group() const { return n_inputs; }
    std::size_t bias_group() const { return n_inputs + 1; }

    bool operator==(const MlpArchitecture&) const = default;
};

struct TrainConfig {
    std::size_t epochs = 1000;
    /// Step size applied to the objective's gradient divided by the number of rows.
    double learning_rate = 1.0;
    double momentum = 0.0;
    std::size_t evidence_period = 100;
    std::uint64_t seed = 1;
    double init_scale = 0.1;
    double alpha_init = 0.01;
    double alpha_min = 1e-6;
    double alpha_max = 1e6;

    void validate() const {
        if (epochs < 1)
            throw ConfigError("epochs must be >= 1");
        if (evidence_period < 1)
            throw ConfigError("evidence_period must be >= 1");
        if (!(learning_rate > 0.0))
            throw ConfigError("learning_rate must be positive");
        if (!(momentum >= 0.0 && momentum < 1.0))
            throw ConfigError("momentum must lie in [0, 1)");
        if (!(alpha_min > 0.0 && alpha_max >= alpha_min))
            throw ConfigError("alpha clip range must satisfy 0 < alpha_min <= alpha_max");
        if (!(alpha_init > 0.0))
            throw ConfigError("alpha_init must be positive");
    }
};

struct ArdModel {
    MlpArchitecture arch;
    Eigen::VectorXd weights;
    std::vector<std::vector<std::size_t>> groups;
    Eigen::VectorXd alphas;
    /// RMS fan-out weight per input.
    Eigen::VectorXd relevance;
    std::size_t trained_epochs = 0;

    /// Dataset columns feeding the inputs, and their z-score statistics.
    std::vector<std::size_t> attributes;
    Eigen::VectorXd input_mean;
    Eigen::VectorXd input_scale;
    /// Class index mapped to target 1.
    std::size_t positive_class = 1;
    /// Dataset columns that survived selection, when selection has run.
    std::vector<std::size_t> kept;

    std::vector<double> objective_trace;

    /// Per-parameter decay coefficient expanded from the group alphas.
    Eigen::VectorXd param_alphas() const {
        Eigen::VectorXd a(weights.size());
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (auto i : groups[g])
                a(static_cast<Eigen::Index>(i)) = alphas(static_cast<Eigen::Index>(g));
        return a;
    }
};

inline std::vector<std::vector<std::size_t>> ard_groups(const MlpArchitecture& arch) {
    std::vector<std::vector<std::size_t>> groups(arch.n_inputs + 2);
    for (std::size_t i = 0; i < arch.n_inputs; ++i)
        for (std::size_t j = 0; j < arch.n_hidden; ++j)
            groups[i].push_back(arch.input_weight(i, j));
    for (std::size_t j = 0; j < arch.n_hidden; ++j) {
        groups[arch.output_group()].push_back(arch.output_weight(j));
        groups[arch.bias_group()].push_back(arch.hidden_bias(j));
    }
    groups[arch.bias_group()].push_back(arch.output_bias());
    return groups;
}

/// Zero-weight network with identity input scaling and uniform alphas.
inline ArdModel make_ard_model(const MlpArchitecture& arch, double alpha_init = 0.01) {
    arch.validate();
    ArdModel m;
    m.arch = arch;
    m.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.num_params()));
    m.groups = ard_groups(arch);
    m.alphas = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m.groups.size()), alpha_init);
    m.relevance = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.n_inputs));
    m.attributes.resize(arch.n_inputs);
    std::iota(m.attributes.begin(), m.attributes.end(), std::size_t{0});
    m.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.n_inputs));
    m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(arch.n_inputs));
    return m;
}

namespace detail {

inline double sigmoid(double a) {
    if (a >= 0.0)
        return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

/// log(1 + exp(a)) without overflow.
inline double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

struct NetworkView {
    Eigen::Map<const Eigen::MatrixXd> w_in; // H x n, column i = fan-out of input i
    Eigen::Map<const Eigen::VectorXd> b_hidden;
    Eigen::Map<const Eigen::VectorXd> w_out;
    double b_out;

    explicit NetworkView(const ArdModel& m)
        : w_in(m.weights.data(), static_cast<Eigen::Index>(m.arch.n_hidden), static_cast<Eigen::Index>(m.arch.n_inputs)),
          b_hidden(m.weights.data() + m.arch.hidden_bias(0), static_cast<Eigen::Index>(m.arch.n_hidden)),
          w_out(m.weights.data() + m.arch.output_weight(0), static_cast<Eigen::Index>(m.arch.n_hidden)),
          b_out(m.weights(static_cast<Eigen::Index>(m.arch.output_bias()))) {}
};

struct ForwardPass {
    Eigen::MatrixXd hidden; // n x H activations
    Eigen::VectorXd logits; // n output pre-activations
};

inline ForwardPass forward_pass(const ArdModel& m, const Eigen::MatrixXd& x) {
    if (x.cols() != static_cast<Eigen::Index>(m.arch.n_inputs))
        throw SchemaError("network expects " + std::to_string(m.arch.n_inputs) + " inputs, got " +
                          std::to_string(x.cols()));
    NetworkView net(m);
    ForwardPass f;
    f.hidden = ((x * net.w_in.transpose()).rowwise() + net.b_hidden.transpose()).unaryExpr(&sigmoid);
    f.logits = (f.hidden * net.w_out).array() + net.b_out;
    return f;
}

} // namespace detail

/// P(target = 1 | x) for one network-space input vector.
inline double forward(const ArdModel& m, std::span<const double> x) {
    Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::MatrixXd xm = row;
    return detail::sigmoid(detail::forward_pass(m, xm).logits(0));
}

inline Eigen::VectorXd forward(const ArdModel& m, const Eigen::MatrixXd& x) {
    return detail::forward_pass(m, x).logits.unaryExpr(&detail::sigmoid);
}

/// Cross-entropy of the targets under the network.
inline double data_error(const ArdModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
    auto f = detail::forward_pass(m, x);
    double e = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        e += detail::softplus(f.logits(r)) - t(r) * f.logits(r);
    return e;
}

/// sum_k alpha_k * (1/2) sum_{i in k} w_i^2
inline double weight_penalty(const ArdModel& m) {
    double p = 0.0;
    for (std::size_t g = 0; g < m.groups.size(); ++g) {
        double ss = 0.0;
        for (auto i : m.groups[g])
            ss += m.weights(static_cast<Eigen::Index>(i)) * m.weights(static_cast<Eigen::Index>(i));
        p += m.alphas(static_cast<Eigen::Index>(g)) * 0.5 * ss;
    }
    return p;
}

inline double objective(const ArdModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
    return data_error(m, x, t) + weight_penalty(m);
}

/// Gradient of the data error alone (back-propagation); also returns the error value.
inline Eigen::VectorXd data_gradient(const ArdModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& t,
                                     double* error = nullptr) {
    auto f = detail::forward_pass(m, x);
    detail::NetworkView net(m);
    const auto H = static_cast<Eigen::Index>(m.arch.n_hidden);
    const auto n_in = static_cast<Eigen::Index>(m.arch.n_inputs);
    Eigen::VectorXd delta = f.logits.unaryExpr(&detail::sigmoid) - t;
    if (error) {
        double e = 0.0;
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            e += detail::softplus(f.logits(r)) - t(r) * f.logits(r);
        *error = e;
    }
    Eigen::MatrixXd d_hidden = (delta * net.w_out.transpose()).array() * f.hidden.array() * (1.0 - f.hidden.array());

    Eigen::VectorXd g(m.weights.size());
    Eigen::Map<Eigen::MatrixXd>(g.data(), H, n_in) = d_hidden.transpose() * x;
    g.segment(static_cast<Eigen::Index>(m.arch.hidden_bias(0)), H) = d_hidden.colwise().sum().transpose();
    g.segment(static_cast<Eigen::Index>(m.arch.output_weight(0)), H) = f.hidden.transpose() * delta;
    g(static_cast<Eigen::Index>(m.arch.output_bias())) = delta.sum();
    return g;
}

inline Eigen::VectorXd gradient(const ArdModel& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& t) {
    return data_gradient(m, x, t) + m.param_alphas().cwiseProduct(m.weights);
}

/// Network-space inputs for `data`: model attributes, z-scored, missing -> 0.
inline Eigen::MatrixXd prepare_inputs(const ArdModel& m, const Dataset& data) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(m.attributes.size()));
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t k = 0; k < m.attributes.size(); ++k) {
            const auto& c = data.cell(r, m.attributes[k]);
            const auto kk = static_cast<Eigen::Index>(k);
            x(static_cast<Eigen::Index>(r), kk) = c ? (*c - m.input_mean(kk)) / m.input_scale(kk) : 0.0;
        }
    return x;
}

inline Eigen::VectorXd binary_targets(const Dataset& data, std::size_t positive_class) {
    Eigen::VectorXd t(static_cast<Eigen::Index>(data.rows()));
    for (std::size_t r = 0; r < data.rows(); ++r)
        t(static_cast<Eigen::Index>(r)) = data.class_of(r) == positive_class ? 1.0 : 0.0;
    return t;
}

inline double objective(const ArdModel& m, const Dataset& data) {
    return objective(m, prepare_inputs(m, data), binary_targets(data, m.positive_class));
}

/// gamma = k - trace, where trace is of the alpha-scaled posterior covariance block.
inline double effective_parameters(double num_params, double scaled_trace) { return num_params - scaled_trace; }

struct PosteriorInfo {
    /// Trace of each group's block of the posterior covariance (inverse Hessian).
    std::vector<double> covariance_trace;
    /// Well-determined parameter count per group.
    std::vector<double> gamma;
};

/// Gauss-Newton Hessian of the objective, inverted to obtain per-group covariance traces.
inline PosteriorInfo posterior_info(const ArdModel& m, const Eigen::MatrixXd& x) {
    auto f = detail::forward_pass(m, x);
    detail::NetworkView net(m);
    const auto n = x.rows();
    const auto H = static_cast<Eigen::Index>(m.arch.n_hidden);
    const auto n_in = static_cast<Eigen::Index>(m.arch.n_inputs);
    const auto k = m.weights.size();

    // Rows of j are d(logit)/dw scaled by sqrt(y (1 - y)).
    Eigen::MatrixXd j(n, k);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double y = detail::sigmoid(f.logits(r));
        const double s = std::sqrt(y * (1.0 - y));
        Eigen::ArrayXd slope = net.w_out.array() * f.hidden.row(r).transpose().array() *
                               (1.0 - f.hidden.row(r).transpose().array());
        for (Eigen::Index i = 0; i < n_in; ++i)
            j.row(r).segment(i * H, H) = (s * x(r, i)) * slope.transpose();
        j.row(r).segment(static_cast<Eigen::Index>(m.arch.hidden_bias(0)), H) = s * slope.transpose();
        j.row(r).segment(static_cast<Eigen::Index>(m.arch.output_weight(0)), H) = s * f.hidden.row(r);
        j(r, static_cast<Eigen::Index>(m.arch.output_bias())) = s;
    }
    Eigen::MatrixXd hessian = Eigen::MatrixXd::Zero(k, k);
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
    hessian.diagonal() += m.param_alphas();
    hessian.triangularView<Eigen::StrictlyUpper>() = hessian.transpose();

    Eigen::LLT<Eigen::MatrixXd> llt(hessian);
    if (llt.info() != Eigen::Success)
        throw NumericalError("posterior Hessian is not positive definite");
    Eigen::MatrixXd l_inv = llt.matrixL().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::VectorXd cov_diag = l_inv.colwise().squaredNorm().transpose();

    PosteriorInfo info;
    for (std::size_t g = 0; g < m.groups.size(); ++g) {
        double tr = 0.0;
        for (auto i : m.groups[g])
            tr += cov_diag(static_cast<Eigen::Index>(i));
        info.covariance_trace.push_back(tr);
        info.gamma.push_back(effective_parameters(static_cast<double>(m.groups[g].size()),
                                                  m.alphas(static_cast<Eigen::Index>(g)) * tr));
    }
    return info;
}

/// alpha <- gamma / sum w^2, clipped; a vanished group goes straight to alpha_max.
inline double reestimate_alpha(double gamma, double sum_sq, double alpha_min, double alpha_max) {
    if (sum_sq < 1e-12)
        return alpha_max;
    return std::clamp(gamma / sum_sq, alpha_min, alpha_max);
}

inline Eigen::VectorXd update_alphas(const ArdModel& m, const PosteriorInfo& info, double alpha_min,
                                     double alpha_max) {
    Eigen::VectorXd out(m.alphas.size());
    for (std::size_t g = 0; g < m.groups.size(); ++g) {
        double ss = 0.0;
        for (auto i : m.groups[g])
            ss += m.weights(static_cast<Eigen::Index>(i)) * m.weights(static_cast<Eigen::Index>(i));
        out(static_cast<Eigen::Index>(g)) = reestimate_alpha(info.gamma[g], ss, alpha_min, alpha_max);
    }
    return out;
}

inline Eigen::VectorXd compute_relevance(const ArdModel& m) {
    detail::NetworkView net(m);
    return (net.w_in.colwise().squaredNorm().transpose() / static_cast<double>(m.arch.n_hidden)).cwiseSqrt();
}

/// Trains on network-space inputs `x` (already scaled) with binary targets `t`.
inline ArdModel train_network(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, std::size_t n_hidden,
                              const TrainConfig& cfg) {
    cfg.validate();
    if (x.rows() < 1)
        throw DataError("cannot train on an empty dataset");
    MlpArchitecture arch{static_cast<std::size_t>(x.cols()), n_hidden};
    ArdModel m = make_ard_model(arch, cfg.alpha_init);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> in_dist(0.0, cfg.init_scale / std::sqrt(static_cast<double>(arch.n_inputs)));
    std::normal_distribution<double> out_dist(0.0, cfg.init_scale / std::sqrt(static_cast<double>(arch.n_hidden)));
    for (std::size_t i = 0; i < arch.n_inputs; ++i)
        for (std::size_t j = 0; j < arch.n_hidden; ++j)
            m.weights(static_cast<Eigen::Index>(arch.input_weight(i, j))) = in_dist(rng);
    for (std::size_t j = 0; j < arch.n_hidden; ++j)
        m.weights(static_cast<Eigen::Index>(arch.output_weight(j))) = out_dist(rng);

    const double step = cfg.learning_rate / static_cast<double>(x.rows());
    Eigen::VectorXd velocity = Eigen::VectorXd::Zero(m.weights.size());
    m.objective_trace.reserve(cfg.epochs + 1);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double e_d = 0.0;
        Eigen::VectorXd g = data_gradient(m, x, t, &e_d);
        const double obj = e_d + weight_penalty(m);
        if (!std::isfinite(obj) || !g.allFinite())
            throw NumericalError("objective became non-finite at epoch " + std::to_string(epoch) +
                                 "; try a smaller learning rate");
        m.objective_trace.push_back(obj);

        // Explicit step on the data term, implicit (proximal) step on the quadratic decay.
        velocity = cfg.momentum * velocity - step * g;
        m.weights = (m.weights + velocity).cwiseQuotient((1.0 + step * m.param_alphas().array()).matrix());
        if (epoch % cfg.evidence_period == 0)
            m.alphas = update_alphas(m, posterior_info(m, x), cfg.alpha_min, cfg.alpha_max);
        m.trained_epochs = epoch;
    }
    m.objective_trace.push_back(objective(m, x, t));
    if (!std::isfinite(m.objective_trace.back()))
        throw NumericalError("objective became non-finite after training; try a smaller learning rate");
    m.relevance = compute_relevance(m);
    return m;
}

/// Fits z-score statistics on the chosen columns of `train`, then trains the network with
/// `positive_class` as target 1.
inline ArdModel train_ard(const Dataset& train, std::span<const std::size_t> attributes, std::size_t n_hidden,
                          std::size_t positive_class, const TrainConfig& cfg) {
    if (attributes.empty())
        throw ConfigError("ARD needs at least one attribute");
    ArdModel stats;
    stats.attributes.assign(attributes.begin(), attributes.end());
    const auto d = static_cast<Eigen::Index>(attributes.size());
    stats.input_mean = Eigen::VectorXd::Zero(d);
    stats.input_scale = Eigen::VectorXd::Ones(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        double sum = 0.0, sq = 0.0, count = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r)
            if (const auto& c = train.cell(r, attributes[static_cast<std::size_t>(k)])) {
                sum += *c;
                sq += *c * *c;
                count += 1.0;
            }
        if (count > 0.0) {
            const double mean = sum / count;
            const double var = count > 1.0 ? std::max(sq - count * mean * mean, 0.0) / (count - 1.0) : 0.0;
            stats.input_mean(k) = mean;
            stats.input_scale(k) = var > 1e-24 ? std::sqrt(var) : 1.0;
        }
    }
    ArdModel m = train_network(prepare_inputs(stats, train), binary_targets(train, positive_class), n_hidden, cfg);
    m.attributes = std::move(stats.attributes);
    m.input_mean = std::move(stats.input_mean);
    m.input_scale = std::move(stats.input_scale);
    m.positive_class = positive_class;
    return m;
}

/// Dataset columns whose relevance reaches `threshold`; the most relevant input always survives.
inline std::vector<std::size_t> select_attributes(const ArdModel& m, double threshold = 0.01) {
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < m.attributes.size(); ++k)
        if (m.relevance(static_cast<Eigen::Index>(k)) >= threshold)
            kept.push_back(m.attributes[k]);
    if (kept.empty() && !m.attributes.empty()) {
        Eigen::Index best = 0;
        m.relevance.maxCoeff(&best);
        kept.push_back(m.attributes[static_cast<std::size_t>(best)]);
    }
    return kept;
}

/// Contiguous near-equal partition of 0..m-1; earlier groups take the remainder.
inline std::vector<std::vector<std::size_t>> split_attribute_groups(std::size_t m, std::size_t n_groups) {
    if (n_groups < 1 || n_groups > m)
        throw ConfigError("group count must lie in [1, " + std::to_string(m) + "]");
    std::vector<std::vector<std::size_t>> groups(n_groups);
    std::size_t next = 0;
    for (std::size_t g = 0; g < n_groups; ++g) {
        const std::size_t size = m / n_groups + (g < m % n_groups ? 1 : 0);
        for (std::size_t k = 0; k < size; ++k)
            groups[g].push_back(next++);
    }
    return groups;
}

inline void to_json(nlohmann::json& j, const ArdModel& m) {
    j = {{"architecture", {{"n_inputs", m.arch.n_inputs}, {"n_hidden", m.arch.n_hidden}, {"n_outputs", 1}}},
         {"weights", detail::to_vector(m.weights)},
         {"alphas", detail::to_vector(m.alphas)},
         {"relevance", detail::to_vector(m.relevance)},
         {"attributes", m.attributes},
         {"input_mean", detail::to_vector(m.input_mean)},
         {"input_scale", detail::to_vector(m.input_scale)},
         {"positive_class", m.positive_class},
         {"kept_attributes", m.kept},
         {"trained_epochs", m.trained_epochs}};
}

inline void from_json(const nlohmann::json& j, ArdModel& m) {
    const auto& a = j.at("architecture");
    m.arch = {a.at("n_inputs").get<std::size_t>(), a.at("n_hidden").get<std::size_t>()};
    m.arch.validate();
    m.groups = ard_groups(m.arch);
    m.weights = detail::from_vector(j.at("weights").get<std::vector<double>>());
    m.alphas = detail::from_vector(j.at("alphas").get<std::vector<double>>());
    m.relevance = detail::from_vector(j.at("relevance").get<std::vector<double>>());
    m.attributes = j.at("attributes").get<std::vector<std::size_t>>();
    m.input_mean = detail::from_vector(j.at("input_mean").get<std::vector<double>>());
    m.input_scale = detail::from_vector(j.at("input_scale").get<std::vector<double>>());
    m.positive_class = j.at("positive_class").get<std::size_t>();
    m.trained_epochs = j.at("trained_epochs").get<std::size_t>();
    m.kept = j.value("kept_attributes", std::vector<std::size_t>{});
    const auto n = static_cast<Eigen::Index>(m.arch.n_inputs);
    if (m.weights.size() != static_cast<Eigen::Index>(m.arch.num_params()) ||
        m.alphas.size() != static_cast<Eigen::Index>(m.groups.size()) || m.relevance.size() != n ||
        static_cast<Eigen::Index>(m.attributes.size()) != n || m.input_mean.size() != n || m.input_scale.size() != n)
        throw DataError("ARD model JSON has inconsistent dimensions");
}

} // namespace ripsel
