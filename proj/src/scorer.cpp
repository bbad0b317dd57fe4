#include "vexad/scorer.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "vexad/errors.hpp"

namespace vexad {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
    Standardizer st;
    const double m = static_cast<double>(X.cols());
    st.mean = X.rowwise().sum() / m;
    st.scale = ((X.colwise() - st.mean).array().square().rowwise().sum() / m).sqrt().matrix();
    for (Eigen::Index j = 0; j < st.scale.size(); ++j)
        if (!(st.scale[j] > 1e-12)) st.scale[j] = 1.0;
    return st;
}

std::vector<double> sample_weights(const std::vector<int>& labels, bool balanced) {
    const auto m = static_cast<double>(labels.size());
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double n_neg = m - n_pos;
    std::vector<double> c(labels.size(), 1.0 / m);
    if (balanced)
        for (std::size_t i = 0; i < labels.size(); ++i) c[i] = 0.5 / (labels[i] > 0 ? n_pos : n_neg);
    return c;
}

// Objective in standardized coordinates: weighted mean log-loss + l2/2 |u|^2.
struct Objective {
    const Eigen::MatrixXd& Z;
    const std::vector<int>& labels;
    const std::vector<double>& weight;
    double l2;

    double value(const Eigen::VectorXd& u, double b) const {
        const Eigen::VectorXd m = (Z.transpose() * u).array() + b;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) loss += weight[i] * softplus(-labels[i] * m[i]);
        return loss + 0.5 * l2 * u.squaredNorm();
    }

    void gradient(const Eigen::VectorXd& u, double b, Eigen::VectorXd& gu, double& gb) const {
        const Eigen::VectorXd m = (Z.transpose() * u).array() + b;
        Eigen::VectorXd r(m.size());
        for (Eigen::Index i = 0; i < m.size(); ++i) r[i] = weight[i] * (sigmoid(m[i]) - (labels[i] > 0 ? 1.0 : 0.0));
        gu = Z * r + l2 * u;
        gb = r.sum();
    }
};

}  // namespace

Scorer::Scorer(Eigen::VectorXd weights, double bias, bool degenerate, int trained_on)
    : weights_(std::move(weights)), bias_(bias), degenerate_(degenerate), trained_on_(trained_on) {
    if (!weights_.allFinite() || !std::isfinite(bias_)) throw NumericError("scorer parameters must be finite");
}

double Scorer::margin(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != weights_.size())
        throw DimensionError("score: feature length " + std::to_string(x.size()) + " != scorer dim " +
                             std::to_string(weights_.size()));
    return weights_.dot(x) + bias_;
}

double Scorer::score(const Eigen::Ref<const Eigen::VectorXd>& x) const { return clamp_prob(sigmoid(margin(x))); }

Eigen::VectorXd Scorer::score_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::VectorXd out(X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k) out[k] = score(X.col(k));
    return out;
}

ScoreGradients score_gradient(const Scorer& s, const Eigen::Ref<const Eigen::MatrixXd>& V) {
    if (V.rows() != s.dim())
        throw DimensionError("score_gradient: exemplar dim " + std::to_string(V.rows()) + " != scorer dim " +
                             std::to_string(s.dim()));
    if (!V.allFinite()) throw NumericError("score_gradient: exemplars must be finite");
    ScoreGradients g;
    g.change.resize(V.rows(), V.cols());
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
        const double f = s.score(V.col(k));
        g.change.col(k) = f * (1.0 - f) * s.weights();
    }
    g.no_change = -g.change;
    return g;
}

double training_loss(const LabeledSet& data, const TrainConfig& cfg, const Eigen::VectorXd& w, double b) {
    const Standardizer st = fit_standardizer(data.features);
    const Eigen::VectorXd u = w.cwiseProduct(st.scale);
    const double bz = b + w.dot(st.mean);
    const Eigen::MatrixXd Z = (data.features.colwise() - st.mean).array().colwise() / st.scale.array();
    const auto weight = sample_weights(data.labels, cfg.class_balanced);
    return Objective{Z, data.labels, weight, cfg.l2_strength}.value(u, bz);
}

Scorer train(const LabeledSet& data, const TrainConfig& cfg, TrainTrace* trace) {
    const auto m = static_cast<Eigen::Index>(data.labels.size());
    if (data.features.cols() != m)
        throw DimensionError("train: " + std::to_string(data.features.cols()) + " feature columns but " +
                             std::to_string(m) + " labels");
    if (m == 0) throw std::invalid_argument("train: no labeled samples");
    if (cfg.l2_strength < 0.0 || !(cfg.grad_tol > 0.0)) throw std::invalid_argument("train: invalid TrainConfig");
    for (int y : data.labels)
        if (y != -1 && y != 1) throw ValidationError("train: label must be -1 or +1");
    if (!data.features.allFinite()) throw NumericError("train: features must be finite");

    const auto n_pos = std::count(data.labels.begin(), data.labels.end(), 1);
    const int dim = static_cast<int>(data.features.rows());
    if (n_pos == 0 || n_pos == m) {
        const double prior = std::clamp(static_cast<double>(n_pos) / static_cast<double>(m), 0.05, 0.95);
        if (trace) *trace = {};
        return Scorer(Eigen::VectorXd::Zero(dim), std::log(prior / (1.0 - prior)), true, static_cast<int>(m));
    }

    // Gradient descent runs in standardized coordinates (a diagonal
    // preconditioner); the penalty is measured in those units too.
    const Standardizer st = fit_standardizer(data.features);
    const Eigen::MatrixXd Z = (data.features.colwise() - st.mean).array().colwise() / st.scale.array();
    const auto weight = sample_weights(data.labels, cfg.class_balanced);
    const Objective obj{Z, data.labels, weight, cfg.l2_strength};

    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    double b = 0.0;
    double loss = obj.value(u, b);
    double step = 1.0;
    Eigen::VectorXd gu;
    double gb = 0.0;
    TrainTrace local;
    local.loss.push_back(loss);

    int epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        obj.gradient(u, b, gu, gb);
        const double gmax = std::max(gu.cwiseAbs().maxCoeff(), std::abs(gb));
        local.final_grad_norm = gmax;
        if (gmax < cfg.grad_tol) break;
        const double gsq = gu.squaredNorm() + gb * gb;
        step = std::min(step * 2.0, 1e6);
        bool accepted = false;
        while (step > 1e-20) {
            const Eigen::VectorXd u_new = u - step * gu;
            const double b_new = b - step * gb;
            const double loss_new = obj.value(u_new, b_new);
            if (loss_new <= loss - 1e-4 * step * gsq) {
                u = u_new;
                b = b_new;
                loss = loss_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        local.loss.push_back(loss);
        if (!accepted) break;
    }
    local.epochs = epoch;

    const Eigen::VectorXd w = u.cwiseQuotient(st.scale);
    const double bias = b - w.dot(st.mean);
    if (trace) *trace = std::move(local);
    return Scorer(w, bias, false, static_cast<int>(m));
}

nlohmann::json to_json(const Scorer& s) {
    return {{"weights", std::vector<double>(s.weights().begin(), s.weights().end())},
            {"bias", s.bias()},
            {"degenerate", s.degenerate()},
            {"trained_on", s.trained_on()}};
}

Scorer scorer_from_json(const nlohmann::json& j) {
    const auto w = j.at("weights").get<std::vector<double>>();
    return Scorer(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())),
                  j.at("bias").get<double>(), j.value("degenerate", false), j.value("trained_on", 0));
}

}  // namespace vexad
