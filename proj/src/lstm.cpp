#include "rescast/lstm.hpp"

#include "rescast/error.hpp"
#include "rescast/random.hpp"
#include "rescast/text.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace rescast::lstm {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

void require(bool ok, const std::string& field, const std::string& rule, double value) {
    if (!ok) {
        throw Error(ErrorKind::Config,
                    "lstm." + field + " " + rule + ", got " + text::format_double(value));
    }
}

// Forward pass over a window from (h0, c0) without touching any model.
std::vector<StepCache> forward(const LstmParams& p, std::span<const double> inputs,
                               Eigen::VectorXd h, Eigen::VectorXd c) {
    std::vector<StepCache> caches;
    caches.reserve(inputs.size());
    for (double x : inputs) {
        if (!std::isfinite(x)) {
            throw Error(ErrorKind::Input, "LSTM input is not finite");
        }
        StepCache s;
        s.x = x;
        s.h_prev = h;
        s.c_prev = c;
        s.input_gate = sigmoid(p.w_xi * x + p.w_hi * h + p.b_i);
        s.forget_gate = sigmoid(p.w_xf * x + p.w_hf * h + p.b_f);
        s.candidate = (p.w_xc * x + p.w_hc * h + p.b_c).array().tanh().matrix();
        s.cell = s.forget_gate.cwiseProduct(c) + s.input_gate.cwiseProduct(s.candidate);
        s.output_gate = sigmoid(p.w_xo * x + p.w_ho * h + p.b_o);
        s.cell_tanh = s.cell.array().tanh().matrix();
        s.hidden = s.output_gate.cwiseProduct(s.cell_tanh);
        s.y = (p.w_y * s.hidden)(0, 0) + p.b_y(0, 0);
        h = s.hidden;
        c = s.cell;
        caches.push_back(std::move(s));
    }
    return caches;
}

class ParameterUpdater {
public:
    ParameterUpdater(const LstmConfig& config, std::size_t hidden)
        : config_(config), first_(LstmParams::zeros(hidden)), second_(LstmParams::zeros(hidden)) {}

    void step(LstmParams& params, const LstmGradients& grads) {
        auto weights = params.tensors();
        const auto g = grads.tensors();
        const double lr = config_.learning_rate;
        if (config_.optimizer == lstm::Optimizer::PlainGradient) {
            for (std::size_t k = 0; k < weights.size(); ++k) {
                *weights[k] -= lr * *g[k];
            }
            return;
        }
        ++t_;
        auto m = first_.tensors();
        auto v = second_.tensors();
        const double b1 = config_.beta1;
        const double b2 = config_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t k = 0; k < weights.size(); ++k) {
            *m[k] = b1 * *m[k] + (1.0 - b1) * *g[k];
            *v[k] = b2 * *v[k] + (1.0 - b2) * g[k]->cwiseProduct(*g[k]);
            const auto m_hat = m[k]->array() / c1;
            const auto v_hat = v[k]->array() / c2;
            weights[k]->array() -= lr * m_hat / (v_hat.sqrt() + config_.epsilon);
        }
    }

private:
    const LstmConfig& config_;
    LstmParams first_;
    LstmParams second_;
    long long t_ = 0;
};

}  // namespace

std::string_view to_string(Optimizer optimizer) {
    return optimizer == Optimizer::PlainGradient ? "plain-gradient" : "adaptive-moments";
}

void LstmConfig::validate() const {
    require(hidden_units > 0, "hidden_units", "must be positive", static_cast<double>(hidden_units));
    require(epochs > 0, "epochs", "must be positive", static_cast<double>(epochs));
    // Zero is accepted: it freezes the weights, which tests rely on.
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate",
            "must be non-negative", learning_rate);
    require(bptt_window > 0, "bptt_window", "must be positive", static_cast<double>(bptt_window));
    require(beta1 >= 0.0 && beta1 < 1.0, "beta1", "must lie in [0, 1)", beta1);
    require(beta2 >= 0.0 && beta2 < 1.0, "beta2", "must lie in [0, 1)", beta2);
    require(epsilon > 0.0, "epsilon", "must be positive", epsilon);
}

LstmParams LstmParams::zeros(std::size_t hidden_units) {
    const auto h = static_cast<Eigen::Index>(hidden_units);
    const Eigen::MatrixXd col = Eigen::MatrixXd::Zero(h, 1);
    const Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(h, h);
    return LstmParams{col, sq, col, col, sq, col, col, sq, col, col, sq, col,
                      Eigen::MatrixXd::Zero(1, h), Eigen::MatrixXd::Zero(1, 1)};
}

std::array<Eigen::MatrixXd*, LstmParams::kTensorCount> LstmParams::tensors() {
    return {&w_xi, &w_hi, &b_i, &w_xf, &w_hf, &b_f, &w_xc,
            &w_hc, &b_c,  &w_xo, &w_ho, &b_o, &w_y, &b_y};
}

std::array<const Eigen::MatrixXd*, LstmParams::kTensorCount> LstmParams::tensors() const {
    return {&w_xi, &w_hi, &b_i, &w_xf, &w_hf, &b_f, &w_xc,
            &w_hc, &b_c,  &w_xo, &w_ho, &b_o, &w_y, &b_y};
}

LstmParams& LstmParams::operator+=(const LstmParams& other) {
    auto mine = tensors();
    const auto theirs = other.tensors();
    for (std::size_t k = 0; k < kTensorCount; ++k) {
        *mine[k] += *theirs[k];
    }
    return *this;
}

LstmModel LstmModel::initialize(const LstmConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config.hidden_units));
    LstmParams params = LstmParams::zeros(config.hidden_units);
    for (Eigen::MatrixXd* tensor : params.tensors()) {
        for (Eigen::Index j = 0; j < tensor->cols(); ++j) {
            for (Eigen::Index i = 0; i < tensor->rows(); ++i) {
                (*tensor)(i, j) = rng.uniform(-bound, bound);
            }
        }
    }
    return LstmModel(std::move(params), false);
}

LstmModel::LstmModel(LstmParams params, bool fitted)
    : params_(std::move(params)),
      h_(Eigen::VectorXd::Zero(params_.b_i.rows())),
      c_(Eigen::VectorXd::Zero(params_.b_i.rows())),
      fitted_(fitted) {
    const Eigen::Index h = params_.b_i.rows();
    const auto t = params_.tensors();
    for (std::size_t k = 0; k < t.size(); ++k) {
        const std::string_view name = LstmParams::kNames[k];
        Eigen::Index rows = h;
        Eigen::Index cols = 1;
        if (name.starts_with("w_h")) {
            cols = h;
        } else if (name == "w_y") {
            rows = 1;
            cols = h;
        } else if (name == "b_y") {
            rows = 1;
        }
        if (t[k]->rows() != rows || t[k]->cols() != cols) {
            throw Error(ErrorKind::Shape, "LSTM tensor " + std::string(name) + " has shape " +
                                              std::to_string(t[k]->rows()) + "x" +
                                              std::to_string(t[k]->cols()));
        }
    }
}

void LstmModel::set_state(Eigen::VectorXd h, Eigen::VectorXd c) {
    if (h.size() != h_.size() || c.size() != c_.size()) {
        throw Error(ErrorKind::Shape, "LSTM state size mismatch");
    }
    h_ = std::move(h);
    c_ = std::move(c);
}

void LstmModel::reset_state() {
    h_.setZero();
    c_.setZero();
}

StepResult lstm_step(LstmModel& model, double x) {
    const double in[1] = {x};
    auto caches = forward(model.params(), in, model.hidden(), model.cell());
    StepResult result{caches.front().y, std::move(caches.front())};
    model.set_state(result.cache.hidden, result.cache.cell);
    return result;
}

GradientResult lstm_gradients(const LstmModel& model, const Window& window) {
    const std::size_t steps = window.inputs.size();
    if (steps == 0 || window.targets.size() != steps) {
        throw Error(ErrorKind::Shape, "gradient window needs equal, nonzero input/target lengths");
    }
    const LstmParams& p = model.params();
    const auto caches = forward(p, window.inputs, model.hidden(), model.cell());

    GradientResult out{LstmParams::zeros(p.hidden_units()), 0.0, caches.back().hidden,
                       caches.back().cell};
    LstmGradients& g = out.gradients;
    const double scale = 2.0 / static_cast<double>(steps);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(p.b_i.rows());
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(p.b_i.rows());

    for (std::size_t k = steps; k-- > 0;) {
        const StepCache& s = caches[k];
        const double err = s.y - window.targets[k];
        out.loss += err * err;
        const double dy = scale * err;

        g.w_y += dy * s.hidden.transpose();
        g.b_y(0, 0) += dy;

        const Eigen::VectorXd dh = p.w_y.transpose() * dy + dh_next;
        const Eigen::VectorXd d_out = dh.cwiseProduct(s.cell_tanh);
        const Eigen::VectorXd dc =
            dh.cwiseProduct(s.output_gate)
                .cwiseProduct((1.0 - s.cell_tanh.array().square()).matrix()) +
            dc_next;
        const Eigen::VectorXd d_in = dc.cwiseProduct(s.candidate);
        const Eigen::VectorXd d_cand = dc.cwiseProduct(s.input_gate);
        const Eigen::VectorXd d_forget = dc.cwiseProduct(s.c_prev);
        dc_next = dc.cwiseProduct(s.forget_gate);

        // Back through the nonlinearities to the pre-activations.
        const Eigen::VectorXd a_i =
            (d_in.array() * s.input_gate.array() * (1.0 - s.input_gate.array())).matrix();
        const Eigen::VectorXd a_f =
            (d_forget.array() * s.forget_gate.array() * (1.0 - s.forget_gate.array())).matrix();
        const Eigen::VectorXd a_c =
            (d_cand.array() * (1.0 - s.candidate.array().square())).matrix();
        const Eigen::VectorXd a_o =
            (d_out.array() * s.output_gate.array() * (1.0 - s.output_gate.array())).matrix();

        g.w_xi += a_i * s.x;
        g.w_xf += a_f * s.x;
        g.w_xc += a_c * s.x;
        g.w_xo += a_o * s.x;
        g.w_hi += a_i * s.h_prev.transpose();
        g.w_hf += a_f * s.h_prev.transpose();
        g.w_hc += a_c * s.h_prev.transpose();
        g.w_ho += a_o * s.h_prev.transpose();
        g.b_i += a_i;
        g.b_f += a_f;
        g.b_c += a_c;
        g.b_o += a_o;

        dh_next = p.w_hi.transpose() * a_i + p.w_hf.transpose() * a_f +
                  p.w_hc.transpose() * a_c + p.w_ho.transpose() * a_o;
    }
    out.loss /= static_cast<double>(steps);
    return out;
}

LstmGradients lstm_gradients(const LstmModel& model, std::span<const Window> windows) {
    LstmGradients total = LstmParams::zeros(model.params().hidden_units());
    for (const Window& w : windows) {
        total += lstm_gradients(model, w).gradients;
    }
    return total;
}

double lstm_mse(const LstmModel& model, const SupervisedSet& data) {
    const Eigen::Index h = model.params().b_i.rows();
    const auto caches =
        forward(model.params(), data.inputs, Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h));
    double total = 0.0;
    for (std::size_t k = 0; k < caches.size(); ++k) {
        const double err = caches[k].y - data.targets[k];
        total += err * err;
    }
    return total / static_cast<double>(caches.size());
}

LstmFit lstm_fit(const LstmConfig& config, const SupervisedSet& data) {
    config.validate();
    const std::size_t pairs = data.size();
    if (pairs < config.bptt_window) {
        throw Error(ErrorKind::InsufficientData,
                    std::to_string(pairs) + " training pairs are fewer than the BPTT window of " +
                        std::to_string(config.bptt_window));
    }
    const auto started = std::chrono::steady_clock::now();
    LstmModel model = LstmModel::initialize(config);
    ParameterUpdater optimizer(config, config.hidden_units);
    FitReport report;
    report.effective_samples = pairs;
    report.loss_history.reserve(config.epochs);

    const std::span<const double> inputs(data.inputs);
    const std::span<const double> targets(data.targets);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double epoch_loss = lstm_mse(model, data);
        if (!std::isfinite(epoch_loss)) {
            throw Error(ErrorKind::Divergence,
                        "LSTM loss became non-finite at epoch " + std::to_string(epoch));
        }
        report.loss_history.push_back(epoch_loss);

        model.reset_state();
        std::size_t window_index = 0;
        for (std::size_t begin = 0; begin < pairs; begin += config.bptt_window, ++window_index) {
            const std::size_t len = std::min(config.bptt_window, pairs - begin);
            const Window window{inputs.subspan(begin, len), targets.subspan(begin, len)};
            GradientResult step = lstm_gradients(model, window);
            if (!std::isfinite(step.loss)) {
                throw Error(ErrorKind::Divergence, "LSTM loss became non-finite at epoch " +
                                                       std::to_string(epoch) + ", window " +
                                                       std::to_string(window_index));
            }
            optimizer.step(model.params(), step.gradients);
            model.set_state(std::move(step.final_hidden), std::move(step.final_cell));
        }
    }
    report.final_loss = lstm_mse(model, data);
    if (!std::isfinite(report.final_loss)) {
        throw Error(ErrorKind::Divergence, "LSTM loss became non-finite after the final epoch");
    }
    report.ridge_residual_norm = std::sqrt(report.final_loss * static_cast<double>(pairs));
    model.reset_state();
    model.mark_fitted();
    report.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return LstmFit{std::move(model), std::move(report)};
}

std::vector<double> lstm_predict(LstmModel& model, std::span<const double> inputs) {
    if (!model.fitted()) {
        throw Error(ErrorKind::NotFitted, "LSTM has not been trained");
    }
    model.reset_state();
    std::vector<double> out;
    out.reserve(inputs.size());
    for (double x : inputs) {
        out.push_back(lstm_step(model, x).y);
    }
    return out;
}

std::vector<double> lstm_free_run(LstmModel& model, std::span<const double> warmup, double x0,
                                  std::size_t horizon) {
    lstm_predict(model, warmup);
    std::vector<double> out;
    out.reserve(horizon);
    double x = x0;
    for (std::size_t step = 0; step < horizon; ++step) {
        const double y = lstm_step(model, x).y;
        if (!std::isfinite(y)) {
            throw Error(ErrorKind::Divergence,
                        "LSTM free run became non-finite at step " + std::to_string(step));
        }
        out.push_back(y);
        x = y;
    }
    return out;
}

}  // namespace rescast::lstm
