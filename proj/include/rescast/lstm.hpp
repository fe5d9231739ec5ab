#pragma once

#include "rescast/data_pipeline.hpp"
#include "rescast/fit_report.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace rescast::lstm {

enum class Optimizer { PlainGradient, AdaptiveMoments };

std::string_view to_string(Optimizer optimizer);

struct LstmConfig {
    std::size_t hidden_units = 32;
    std::size_t epochs = 100;
    double learning_rate = 1e-3;
    std::size_t bptt_window = 30;
    std::uint64_t seed = 7;
    Optimizer optimizer = Optimizer::AdaptiveMoments;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// Every trainable tensor of the single-layer scalar-in/scalar-out LSTM.
/// Input weights are H x 1, recurrent weights H x H, biases H x 1, the output
/// head 1 x H and its bias 1 x 1.
struct LstmParams {
    Eigen::MatrixXd w_xi, w_hi, b_i;  // input gate
    Eigen::MatrixXd w_xf, w_hf, b_f;  // forget gate
    Eigen::MatrixXd w_xc, w_hc, b_c;  // cell candidate
    Eigen::MatrixXd w_xo, w_ho, b_o;  // output gate
    Eigen::MatrixXd w_y, b_y;         // output head

    static constexpr std::size_t kTensorCount = 14;
    static constexpr std::array<std::string_view, kTensorCount> kNames = {
        "w_xi", "w_hi", "b_i", "w_xf", "w_hf", "b_f", "w_xc",
        "w_hc", "b_c",  "w_xo", "w_ho", "b_o", "w_y", "b_y"};

    static LstmParams zeros(std::size_t hidden_units);

    [[nodiscard]] std::size_t hidden_units() const { return static_cast<std::size_t>(b_i.rows()); }

    std::array<Eigen::MatrixXd*, kTensorCount> tensors();
    std::array<const Eigen::MatrixXd*, kTensorCount> tensors() const;

    LstmParams& operator+=(const LstmParams& other);
};

using LstmGradients = LstmParams;

/// Intermediates of one forward step, kept for backpropagation.
struct StepCache {
    double x = 0.0;
    Eigen::VectorXd h_prev, c_prev;
    Eigen::VectorXd input_gate, forget_gate, candidate, output_gate;
    Eigen::VectorXd cell, cell_tanh, hidden;
    double y = 0.0;
};

class LstmModel {
public:
    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights from `config.seed`; not yet fitted.
    static LstmModel initialize(const LstmConfig& config);

    /// Explicit weights; the model counts as fitted.
    explicit LstmModel(LstmParams params, bool fitted = true);

    [[nodiscard]] const LstmParams& params() const { return params_; }
    [[nodiscard]] LstmParams& params() { return params_; }
    [[nodiscard]] const Eigen::VectorXd& hidden() const { return h_; }
    [[nodiscard]] const Eigen::VectorXd& cell() const { return c_; }
    [[nodiscard]] bool fitted() const { return fitted_; }
    void mark_fitted() { fitted_ = true; }

    void set_state(Eigen::VectorXd h, Eigen::VectorXd c);
    void reset_state();

private:
    LstmParams params_;
    Eigen::VectorXd h_;
    Eigen::VectorXd c_;
    bool fitted_ = false;
};

struct StepResult {
    double y = 0.0;
    StepCache cache;
};

/// One application of the gate equations in order i, f, C, o, h, y. The model's
/// hidden and cell states are replaced.
StepResult lstm_step(LstmModel& model, double x);

/// Input/target pairs processed as one truncated-BPTT unit.
struct Window {
    std::span<const double> inputs;
    std::span<const double> targets;
};

struct GradientResult {
    LstmGradients gradients;
    double loss = 0.0;  // MSE over the window
    Eigen::VectorXd final_hidden;
    Eigen::VectorXd final_cell;
};

/// Analytic BPTT gradient of the window MSE, starting from the model's current
/// state (treated as constant). The model itself is not modified.
GradientResult lstm_gradients(const LstmModel& model, const Window& window);

/// Sum of per-window gradients, each window starting from the model's state.
LstmGradients lstm_gradients(const LstmModel& model, std::span<const Window> windows);

/// MSE of a stateful pass over all pairs from a zero state.
double lstm_mse(const LstmModel& model, const SupervisedSet& data);

struct LstmFit {
    LstmModel model;
    FitReport report;
};

/// `epochs` passes of truncated BPTT over consecutive windows of
/// `bptt_window` pairs. The state carries across windows within an epoch and
/// restarts at zero each epoch. report.loss_history[e] is the MSE at the
/// start of epoch e, so entry 0 is the untrained model's loss.
LstmFit lstm_fit(const LstmConfig& config, const SupervisedSet& data);

/// Teacher-forced one-step outputs from a zero state.
std::vector<double> lstm_predict(LstmModel& model, std::span<const double> inputs);

/// Runs `warmup` teacher-forced from a zero state, then feeds each output back
/// as the next input for `horizon` steps starting from x0.
std::vector<double> lstm_free_run(LstmModel& model, std::span<const double> warmup, double x0,
                                  std::size_t horizon);

}  // namespace rescast::lstm
