#pragma once

#include "rescast/data_pipeline.hpp"
#include "rescast/fit_report.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rescast::esn {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Reservoir hyperparameters. Defaults are the published configuration:
/// 20 units, leak 0.75, spectral radius 1.025, input scaling 1.0,
/// rc/input connectivity 0.15/0.2, fb connectivity 1.1, ridge 1e-8.
struct ReservoirConfig {
    std::size_t units = 20;
    double leak_rate = 0.75;
    double spectral_radius = 1.025;
    double input_scaling = 1.0;
    double rc_connectivity = 0.15;
    double input_connectivity = 0.2;
    // Recorded as given. Values above 1 are clamped to 1 when W_fb is drawn.
    double fb_connectivity = 1.1;
    double regularization_coef = 1e-8;
    std::size_t washout = 50;
    std::uint64_t seed = 7;
    bool feedback_enabled = false;

    /// Throws Error(Config) naming the offending field.
    void validate() const;
};

struct SpectralRadiusOptions {
    std::size_t krylov_dim = 200;
    std::size_t max_restarts = 200;
    double tolerance = 1e-9;
};

/// Largest eigenvalue magnitude of a square sparse matrix.
///
/// Arnoldi iteration on the power sequence W^k v: a Krylov basis of at most
/// `krylov_dim` vectors is built with full reorthogonalization and the
/// dominant Ritz value of the Hessenberg projection is taken. Unlike plain
/// power iteration this converges when the dominant eigenvalues form a
/// complex-conjugate pair, which is the usual case for random reservoirs.
/// Matrices with at most `krylov_dim` rows are resolved in one cycle; larger
/// ones restart from the dominant Ritz vector until successive estimates agree
/// within `tolerance` (relative).
double spectral_radius(const SparseMatrix& matrix, SpectralRadiusOptions options = {});

/// Solves (R^T R + lambda I) w = R^T y.
///
/// Uses the normal equations with a Cholesky factorization while R has at most
/// kNormalEquationsMaxColumns columns (squaring the condition number is
/// harmless at that size with lambda > 0), and an orthogonal decomposition of
/// the augmented system [R; sqrt(lambda) I] beyond that or whenever the
/// Cholesky factorization fails. lambda == 0 always takes the orthogonal path:
/// plain least squares gets no conditioning help from the ridge term, and
/// reservoir states are often correlated. Throws Underdetermined when
/// lambda == 0 and R has fewer rows than columns.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                            double lambda);

inline constexpr Eigen::Index kNormalEquationsMaxColumns = 501;

/// Echo state network: fixed random input/reservoir weights, leaky tanh
/// state update and a trained linear readout over [1; r].
class EsnModel {
public:
    /// Draws W_in, W_res (and W_fb) from `config.seed` and rescales W_res to the
    /// configured spectral radius. State starts at zero; no readout yet.
    static EsnModel build(const ReservoirConfig& config);

    /// Assembles a model from explicit weights (deserialization, hand-built
    /// test reservoirs). `w_fb` may be empty when feedback is disabled.
    EsnModel(ReservoirConfig config, Eigen::VectorXd w_in, SparseMatrix w_res,
             Eigen::VectorXd w_fb, std::optional<Eigen::VectorXd> w_out = std::nullopt);

    [[nodiscard]] const ReservoirConfig& config() const { return config_; }
    [[nodiscard]] const Eigen::VectorXd& input_weights() const { return w_in_; }
    [[nodiscard]] const SparseMatrix& reservoir_weights() const { return w_res_; }
    [[nodiscard]] const Eigen::VectorXd& feedback_weights() const { return w_fb_; }
    [[nodiscard]] const std::optional<Eigen::VectorXd>& readout() const { return w_out_; }
    [[nodiscard]] const Eigen::VectorXd& state() const { return state_; }
    [[nodiscard]] bool fitted() const { return w_out_.has_value(); }

    /// Readout row of length units + 1, bias first.
    void set_readout(Eigen::VectorXd w_out);
    void set_state(Eigen::VectorXd state);

    /// Pure form of the leaky update:
    /// (1 - a) r + a tanh(W_in x + W_res r [+ W_fb y_prev]).
    [[nodiscard]] Eigen::VectorXd next_state(const Eigen::VectorXd& state, double x,
                                             std::optional<double> y_prev = std::nullopt) const;

    /// Advances the stored state. `y_prev` must be given iff feedback is enabled.
    const Eigen::VectorXd& update_state(double x, std::optional<double> y_prev = std::nullopt);

    /// [1; state] . w_out for the given state.
    [[nodiscard]] double read(const Eigen::VectorXd& state) const;

    /// Teacher-forced state collection from a zeroed state, washout discarded,
    /// ridge solve for the readout. Leaves the state at the end of the data.
    FitReport fit_readout(const SupervisedSet& data);

    /// Design matrix rows [1; r(t+1)] for every pair after the washout, as
    /// fit_readout builds it. Resets and advances the state.
    Eigen::MatrixXd harvest_states(const SupervisedSet& data);

    /// ŷ(t+1) for each true input x(t), continuing from the current state.
    std::vector<double> predict_one_step(std::span<const double> inputs);

    /// Feeds each prediction back as the next input, starting from x0.
    std::vector<double> predict_free_running(double x0, std::size_t horizon);

    /// Zeroes the state (and the feedback memory); weights untouched.
    void reset_state();

private:
    void require_fitted() const;
    std::optional<double> feedback_value() const;

    ReservoirConfig config_;
    Eigen::VectorXd w_in_;
    SparseMatrix w_res_;
    Eigen::VectorXd w_fb_;
    std::optional<Eigen::VectorXd> w_out_;
    Eigen::VectorXd state_;
    double last_output_ = 0.0;
};

}  // namespace rescast::esn
