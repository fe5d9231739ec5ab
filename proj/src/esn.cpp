#include "rescast/esn.hpp"

#include "rescast/error.hpp"
#include "rescast/random.hpp"
#include "rescast/text.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <string>
#include <unordered_set>

namespace rescast::esn {

namespace {

void require(bool ok, const std::string& field, const std::string& rule, double value) {
    if (!ok) {
        throw Error(ErrorKind::Config,
                    "reservoir." + field + " " + rule + ", got " + text::format_double(value));
    }
}

std::size_t nonzero_count(double fraction, std::size_t slots) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(slots)));
}

// Floyd's algorithm: `k` distinct values in [0, universe), returned sorted so
// the follow-on value draws happen in a fixed order.
std::vector<std::uint64_t> sample_positions(Rng& rng, std::uint64_t universe, std::uint64_t k) {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(k);
    for (std::uint64_t j = universe - k; j < universe; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) {
            chosen.insert(j);
        }
    }
    std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

double nonzero_uniform(Rng& rng, double scale) {
    double v = 0.0;
    while (v == 0.0) {
        v = rng.uniform(-scale, scale);
    }
    return v;
}

Eigen::VectorXd sparse_column(Rng& rng, std::size_t rows, double fraction, double scale) {
    Eigen::VectorXd column = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
    for (std::uint64_t pos : sample_positions(rng, rows, nonzero_count(fraction, rows))) {
        column(static_cast<Eigen::Index>(pos)) = nonzero_uniform(rng, scale);
    }
    return column;
}

// A matrix whose nonzero pattern has no directed cycle is nilpotent: every
// eigenvalue is exactly zero, though rounding makes Krylov estimates of it
// come out near eps^(1/k) rather than 0.
bool pattern_is_acyclic(const SparseMatrix& m) {
    const Eigen::Index n = m.rows();
    std::vector<std::size_t> indegree(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
            if (it.value() != 0.0) {
                ++indegree[static_cast<std::size_t>(it.col())];
            }
        }
    }
    std::vector<Eigen::Index> ready;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (indegree[static_cast<std::size_t>(i)] == 0) {
            ready.push_back(i);
        }
    }
    Eigen::Index removed = 0;
    while (!ready.empty()) {
        const Eigen::Index i = ready.back();
        ready.pop_back();
        ++removed;
        for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
            if (it.value() != 0.0 && --indegree[static_cast<std::size_t>(it.col())] == 0) {
                ready.push_back(it.col());
            }
        }
    }
    return removed == n;
}

double dominant_magnitude(const Eigen::VectorXcd& values, Eigen::Index& which) {
    double best = -1.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (std::abs(values(i)) > best) {
            best = std::abs(values(i));
            which = i;
        }
    }
    return best;
}

}  // namespace

void ReservoirConfig::validate() const {
    require(units > 0, "units", "must be positive", static_cast<double>(units));
    require(leak_rate > 0.0 && leak_rate <= 1.0, "leak_rate", "must lie in (0, 1]", leak_rate);
    require(spectral_radius > 0.0 && std::isfinite(spectral_radius), "rho", "must be positive",
            spectral_radius);
    require(input_scaling > 0.0 && std::isfinite(input_scaling), "input_scaling",
            "must be positive", input_scaling);
    require(rc_connectivity > 0.0 && rc_connectivity <= 1.0, "rc_connectivity",
            "must lie in (0, 1]", rc_connectivity);
    require(input_connectivity > 0.0 && input_connectivity <= 1.0, "input_connectivity",
            "must lie in (0, 1]", input_connectivity);
    require(fb_connectivity > 0.0 && std::isfinite(fb_connectivity), "fb_connectivity",
            "must be positive", fb_connectivity);
    require(regularization_coef >= 0.0 && std::isfinite(regularization_coef),
            "regularization_coef", "must be non-negative", regularization_coef);
}

double spectral_radius(const SparseMatrix& matrix, SpectralRadiusOptions options) {
    const Eigen::Index n = matrix.rows();
    if (n == 0 || pattern_is_acyclic(matrix)) {
        return 0.0;
    }
    const Eigen::Index m = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(options.krylov_dim));

    Rng rng(0x5eedULL);
    Eigen::VectorXd start(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        start(i) = rng.uniform(-1.0, 1.0);
    }

    double estimate = 0.0;
    for (std::size_t cycle = 0; cycle <= options.max_restarts; ++cycle) {
        Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, m + 1);
        Eigen::MatrixXd hessenberg = Eigen::MatrixXd::Zero(m + 1, m);
        basis.col(0) = start.normalized();
        Eigen::Index steps = m;
        bool invariant = false;
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::VectorXd w = matrix * basis.col(j);
            const double w_norm = w.norm();
            // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXd coeffs = basis.leftCols(j + 1).transpose() * w;
                w -= basis.leftCols(j + 1) * coeffs;
                hessenberg.col(j).head(j + 1) += coeffs;
            }
            const double h = w.norm();
            hessenberg(j + 1, j) = h;
            if (h <= 1e-13 * std::max(w_norm, 1e-300)) {
                steps = j + 1;
                invariant = true;
                break;
            }
            basis.col(j + 1) = w / h;
        }

        const Eigen::MatrixXd projected = hessenberg.topLeftCorner(steps, steps);
        Eigen::EigenSolver<Eigen::MatrixXd> solver(projected, !invariant && steps < n);
        Eigen::Index which = 0;
        const double next = dominant_magnitude(solver.eigenvalues(), which);
        const bool exact = invariant || steps == n;
        const bool settled = cycle > 0 && std::abs(next - estimate) <= options.tolerance * next;
        estimate = next;
        if (exact || settled) {
            break;
        }
        const Eigen::VectorXcd ritz = basis.leftCols(steps).cast<std::complex<double>>() *
                                      solver.eigenvectors().col(which);
        start = ritz.real() + ritz.imag();
    }
    return estimate;
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                            double lambda) {
    const Eigen::Index cols = design.cols();
    if (design.rows() != targets.size()) {
        throw Error(ErrorKind::Shape, "design matrix has " + std::to_string(design.rows()) +
                                          " rows but " + std::to_string(targets.size()) +
                                          " targets");
    }
    if (lambda == 0.0 && design.rows() < cols) {
        throw Error(ErrorKind::Underdetermined,
                    "least squares with " + std::to_string(design.rows()) + " samples for " +
                        std::to_string(cols) + " readout weights; set a positive ridge coefficient");
    }
    if (lambda > 0.0 && cols <= kNormalEquationsMaxColumns) {
        Eigen::MatrixXd gram = design.transpose() * design;
        gram.diagonal().array() += lambda;
        const Eigen::LLT<Eigen::MatrixXd> chol(gram);
        if (chol.info() == Eigen::Success) {
            return chol.solve(design.transpose() * targets);
        }
    }
    Eigen::MatrixXd augmented(design.rows() + cols, cols);
    augmented << design, std::sqrt(lambda) * Eigen::MatrixXd::Identity(cols, cols);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(design.rows() + cols);
    rhs.head(design.rows()) = targets;
    return augmented.completeOrthogonalDecomposition().solve(rhs);
}

EsnModel EsnModel::build(const ReservoirConfig& config) {
    config.validate();
    const std::size_t n = config.units;
    Rng rng(config.seed);

    const auto nnz = nonzero_count(config.rc_connectivity, n * n);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nnz);
    for (std::uint64_t pos : sample_positions(rng, n * n, nnz)) {
        triplets.emplace_back(static_cast<int>(pos / n), static_cast<int>(pos % n),
                              nonzero_uniform(rng, 1.0));
    }
    SparseMatrix w_res(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    w_res.setFromTriplets(triplets.begin(), triplets.end());

    const double raw_radius = spectral_radius(w_res);
    if (!(raw_radius > 1e-12)) {
        throw Error(ErrorKind::DegenerateReservoir,
                    "drawn reservoir has spectral radius ~0 (seed " + std::to_string(config.seed) +
                        ", " + std::to_string(nnz) + " nonzeros); try another seed or density");
    }
    w_res *= config.spectral_radius / raw_radius;

    Eigen::VectorXd w_in = sparse_column(rng, n, config.input_connectivity, config.input_scaling);
    Eigen::VectorXd w_fb;
    if (config.feedback_enabled) {
        if (config.fb_connectivity > 1.0) {
            std::clog << "warning: reservoir.fb_connectivity = "
                      << text::format_double(config.fb_connectivity)
                      << " exceeds 1; drawing a fully connected feedback vector\n";
        }
        w_fb = sparse_column(rng, n, std::min(config.fb_connectivity, 1.0), config.input_scaling);
    }
    return EsnModel(config, std::move(w_in), std::move(w_res), std::move(w_fb));
}

EsnModel::EsnModel(ReservoirConfig config, Eigen::VectorXd w_in, SparseMatrix w_res,
                   Eigen::VectorXd w_fb, std::optional<Eigen::VectorXd> w_out)
    : config_(config),
      w_in_(std::move(w_in)),
      w_res_(std::move(w_res)),
      w_fb_(std::move(w_fb)),
      state_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.units))) {
    const auto n = static_cast<Eigen::Index>(config_.units);
    if (w_in_.size() != n || w_res_.rows() != n || w_res_.cols() != n) {
        throw Error(ErrorKind::Shape, "reservoir weights do not match units = " +
                                          std::to_string(config_.units));
    }
    if (config_.feedback_enabled && w_fb_.size() != n) {
        throw Error(ErrorKind::Shape, "feedback enabled but W_fb has " +
                                          std::to_string(w_fb_.size()) + " entries");
    }
    if (w_out) {
        set_readout(std::move(*w_out));
    }
}

void EsnModel::set_readout(Eigen::VectorXd w_out) {
    if (w_out.size() != static_cast<Eigen::Index>(config_.units) + 1) {
        throw Error(ErrorKind::Shape, "readout needs units + 1 = " +
                                          std::to_string(config_.units + 1) + " weights, got " +
                                          std::to_string(w_out.size()));
    }
    w_out_ = std::move(w_out);
}

void EsnModel::set_state(Eigen::VectorXd state) {
    if (state.size() != static_cast<Eigen::Index>(config_.units)) {
        throw Error(ErrorKind::Shape, "state size mismatch");
    }
    state_ = std::move(state);
}

Eigen::VectorXd EsnModel::next_state(const Eigen::VectorXd& state, double x,
                                     std::optional<double> y_prev) const {
    if (!std::isfinite(x)) {
        throw Error(ErrorKind::Input, "reservoir input is not finite");
    }
    if (y_prev.has_value() != config_.feedback_enabled) {
        throw Error(ErrorKind::Input, config_.feedback_enabled
                                          ? "feedback is enabled but no previous output was given"
                                          : "previous output given but feedback is disabled");
    }
    Eigen::VectorXd pre = w_in_ * x + w_res_ * state;
    if (y_prev) {
        if (!std::isfinite(*y_prev)) {
            throw Error(ErrorKind::Input, "feedback value is not finite");
        }
        pre += w_fb_ * *y_prev;
    }
    const double a = config_.leak_rate;
    return (1.0 - a) * state + a * pre.array().tanh().matrix();
}

const Eigen::VectorXd& EsnModel::update_state(double x, std::optional<double> y_prev) {
    state_ = next_state(state_, x, y_prev);
    return state_;
}

double EsnModel::read(const Eigen::VectorXd& state) const {
    require_fitted();
    const Eigen::VectorXd& w = *w_out_;
    return w(0) + w.tail(w.size() - 1).dot(state);
}

void EsnModel::require_fitted() const {
    if (!w_out_) {
        throw Error(ErrorKind::NotFitted, "ESN readout has not been trained");
    }
}

std::optional<double> EsnModel::feedback_value() const {
    return config_.feedback_enabled ? std::optional<double>(last_output_) : std::nullopt;
}

void EsnModel::reset_state() {
    state_.setZero();
    last_output_ = 0.0;
}

Eigen::MatrixXd EsnModel::harvest_states(const SupervisedSet& data) {
    const std::size_t pairs = data.size();
    if (data.targets.size() != pairs) {
        throw Error(ErrorKind::Shape, "supervised set inputs/targets differ in length");
    }
    if (pairs <= config_.washout) {
        throw Error(ErrorKind::InsufficientData,
                    std::to_string(pairs) + " training pairs do not exceed the washout of " +
                        std::to_string(config_.washout));
    }
    const auto n = static_cast<Eigen::Index>(config_.units);
    Eigen::MatrixXd design(static_cast<Eigen::Index>(pairs - config_.washout), n + 1);
    reset_state();
    const std::size_t lag = std::max<std::size_t>(data.lag, 1);
    for (std::size_t i = 0; i < pairs; ++i) {
        std::optional<double> teacher;
        if (config_.feedback_enabled) {
            // Latest target already observed when inputs[i] arrives.
            teacher = i >= lag ? data.targets[i - lag] : 0.0;
        }
        update_state(data.inputs[i], teacher);
        if (i >= config_.washout) {
            const auto row = static_cast<Eigen::Index>(i - config_.washout);
            design(row, 0) = 1.0;
            design.row(row).tail(n) = state_.transpose();
        }
    }
    if (config_.feedback_enabled) {
        last_output_ = data.targets.back();
    }
    return design;
}

FitReport EsnModel::fit_readout(const SupervisedSet& data) {
    const auto started = std::chrono::steady_clock::now();
    const Eigen::MatrixXd design = harvest_states(data);
    const auto rows = design.rows();
    Eigen::VectorXd targets(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        targets(i) = data.targets[config_.washout + static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd w_out = solve_ridge(design, targets, config_.regularization_coef);
    if (!w_out.allFinite()) {
        throw Error(ErrorKind::Divergence, "ridge readout solve produced non-finite weights");
    }
    FitReport report;
    report.ridge_residual_norm = (design * w_out - targets).norm();
    report.effective_samples = static_cast<std::size_t>(rows);
    w_out_ = std::move(w_out);
    report.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::vector<double> EsnModel::predict_one_step(std::span<const double> inputs) {
    require_fitted();
    std::vector<double> out;
    out.reserve(inputs.size());
    for (double x : inputs) {
        update_state(x, feedback_value());
        last_output_ = read(state_);
        out.push_back(last_output_);
    }
    return out;
}

std::vector<double> EsnModel::predict_free_running(double x0, std::size_t horizon) {
    require_fitted();
    if (horizon == 0) {
        throw Error(ErrorKind::Input, "free-running horizon must be positive");
    }
    std::vector<double> out;
    out.reserve(horizon);
    double x = x0;
    for (std::size_t step = 0; step < horizon; ++step) {
        update_state(x, feedback_value());
        const double y = read(state_);
        if (!std::isfinite(y)) {
            throw Error(ErrorKind::Divergence,
                        "free-running prediction became non-finite at step " + std::to_string(step));
        }
        last_output_ = y;
        out.push_back(y);
        x = y;
    }
    return out;
}

}  // namespace rescast::esn
