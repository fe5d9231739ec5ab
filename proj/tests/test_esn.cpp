#include "rescast/error.hpp"
#include "rescast/esn.hpp"
#include "rescast/model_io.hpp"
#include "rescast/random.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace rescast;
using esn::EsnModel;
using esn::ReservoirConfig;
using esn::SparseMatrix;

namespace {

SparseMatrix sparse(const Eigen::MatrixXd& dense) { return dense.sparseView(); }

double dense_radius(const SparseMatrix& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SupervisedSet random_set(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    SupervisedSet s;
    for (std::size_t i = 0; i < n; ++i) {
        s.inputs.push_back(rng.uniform01());
        s.targets.push_back(rng.uniform01());
    }
    return s;
}

ReservoirConfig small_config(std::size_t units, double leak) {
    ReservoirConfig c;
    c.units = units;
    c.leak_rate = leak;
    c.washout = 0;
    return c;
}

}  // namespace

TEST_CASE("build is deterministic per seed") {
    ReservoirConfig c;
    const EsnModel a = EsnModel::build(c);
    const EsnModel b = EsnModel::build(c);
    CHECK(a.input_weights() == b.input_weights());
    CHECK(Eigen::MatrixXd(a.reservoir_weights()) == Eigen::MatrixXd(b.reservoir_weights()));
    c.seed = 8;
    const EsnModel other = EsnModel::build(c);
    CHECK(Eigen::MatrixXd(other.reservoir_weights()) != Eigen::MatrixXd(a.reservoir_weights()));
}

TEST_CASE("default reservoir sparsity, scaling and radius") {
    const EsnModel m = EsnModel::build(ReservoirConfig{});
    CHECK(m.reservoir_weights().nonZeros() == 60);
    const Eigen::VectorXd& w_in = m.input_weights();
    CHECK((w_in.array() != 0.0).count() == 4);  // round(0.2 * 20)
    CHECK(w_in.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(m.feedback_weights().size() == 0);
    const double rho = esn::spectral_radius(m.reservoir_weights());
    CHECK(std::abs(rho - 1.025) <= 1.025e-6);
    CHECK(std::abs(dense_radius(m.reservoir_weights()) - 1.025) <= 1.025e-6);
}

TEST_CASE("radius matches a dense eigensolver across sizes") {
    for (std::size_t units : {8, 20, 50, 200, 300}) {
        ReservoirConfig c;
        c.units = units;
        c.seed = units * 31;
        c.spectral_radius = 0.9;
        const EsnModel m = EsnModel::build(c);
        CHECK(std::abs(dense_radius(m.reservoir_weights()) - 0.9) <= 0.9e-6);
    }
}

TEST_CASE("nilpotent draws are rejected") {
    esn::ReservoirConfig c;
    c.units = 5;
    c.seed = 155;  // 4 nonzeros with no directed cycle
    try {
        EsnModel::build(c);
        FAIL("expected a degenerate reservoir");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateReservoir);
    }
    Eigen::MatrixXd upper(3, 3);
    upper << 0, 1, 2, 0, 0, 3, 0, 0, 0;
    CHECK(esn::spectral_radius(sparse(upper)) == 0.0);
}

TEST_CASE("spectral_radius on known matrices") {
    Eigen::MatrixXd rot(2, 2);
    rot << 0, -2, 2, 0;  // eigenvalues +-2i
    CHECK(esn::spectral_radius(sparse(rot)) == doctest::Approx(2.0).epsilon(1e-12));
    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(3, 3);
    diag.diagonal() << 0.5, -3.0, 1.0;
    CHECK(esn::spectral_radius(sparse(diag)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(esn::spectral_radius(SparseMatrix(4, 4)) == 0.0);
}

TEST_CASE("feedback weights follow the clamped connectivity") {
    ReservoirConfig c;
    c.feedback_enabled = true;
    const EsnModel m = EsnModel::build(c);
    REQUIRE(m.feedback_weights().size() == 20);
    CHECK((m.feedback_weights().array() != 0.0).count() == 20);
    // Feedback draws come after the reservoir, so the rest is unchanged.
    c.feedback_enabled = false;
    CHECK(m.input_weights() == EsnModel::build(c).input_weights());
}

TEST_CASE("invalid configs name the field") {
    ReservoirConfig c;
    c.leak_rate = 0.0;
    try {
        EsnModel::build(c);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
        CHECK(std::string(e.what()).find("leak_rate") != std::string::npos);
    }
}

TEST_CASE("update_state examples") {
    EsnModel zero(small_config(2, 0.75), Eigen::VectorXd::Zero(2), SparseMatrix(2, 2), {});
    Eigen::VectorXd r(2);
    r << 0.4, -0.2;
    const Eigen::VectorXd next = zero.next_state(r, 123.0);
    CHECK(next(0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(next(1) == doctest::Approx(-0.05).epsilon(1e-15));

    Eigen::VectorXd w_in(3);
    w_in << 0.5, -1.0, 2.0;
    Eigen::MatrixXd w(3, 3);
    w << 0, 0.3, 0, 0.1, 0, -0.2, 0, 0.4, 0;
    EsnModel full(small_config(3, 1.0), w_in, sparse(w), {});
    const Eigen::VectorXd from_zero = full.next_state(Eigen::VectorXd::Zero(3), 0.7);
    for (int i = 0; i < 3; ++i) {
        CHECK(from_zero(i) == std::tanh(w_in(i) * 0.7));
    }

    EsnModel scalar(small_config(1, 0.75), Eigen::VectorXd::Constant(1, 2.0),
                    sparse(Eigen::MatrixXd::Constant(1, 1, 0.5)), {});
    scalar.set_state(Eigen::VectorXd::Constant(1, 0.1));
    // 0.025 + 0.75 tanh(0.65), evaluated at 30 digits.
    CHECK(scalar.update_state(0.3)(0) == doctest::Approx(0.453752474563837918903).epsilon(1e-14));
}

TEST_CASE("leak limits") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        ReservoirConfig c;
        c.seed = 100 + trial;
        c.leak_rate = 1.0;
        const EsnModel m = EsnModel::build(c);
        Eigen::VectorXd r(20);
        for (int i = 0; i < 20; ++i) {
            r(i) = rng.uniform(-0.9, 0.9);
        }
        const double x = rng.uniform(-1, 1);
        const Eigen::VectorXd expected =
            (m.input_weights() * x + m.reservoir_weights() * r).array().tanh().matrix();
        CHECK((m.next_state(r, x) - expected).cwiseAbs().maxCoeff() <= 1e-15);

        c.leak_rate = 1e-9;
        const EsnModel slow = EsnModel::build(c);
        const double step = (slow.next_state(r, x) - r).norm();
        CHECK(step <= 1e-9 * (r.norm() + std::sqrt(20.0)));
    }
}

TEST_CASE("states stay inside (-1, 1) for bounded inputs") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ReservoirConfig c;
        c.seed = seed;
        EsnModel m = EsnModel::build(c);
        Rng rng(seed);
        for (int t = 0; t < 500; ++t) {
            const Eigen::VectorXd& s = m.update_state(rng.uniform(-2.0, 2.0));
            REQUIRE(s.cwiseAbs().maxCoeff() < 1.0);
        }
    }
}

TEST_CASE("feedback requires y_prev") {
    ReservoirConfig c;
    c.feedback_enabled = true;
    EsnModel m = EsnModel::build(c);
    CHECK_THROWS_AS(m.update_state(0.5), Error);
    CHECK_NOTHROW(m.update_state(0.5, 0.2));
}

TEST_CASE("solve_ridge hand-built 2x2 case") {
    Eigen::MatrixXd r(3, 2);
    r << 1, 0.1, 1, 0.4, 1, -0.3;
    Eigen::VectorXd y(3);
    y << 0.5, 1.1, -0.2;
    // Normal equations solved in exact rational arithmetic.
    const Eigen::VectorXd w = esn::solve_ridge(r, y, 1e-8);
    CHECK(w(0) == doctest::Approx(0.34324324704090553).epsilon(1e-12));
    CHECK(w(1) == doctest::Approx(1.8513512772242542).epsilon(1e-12));
}

TEST_CASE("solve_ridge with lambda 0 is least squares") {
    Rng rng(17);
    Eigen::MatrixXd r(40, 6);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 6; ++j) {
            r(i, j) = rng.normal();
        }
        y(i) = rng.normal();
    }
    const Eigen::VectorXd w = esn::solve_ridge(r, y, 0.0);
    const Eigen::VectorXd ols = r.colPivHouseholderQr().solve(y);
    CHECK((w - ols).norm() <= 1e-8 * ols.norm());
    CHECK((r.transpose() * (r * w - y)).cwiseAbs().maxCoeff() <= 1e-8);

    CHECK_THROWS_AS(esn::solve_ridge(r.topRows(3), y.head(3), 0.0), Error);
    CHECK_NOTHROW(esn::solve_ridge(r.topRows(3), y.head(3), 1e-3));
}

TEST_CASE("ridge monotonicity and optimality") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const int rows = 30 + trial;
        const int cols = 8;
        Eigen::MatrixXd r(rows, cols);
        Eigen::VectorXd y(rows);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                r(i, j) = rng.normal();
            }
            y(i) = rng.normal();
        }
        double previous = std::numeric_limits<double>::infinity();
        for (double lambda : {0.0, 1e-6, 1e-3, 0.1, 1.0, 10.0, 1000.0}) {
            const Eigen::VectorXd w = esn::solve_ridge(r, y, lambda);
            CHECK(w.norm() <= previous * (1 + 1e-12));
            previous = w.norm();
            const Eigen::VectorXd grad = r.transpose() * (r * w - y) + lambda * w;
            CHECK(grad.norm() <= 1e-6 * (r.transpose() * y).norm());
        }
    }
}

TEST_CASE("solve_ridge wide systems take the orthogonal path") {
    Rng rng(29);
    const int cols = 520;
    Eigen::MatrixXd r(600, cols);
    Eigen::VectorXd y(600);
    for (int i = 0; i < 600; ++i) {
        for (int j = 0; j < cols; ++j) {
            r(i, j) = rng.normal();
        }
        y(i) = rng.normal();
    }
    const double lambda = 0.5;
    const Eigen::VectorXd w = esn::solve_ridge(r, y, lambda);
    const Eigen::MatrixXd gram = r.transpose() * r + lambda * Eigen::MatrixXd::Identity(cols, cols);
    const Eigen::VectorXd reference = gram.ldlt().solve(r.transpose() * y);
    CHECK((w - reference).norm() <= 1e-8 * reference.norm());
}

TEST_CASE("fit_readout recovers an exactly linear readout") {
    ReservoirConfig c = small_config(5, 0.75);
    c.input_connectivity = 1.0;  // every unit driven, so no all-zero state columns
    c.rc_connectivity = 0.5;
    c.regularization_coef = 0.0;
    c.washout = 10;
    EsnModel m = EsnModel::build(c);
    SupervisedSet data = random_set(120, 41);
    const Eigen::MatrixXd design = m.harvest_states(data);
    REQUIRE(design.rows() == 110);
    REQUIRE(design.cols() == 6);
    CHECK(design.col(0).isOnes());

    Eigen::VectorXd truth(6);
    truth << 0.3, -1.2, 0.8, 2.0, -0.5, 1.1;
    const Eigen::VectorXd y = design * truth;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        data.targets[10 + static_cast<std::size_t>(i)] = y(i);
    }
    const FitReport report = m.fit_readout(data);
    CHECK(report.effective_samples == 110);
    CHECK(report.ridge_residual_norm < 1e-8);
    CHECK((*m.readout() - truth).cwiseAbs().maxCoeff() <= 1e-8);

    m.reset_state();
    const auto predicted = m.predict_one_step(data.inputs);
    for (std::size_t i = 10; i < predicted.size(); ++i) {
        CHECK(predicted[i] == doctest::Approx(data.targets[i]).epsilon(1e-6));
    }
}

TEST_CASE("fit_readout with too few rows") {
    ReservoirConfig c;
    EsnModel m = EsnModel::build(c);
    CHECK_THROWS_AS(m.fit_readout(random_set(40, 1)), Error);  // fewer pairs than the washout
    c.regularization_coef = 0.0;
    c.washout = 0;
    EsnModel exact = EsnModel::build(c);
    try {
        exact.fit_readout(random_set(10, 1));
        FAIL("expected underdetermined");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Underdetermined);
    }
}

TEST_CASE("bias-only readout predicts a constant") {
    EsnModel m = EsnModel::build(ReservoirConfig{});
    Eigen::VectorXd w = Eigen::VectorXd::Zero(21);
    w(0) = 0.42;
    m.set_readout(w);
    for (double p : m.predict_one_step(std::vector<double>{0.1, 0.9, -3.0, 0.5})) {
        CHECK(p == 0.42);
    }
    for (double p : m.predict_free_running(0.7, 25)) {
        CHECK(p == 0.42);
    }
}

TEST_CASE("unfitted models refuse to predict") {
    EsnModel m = EsnModel::build(ReservoirConfig{});
    try {
        m.predict_one_step(std::vector<double>{0.1});
        FAIL("expected not-fitted");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotFitted);
    }
}

TEST_CASE("free-running horizon 1 equals one step") {
    ReservoirConfig c;
    c.washout = 10;
    EsnModel m = EsnModel::build(c);
    const SupervisedSet data = random_set(200, 3);
    m.fit_readout(data);
    EsnModel copy = m;
    const auto free = m.predict_free_running(0.37, 1);
    const auto one = copy.predict_one_step(std::vector<double>{0.37});
    REQUIRE(free.size() == 1);
    CHECK(free[0] == one[0]);
    CHECK_THROWS_AS(m.predict_free_running(0.1, 0), Error);
}

TEST_CASE("reset_state") {
    ReservoirConfig c = small_config(4, 0.5);
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(4, 4) * 0.5;
    EsnModel m(c, Eigen::VectorXd::Zero(4), sparse(w), {});
    m.set_state(Eigen::VectorXd::Constant(4, 0.3));
    m.reset_state();
    CHECK(m.update_state(0.0).isZero(0.0));
    m.reset_state();
    const Eigen::VectorXd once = m.state();
    m.reset_state();
    CHECK(m.state() == once);
}

TEST_CASE("predict after reset equals a freshly deserialized model") {
    ReservoirConfig c;
    c.washout = 20;
    EsnModel m = EsnModel::build(c);
    const SupervisedSet data = random_set(300, 9);
    m.fit_readout(data);

    ModelArtifact artifact{m, {0.0, 1.0}, {}, 1, {}};
    const ModelArtifact loaded = deserialize_model(serialize_model(artifact));
    EsnModel fresh = std::get<EsnModel>(loaded.model);

    m.predict_one_step(data.inputs);  // move the state away from zero
    m.reset_state();
    const std::vector<double> probe{0.2, 0.4, 0.9, 0.1, 0.5};
    CHECK(m.predict_one_step(probe) == fresh.predict_one_step(probe));
}

TEST_CASE("identical data gives bit-identical predictions") {
    const SupervisedSet data = random_set(400, 77);
    EsnModel a = EsnModel::build(ReservoirConfig{});
    EsnModel b = EsnModel::build(ReservoirConfig{});
    a.fit_readout(data);
    b.fit_readout(data);
    CHECK(*a.readout() == *b.readout());
    a.reset_state();
    b.reset_state();
    CHECK(a.predict_one_step(data.inputs) == b.predict_one_step(data.inputs));
}
