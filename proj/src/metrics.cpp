#include "rescast/metrics.hpp"

#include "rescast/error.hpp"
#include "rescast/text.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace rescast::metrics {

namespace {

double mean_of(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) {
        sum += x;
    }
    return sum / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return ss / static_cast<double>(v.size() - 1);
}

void require_finite(std::span<const double> v, std::string_view what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw Error(ErrorKind::Input, std::string(what) + " contain a non-finite value");
        }
    }
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string_view to_string(Scale scale) {
    return scale == Scale::Raw ? "raw" : "normalized";
}

EvaluationReport evaluate(std::span<const double> actuals, std::span<const double> predictions,
                          double mape_epsilon) {
    if (actuals.size() != predictions.size()) {
        throw Error(ErrorKind::Shape, "evaluate: " + std::to_string(actuals.size()) +
                                          " actuals vs " + std::to_string(predictions.size()) +
                                          " predictions");
    }
    if (actuals.empty()) {
        throw Error(ErrorKind::Empty, "evaluate: no samples");
    }
    require_finite(actuals, "actuals");
    require_finite(predictions, "predictions");

    const std::size_t n = actuals.size();
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    std::size_t pct_terms = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double err = actuals[i] - predictions[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
        if (std::abs(actuals[i]) >= mape_epsilon) {
            pct_sum += std::abs(err / actuals[i]);
            ++pct_terms;
        }
    }
    EvaluationReport report;
    report.n = n;
    report.mae = abs_sum / static_cast<double>(n);
    report.mse = sq_sum / static_cast<double>(n);
    report.rmse = std::sqrt(report.mse);
    report.mape_skipped = n - pct_terms;
    report.mape_percent = pct_terms > 0 ? pct_sum / static_cast<double>(pct_terms) * 100.0 : 0.0;
    const double mean_actual = mean_of(actuals);
    if (std::abs(mean_actual) >= mape_epsilon) {
        report.nrmse_mean = report.rmse / mean_actual;
    }
    return report;
}

nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["mae"] = r.mae;
    j["mse"] = r.mse;
    j["rmse"] = r.rmse;
    j["mape_percent"] = r.mape_percent;
    j["nrmse_mean"] = optional_json(r.nrmse_mean);
    j["n"] = r.n;
    j["runtime_seconds"] = optional_json(r.runtime_seconds);
    j["model_name"] = r.model_name;
    j["scale"] = std::string(to_string(r.scale));
    return j;
}

std::string to_csv_row(const EvaluationReport& r) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? text::format_double(*v) : std::string();
    };
    return text::format_double(r.mae) + ',' + text::format_double(r.mse) + ',' +
           text::format_double(r.rmse) + ',' + text::format_double(r.mape_percent) + ',' +
           opt(r.nrmse_mean) + ',' + std::to_string(r.n) + ',' + opt(r.runtime_seconds) + ',' +
           r.model_name + ',' + std::string(to_string(r.scale));
}

DescriptiveStats describe(std::span<const double> values) {
    if (values.size() < 2) {
        throw Error(ErrorKind::InsufficientData, "describe needs at least 2 values");
    }
    require_finite(values, "values");
    const std::size_t n = values.size();
    const double nd = static_cast<double>(n);

    DescriptiveStats s;
    s.count = n;
    s.mean = mean_of(values);
    s.std = std::sqrt(sample_variance(values, s.mean));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
    for (double x : values) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    if (m2 > 0.0) {
        const double skew = m3 / std::pow(m2, 1.5);
        const double kurt = m4 / (m2 * m2) - 3.0;
        const double jb = nd * (skew * skew / 6.0 + kurt * kurt / 24.0);
        s.skewness = skew;
        s.kurtosis = kurt;
        s.jarque_bera_statistic = jb;
        // chi-square with 2 degrees of freedom has survival exp(-x / 2)
        s.jarque_bera_p = std::exp(-0.5 * jb);
    }
    return s;
}

nlohmann::ordered_json to_json(const DescriptiveStats& s) {
    nlohmann::ordered_json j;
    j["count"] = s.count;
    j["mean"] = s.mean;
    j["std"] = s.std;
    j["min"] = s.min;
    j["max"] = s.max;
    j["median"] = s.median;
    j["skewness"] = optional_json(s.skewness);
    j["kurtosis"] = optional_json(s.kurtosis);
    j["jarque_bera_statistic"] = optional_json(s.jarque_bera_statistic);
    j["jarque_bera_p"] = optional_json(s.jarque_bera_p);
    return j;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw Error(ErrorKind::InsufficientData, "Welch t-test needs at least 2 values per sample");
    }
    require_finite(a, "sample a");
    require_finite(b, "sample b");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double mean_a = mean_of(a);
    const double mean_b = mean_of(b);
    const double qa = sample_variance(a, mean_a) / na;
    const double qb = sample_variance(b, mean_b) / nb;
    if (qa == 0.0 && qb == 0.0) {
        throw Error(ErrorKind::DegenerateTest, "Welch t-test: both samples have zero variance");
    }
    WelchResult r;
    r.t = (mean_a - mean_b) / std::sqrt(qa + qb);
    r.df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    const boost::math::students_t dist(r.df);
    r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
    return r;
}

}  // namespace rescast::metrics
