#include "rescast/model_io.hpp"

#include "rescast/error.hpp"
#include "rescast/text.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace rescast {

namespace {

constexpr std::string_view kMagic = "rescast-model";

class LineReader {
public:
    explicit LineReader(std::string_view text) : lines_(text::split(text, '\n')) {}

    bool done() {
        skip_blank();
        return pos_ >= lines_.size();
    }

    std::vector<std::string_view> fields() {
        skip_blank();
        if (pos_ >= lines_.size()) {
            fail("unexpected end of file");
        }
        std::vector<std::string_view> out;
        for (std::string_view f : text::split(text::trim(lines_[pos_]), ' ')) {
            if (!f.empty()) {
                out.push_back(f);
            }
        }
        ++pos_;
        return out;
    }

    std::vector<std::string_view> peek() {
        const std::size_t saved = pos_;
        auto out = fields();
        pos_ = saved;
        return out;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorKind::Artifact, "model file line " + std::to_string(pos_) + ": " + what);
    }

    double number(std::string_view token) const {
        const auto v = text::parse_double(token);
        if (!v) {
            fail("expected a number, found '" + std::string(token) + "'");
        }
        return *v;
    }

    long long integer(std::string_view token) const {
        const auto v = text::parse_int(token);
        if (!v || *v < 0) {
            fail("expected a non-negative integer, found '" + std::string(token) + "'");
        }
        return *v;
    }

private:
    void skip_blank() {
        while (pos_ < lines_.size() && text::trim(lines_[pos_]).empty()) {
            ++pos_;
        }
    }

    std::vector<std::string_view> lines_;
    std::size_t pos_ = 0;
};

using Metadata = std::map<std::string, std::string, std::less<>>;

class MetaView {
public:
    MetaView(const Metadata& meta, const LineReader& reader) : meta_(meta), reader_(reader) {}

    std::string_view raw(std::string_view key) const {
        const auto it = meta_.find(key);
        if (it == meta_.end()) {
            reader_.fail("missing metadata key '" + std::string(key) + "'");
        }
        return it->second;
    }
    double number(std::string_view key) const { return reader_.number(raw(key)); }
    std::size_t count(std::string_view key) const {
        return static_cast<std::size_t>(reader_.integer(raw(key)));
    }
    std::uint64_t seed(std::string_view key) const {
        std::uint64_t v = 0;
        const std::string_view s = raw(key);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            reader_.fail("bad seed '" + std::string(s) + "'");
        }
        return v;
    }

private:
    const Metadata& meta_;
    const LineReader& reader_;
};

void put(std::ostringstream& out, std::string_view key, double value) {
    out << key << ' ' << text::format_double(value) << '\n';
}

void put(std::ostringstream& out, std::string_view key, std::uint64_t value) {
    out << key << ' ' << value << '\n';
}

void write_vector(std::ostringstream& out, std::string_view name, const Eigen::VectorXd& v) {
    out << name << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << text::format_double(v(i)) << '\n';
    }
}

Eigen::VectorXd read_vector(LineReader& in, std::string_view name) {
    const auto head = in.fields();
    if (head.size() != 2 || head[0] != name) {
        in.fail("expected block '" + std::string(name) + "'");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(in.integer(head[1])));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto f = in.fields();
        if (f.size() != 1) {
            in.fail("expected one value per line in block '" + std::string(name) + "'");
        }
        v(i) = in.number(f[0]);
    }
    return v;
}

void write_esn(std::ostringstream& out, const esn::EsnModel& m) {
    const esn::ReservoirConfig& c = m.config();
    put(out, "reservoir.units", static_cast<std::uint64_t>(c.units));
    put(out, "reservoir.leak_rate", c.leak_rate);
    put(out, "reservoir.rho", c.spectral_radius);
    put(out, "reservoir.input_scaling", c.input_scaling);
    put(out, "reservoir.rc_connectivity", c.rc_connectivity);
    put(out, "reservoir.input_connectivity", c.input_connectivity);
    put(out, "reservoir.fb_connectivity", c.fb_connectivity);
    put(out, "reservoir.regularization_coef", c.regularization_coef);
    put(out, "reservoir.washout", static_cast<std::uint64_t>(c.washout));
    put(out, "reservoir.seed", c.seed);
    put(out, "reservoir.feedback_enabled", static_cast<std::uint64_t>(c.feedback_enabled));

    write_vector(out, "w_in", m.input_weights());
    const esn::SparseMatrix& w = m.reservoir_weights();
    out << "w_res " << w.nonZeros() << '\n';
    for (Eigen::Index r = 0; r < w.outerSize(); ++r) {
        for (esn::SparseMatrix::InnerIterator it(w, r); it; ++it) {
            out << it.row() << ' ' << it.col() << ' ' << text::format_double(it.value()) << '\n';
        }
    }
    write_vector(out, "w_fb", m.feedback_weights());
    write_vector(out, "w_out", m.readout().value_or(Eigen::VectorXd()));
}

esn::EsnModel read_esn(LineReader& in, const MetaView& meta) {
    esn::ReservoirConfig c;
    c.units = meta.count("reservoir.units");
    c.leak_rate = meta.number("reservoir.leak_rate");
    c.spectral_radius = meta.number("reservoir.rho");
    c.input_scaling = meta.number("reservoir.input_scaling");
    c.rc_connectivity = meta.number("reservoir.rc_connectivity");
    c.input_connectivity = meta.number("reservoir.input_connectivity");
    c.fb_connectivity = meta.number("reservoir.fb_connectivity");
    c.regularization_coef = meta.number("reservoir.regularization_coef");
    c.washout = meta.count("reservoir.washout");
    c.seed = meta.seed("reservoir.seed");
    c.feedback_enabled = meta.count("reservoir.feedback_enabled") != 0;

    Eigen::VectorXd w_in = read_vector(in, "w_in");
    const auto head = in.fields();
    if (head.size() != 2 || head[0] != "w_res") {
        in.fail("expected block 'w_res'");
    }
    const auto nnz = in.integer(head[1]);
    const auto n = static_cast<Eigen::Index>(c.units);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(nnz));
    for (long long k = 0; k < nnz; ++k) {
        const auto f = in.fields();
        if (f.size() != 3) {
            in.fail("expected 'row col value' in block 'w_res'");
        }
        const auto r = in.integer(f[0]);
        const auto col = in.integer(f[1]);
        if (r >= n || col >= n) {
            in.fail("w_res coordinate outside a " + std::to_string(n) + "x" + std::to_string(n) +
                    " matrix");
        }
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(col), in.number(f[2]));
    }
    esn::SparseMatrix w_res(n, n);
    w_res.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::VectorXd w_fb = read_vector(in, "w_fb");
    Eigen::VectorXd w_out = read_vector(in, "w_out");
    std::optional<Eigen::VectorXd> readout;
    if (w_out.size() > 0) {
        readout = std::move(w_out);
    }
    try {
        return esn::EsnModel(c, std::move(w_in), std::move(w_res), std::move(w_fb),
                             std::move(readout));
    } catch (const Error& e) {
        in.fail(e.what());
    }
}

void write_lstm(std::ostringstream& out, const lstm::LstmModel& m, const lstm::LstmConfig& c) {
    put(out, "lstm.hidden_units", static_cast<std::uint64_t>(m.params().hidden_units()));
    put(out, "lstm.epochs", static_cast<std::uint64_t>(c.epochs));
    put(out, "lstm.learning_rate", c.learning_rate);
    put(out, "lstm.bptt_window", static_cast<std::uint64_t>(c.bptt_window));
    put(out, "lstm.seed", c.seed);
    out << "lstm.optimizer " << lstm::to_string(c.optimizer) << '\n';
    put(out, "lstm.fitted", static_cast<std::uint64_t>(m.fitted()));
    const auto tensors = m.params().tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const Eigen::MatrixXd& t = *tensors[k];
        out << "tensor " << lstm::LstmParams::kNames[k] << ' ' << t.rows() << ' ' << t.cols()
            << '\n';
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.cols(); ++j) {
                out << text::format_double(t(i, j)) << '\n';
            }
        }
    }
}

lstm::LstmModel read_lstm(LineReader& in, const MetaView& meta, lstm::LstmConfig& config) {
    config.hidden_units = meta.count("lstm.hidden_units");
    config.epochs = meta.count("lstm.epochs");
    config.learning_rate = meta.number("lstm.learning_rate");
    config.bptt_window = meta.count("lstm.bptt_window");
    config.seed = meta.seed("lstm.seed");
    const std::string_view opt = meta.raw("lstm.optimizer");
    if (opt == lstm::to_string(lstm::Optimizer::PlainGradient)) {
        config.optimizer = lstm::Optimizer::PlainGradient;
    } else if (opt == lstm::to_string(lstm::Optimizer::AdaptiveMoments)) {
        config.optimizer = lstm::Optimizer::AdaptiveMoments;
    } else {
        in.fail("unknown optimizer '" + std::string(opt) + "'");
    }
    const bool fitted = meta.count("lstm.fitted") != 0;

    lstm::LstmParams params = lstm::LstmParams::zeros(config.hidden_units);
    auto tensors = params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const auto head = in.fields();
        if (head.size() != 4 || head[0] != "tensor" || head[1] != lstm::LstmParams::kNames[k]) {
            in.fail("expected 'tensor " + std::string(lstm::LstmParams::kNames[k]) +
                    " rows cols'");
        }
        Eigen::MatrixXd& t = *tensors[k];
        if (in.integer(head[2]) != t.rows() || in.integer(head[3]) != t.cols()) {
            in.fail("tensor " + std::string(head[1]) + " has the wrong shape");
        }
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.cols(); ++j) {
                const auto f = in.fields();
                if (f.size() != 1) {
                    in.fail("expected one value per line in tensor " + std::string(head[1]));
                }
                t(i, j) = in.number(f[0]);
            }
        }
    }
    return lstm::LstmModel(std::move(params), fitted);
}

}  // namespace

std::string serialize_model(const ModelArtifact& artifact) {
    std::ostringstream out;
    out << kMagic << '\n';
    out << "format_version " << kModelFormatVersion << '\n';
    out << "kind " << (std::holds_alternative<esn::EsnModel>(artifact.model) ? "esn" : "lstm")
        << '\n';
    put(out, "normalization.y_min", artifact.normalization.y_min);
    put(out, "normalization.y_max", artifact.normalization.y_max);
    put(out, "split.train_fraction", artifact.split.train_fraction);
    put(out, "supervised.lag", static_cast<std::uint64_t>(artifact.lag));
    if (const auto* esn_model = std::get_if<esn::EsnModel>(&artifact.model)) {
        write_esn(out, *esn_model);
    } else {
        write_lstm(out, std::get<lstm::LstmModel>(artifact.model), artifact.lstm_config);
    }
    out << "end\n";
    return out.str();
}

ModelArtifact deserialize_model(std::string_view text) {
    LineReader in(text);
    if (in.done() || in.fields() != std::vector<std::string_view>{kMagic}) {
        in.fail("not a rescast model file");
    }
    const auto version = in.fields();
    if (version.size() != 2 || version[0] != "format_version") {
        in.fail("missing format_version");
    }
    if (in.integer(version[1]) != kModelFormatVersion) {
        in.fail("format_version " + std::string(version[1]) + " is not supported (expected " +
                std::to_string(kModelFormatVersion) + ")");
    }
    const auto kind = in.fields();
    if (kind.size() != 2 || kind[0] != "kind" || (kind[1] != "esn" && kind[1] != "lstm")) {
        in.fail("expected 'kind esn' or 'kind lstm'");
    }

    Metadata meta;
    while (true) {
        const auto next = in.peek();
        if (next.empty() || next[0].starts_with("w_") || next[0] == "tensor" || next[0] == "end") {
            break;
        }
        if (next.size() != 2) {
            in.fail("expected 'key value'");
        }
        meta.emplace(std::string(next[0]), std::string(next[1]));
        in.fields();
    }
    const MetaView view(meta, in);

    NormalizationParams norm{view.number("normalization.y_min"),
                             view.number("normalization.y_max")};
    SplitSpec split{view.number("split.train_fraction")};
    const std::size_t lag = view.count("supervised.lag");
    lstm::LstmConfig lstm_config;
    auto model = kind[1] == "esn"
                     ? std::variant<esn::EsnModel, lstm::LstmModel>(read_esn(in, view))
                     : std::variant<esn::EsnModel, lstm::LstmModel>(
                           read_lstm(in, view, lstm_config));
    if (in.fields() != std::vector<std::string_view>{"end"}) {
        in.fail("expected 'end'");
    }
    return ModelArtifact{std::move(model), norm, split, lag, lstm_config};
}

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << serialize_model(artifact);
    if (!out) {
        throw Error(ErrorKind::Artifact, "cannot write model file " + path.string());
    }
}

ModelArtifact load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Artifact, "cannot read model file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace rescast
