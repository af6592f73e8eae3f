#include "hydrovalue/bundle.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hydrovalue/error.hpp"
#include "json.hpp"

namespace hydrovalue {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != static_cast<std::size_t>(cols)) throw ValidationError("bundle: ragged coefficient matrix");
        for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), k) = j[i][static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

json quantiles_json(const QuantileFamily& f) {
    json q;
    q["omega"] = f.basis.omega;
    q["harmonics"] = f.basis.harmonics;
    q["levels"] = f.levels;
    json betas = json::array();
    for (const auto& m : f.models) betas.push_back(std::vector<double>(m.beta.data(), m.beta.data() + m.beta.size()));
    q["beta"] = betas;
    return q;
}

QuantileFamily quantiles_from(const json& q) {
    QuantileFamily f;
    f.basis = FourierBasis{q.at("omega").get<double>(), q.at("harmonics").get<int>()};
    f.levels = q.at("levels").get<std::vector<double>>();
    const auto betas = q.at("beta").get<std::vector<std::vector<double>>>();
    if (betas.size() != f.levels.size()) throw ValidationError("quantile level/beta mismatch");
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (static_cast<int>(betas[i].size()) != f.basis.dimension()) {
            throw ValidationError("quantile coefficient length mismatch");
        }
        QuantileModel m;
        m.alpha = f.levels[i];
        m.basis = f.basis;
        m.beta = Eigen::Map<const Eigen::VectorXd>(betas[i].data(), static_cast<Eigen::Index>(betas[i].size()));
        f.models.push_back(std::move(m));
    }
    return f;
}

} // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string bundle_to_json(const InflowBundle& b, int indent) {
    json q = quantiles_json(b.quantiles);

    json t;
    t["omega"] = b.transitions.basis.omega;
    t["harmonics"] = b.transitions.basis.harmonics;
    t["num_regimes"] = b.transitions.num_regimes;
    t["gamma"] = matrix_to_json(b.transitions.gamma);

    json h;
    h["bin_mw"] = b.histogram.bin_mw;
    h["pool_weeks"] = b.histogram.pool_weeks;
    h["num_regimes"] = b.histogram.num_regimes;
    json cells = json::array();
    for (int r = 1; r <= b.histogram.num_regimes; ++r) {
        for (int w = 1; w <= kWeeksPerYear; ++w) {
            const auto& c = b.histogram.cell(r, w);
            cells.push_back({{"regime", r},
                             {"week", w},
                             {"support", c.support},
                             {"probs", c.probs},
                             {"counts", c.counts},
                             {"own_count", c.own_count},
                             {"window", c.window}});
        }
    }
    h["cells"] = cells;

    json root;
    root["format"] = "hydrovalue-inflow-bundle";
    root["version"] = 1;
    root["config_hash"] = b.config_hash;
    root["quantiles"] = q;
    root["transition"] = t;
    root["histogram"] = h;
    root["diagnostics"] = {{"log_likelihood", b.log_likelihood},
                           {"homogeneous_log_likelihood", b.homogeneous_log_likelihood},
                           {"coverage", b.coverage}};
    return root.dump(indent);
}

InflowBundle bundle_from_json(const std::string& text) {
    InflowBundle b;
    try {
        const json root = json::parse(text);
        if (root.value("format", "") != "hydrovalue-inflow-bundle") {
            throw ValidationError("bundle: unrecognized format tag");
        }
        b.config_hash = root.value("config_hash", "");

        b.quantiles = quantiles_from(root.at("quantiles"));

        const json& t = root.at("transition");
        b.transitions.basis = FourierBasis{t.at("omega").get<double>(), t.at("harmonics").get<int>()};
        b.transitions.num_regimes = t.at("num_regimes").get<int>();
        b.transitions.gamma = matrix_from_json(t.at("gamma"), b.transitions.basis.dimension());
        if (b.transitions.gamma.rows() != b.transitions.num_regimes * b.transitions.num_regimes) {
            throw ValidationError("bundle: transition coefficient count mismatch");
        }

        const json& h = root.at("histogram");
        b.histogram.bin_mw = h.at("bin_mw").get<double>();
        b.histogram.pool_weeks = h.at("pool_weeks").get<int>();
        b.histogram.num_regimes = h.at("num_regimes").get<int>();
        b.histogram.cells.resize(static_cast<std::size_t>(b.histogram.num_regimes * kWeeksPerYear));
        for (const json& c : h.at("cells")) {
            const int r = c.at("regime").get<int>();
            const int w = c.at("week").get<int>();
            if (r < 1 || r > b.histogram.num_regimes || w < 1 || w > kWeeksPerYear) {
                throw ValidationError("bundle: histogram cell out of range");
            }
            HistogramCell& cell = b.histogram.cell(r, w);
            cell.support = c.at("support").get<std::vector<double>>();
            cell.probs = c.at("probs").get<std::vector<double>>();
            cell.counts = c.value("counts", std::vector<std::size_t>{});
            cell.own_count = c.value("own_count", std::size_t{0});
            cell.window = c.value("window", 0);
            if (cell.support.size() != cell.probs.size()) throw ValidationError("bundle: histogram support/probability mismatch");
        }

        if (root.contains("diagnostics")) {
            const json& d = root["diagnostics"];
            b.log_likelihood = d.value("log_likelihood", 0.0);
            b.homogeneous_log_likelihood = d.value("homogeneous_log_likelihood", 0.0);
            b.coverage = d.value("coverage", std::vector<double>{});
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bundle: ") + e.what());
    }
    if (b.quantiles.num_regimes() != b.transitions.num_regimes ||
        b.transitions.num_regimes != b.histogram.num_regimes) {
        throw ValidationError("bundle: regime counts disagree between sections");
    }
    return b;
}

std::string quantiles_to_json(const QuantileFamily& family, const std::string& config_hash) {
    json root = quantiles_json(family);
    root["format"] = "hydrovalue-quantiles";
    root["config_hash"] = config_hash;
    return root.dump(1);
}

QuantileFamily quantiles_from_json(const std::string& text) {
    try {
        const json root = json::parse(text);
        if (root.value("format", "") != "hydrovalue-quantiles") throw ValidationError("quantiles: unrecognized format tag");
        return quantiles_from(root);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("quantiles: ") + e.what());
    }
}

void save_bundle(const std::filesystem::path& path, const InflowBundle& bundle) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write bundle file: " + path.string());
    out << bundle_to_json(bundle) << '\n';
}

InflowBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open bundle file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return bundle_from_json(ss.str());
}

} // namespace hydrovalue
