#include "hydrovalue/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hydrovalue/error.hpp"
#include "json.hpp"

namespace hydrovalue {

void SystemConfig::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite and >= 0");
    };
    if (storage_blocks < 0) throw ValidationError("storage_blocks must be >= 0");
    if (turbine_blocks < 0) throw ValidationError("turbine_blocks must be >= 0");
    if (!(block_mw > 0.0)) throw ValidationError("block_mw must be positive");
    nonneg(run_of_river_mw, "run_of_river_mw");
    nonneg(demand_mw, "demand_mw");
    nonneg(thermal_capacity_mw, "thermal_capacity_mw");
    nonneg(fuel_price, "fuel_price");
    nonneg(curtailment_price, "curtailment_price");
    if (!(hours_per_week > 0.0)) throw ValidationError("hours_per_week must be positive");
    if (curtailment_price < fuel_price) throw ValidationError("curtailment_price must be >= fuel_price");
}

void MdpModel::validate(double tol) const {
    const auto pairs = static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions);
    if (num_states <= 0 || num_actions <= 0) throw ValidationError("model: empty state or action set");
    if (row_start.size() != pairs + 1 || cost.size() != pairs) throw ValidationError("model: inconsistent dimensions");
    if (next_state.size() != probability.size() || static_cast<std::size_t>(row_start.back()) != next_state.size()) {
        throw ValidationError("model: inconsistent kernel arrays");
    }
    for (std::size_t k = 0; k < pairs; ++k) {
        double total = 0.0;
        for (auto e = row_start[k]; e < row_start[k + 1]; ++e) {
            const double p = probability[static_cast<std::size_t>(e)];
            const int s2 = next_state[static_cast<std::size_t>(e)];
            if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("model: probability outside [0, 1]");
            if (s2 < 0 || s2 >= num_states) throw ValidationError("model: successor index out of range");
            total += p;
        }
        if (std::abs(total - 1.0) > tol) {
            throw ValidationError("model: probabilities of pair " + std::to_string(k) + " sum to " + std::to_string(total));
        }
        if (!std::isfinite(cost[k])) throw ValidationError("model: non-finite cost");
    }
}

double run_of_river(const SystemConfig& config, double inflow_mw) {
    return std::min(inflow_mw, config.run_of_river_mw);
}

double weekly_cost(const SystemConfig& c, double h) {
    const double thermal = std::clamp(c.demand_mw - h, 0.0, c.thermal_capacity_mw);
    const double shed = std::max(c.demand_mw - c.thermal_capacity_mw - h, 0.0);
    return (thermal * c.fuel_price + shed * c.curtailment_price) * c.hours_per_week;
}

StepOutcome reservoir_step(const SystemConfig& c, int level, int action, double inflow_mw) {
    StepOutcome out;
    const int f = static_cast<int>(std::llround(inflow_mw / c.block_mw));
    out.release_blocks = std::min(action, level + f);
    const int raw = level + f - out.release_blocks;
    out.next_level = std::min(raw, c.storage_blocks);
    out.spill_blocks = raw - out.next_level;
    out.hydro_mw = run_of_river(c, inflow_mw) + out.release_blocks * c.block_mw;
    out.cost = weekly_cost(c, out.hydro_mw);
    out.curtailed = c.demand_mw - c.thermal_capacity_mw - out.hydro_mw > 0.0;
    return out;
}

MdpModel build_model(const SystemConfig& config, const InflowBundle& bundle) {
    config.validate();
    const auto& hist = bundle.histogram;
    if (std::abs(hist.bin_mw - config.block_mw) > 1e-12 * config.block_mw) {
        throw ValidationError("bundle bin width " + std::to_string(hist.bin_mw) + " MW differs from block size " +
                              std::to_string(config.block_mw) + " MW");
    }
    const int R = bundle.num_regimes();
    if (hist.num_regimes != R) throw ValidationError("bundle: regime counts disagree");

    MdpModel m;
    m.config = config;
    m.config_hash = bundle.config_hash;
    m.index = StateIndex{config.num_levels(), R};
    m.num_states = m.index.size();
    m.num_actions = config.num_actions();
    const std::size_t pairs = static_cast<std::size_t>(m.num_states) * static_cast<std::size_t>(m.num_actions);
    m.cost.assign(pairs, 0.0);
    m.row_start.assign(pairs + 1, 0);

    const int L = config.num_levels();
    std::vector<double> scratch(static_cast<std::size_t>(R * L), 0.0);
    std::vector<int> touched;

    for (int w = 1; w <= kWeeksPerYear; ++w) {
        const double t = kDaysPerWeek * (w - 1);
        const Eigen::MatrixXd P = transition_matrix(bundle.transitions, t);
        const int next_week = w % kWeeksPerYear + 1;
        for (int r = 1; r <= R; ++r) {
            const HistogramCell& cell = hist.cell(r, w);
            if (cell.support.empty()) {
                throw ValidationError("inflow histogram cell (regime " + std::to_string(r) + ", week " +
                                      std::to_string(w) + ") is empty");
            }
            std::vector<double> pr(static_cast<std::size_t>(R));
            for (int c = 0; c < R; ++c) pr[static_cast<std::size_t>(c)] = std::clamp(P(r - 1, c), 0.0, 1.0);

            for (int level = 0; level < L; ++level) {
                const int s = m.index.flat({level, r, w});
                for (int a = 0; a < m.num_actions; ++a) {
                    const auto k = static_cast<std::size_t>(m.pair(s, a));
                    double expected = 0.0;
                    for (std::size_t i = 0; i < cell.support.size(); ++i) {
                        const StepOutcome o = reservoir_step(config, level, a, cell.support[i]);
                        expected += cell.probs[i] * o.cost;
                        for (int c = 0; c < R; ++c) {
                            const double p = cell.probs[i] * pr[static_cast<std::size_t>(c)];
                            if (p == 0.0) continue;
                            const int slot = c * L + o.next_level;
                            if (scratch[static_cast<std::size_t>(slot)] == 0.0) touched.push_back(slot);
                            scratch[static_cast<std::size_t>(slot)] += p;
                        }
                    }
                    m.cost[k] = expected;
                    // Slot order (regime, level) matches ascending successor index.
                    std::sort(touched.begin(), touched.end());
                    for (int slot : touched) {
                        const int c = slot / L;
                        const int lv = slot % L;
                        m.next_state.push_back(m.index.flat({lv, c + 1, next_week}));
                        m.probability.push_back(scratch[static_cast<std::size_t>(slot)]);
                        scratch[static_cast<std::size_t>(slot)] = 0.0;
                    }
                    touched.clear();
                    m.row_start[k + 1] = static_cast<std::int64_t>(m.next_state.size());
                }
            }
        }
    }
    m.validate(1e-10);
    return m;
}

ModelDimensions model_dimensions(const SystemConfig& config, int num_regimes, const InflowBundle* bundle) {
    ModelDimensions d;
    d.states = StateIndex{config.num_levels(), num_regimes}.size();
    d.actions = config.num_actions();
    d.variables = static_cast<std::int64_t>(d.states) * d.actions;
    d.equality_rows = d.states + 1;
    if (bundle) d.nonzeros = build_model(config, *bundle).nonzeros();
    return d;
}

namespace {

constexpr char kMagic[] = "hydrovalue-mdp";

nlohmann::json config_json(const SystemConfig& c) {
    return {{"storage_blocks", c.storage_blocks},   {"block_mw", c.block_mw},
            {"turbine_blocks", c.turbine_blocks},   {"run_of_river_mw", c.run_of_river_mw},
            {"demand_mw", c.demand_mw},             {"thermal_capacity_mw", c.thermal_capacity_mw},
            {"fuel_price", c.fuel_price},           {"curtailment_price", c.curtailment_price},
            {"hours_per_week", c.hours_per_week}};
}

SystemConfig config_from(const nlohmann::json& j) {
    SystemConfig c;
    c.storage_blocks = j.at("storage_blocks").get<int>();
    c.block_mw = j.at("block_mw").get<double>();
    c.turbine_blocks = j.at("turbine_blocks").get<int>();
    c.run_of_river_mw = j.at("run_of_river_mw").get<double>();
    c.demand_mw = j.at("demand_mw").get<double>();
    c.thermal_capacity_mw = j.at("thermal_capacity_mw").get<double>();
    c.fuel_price = j.at("fuel_price").get<double>();
    c.curtailment_price = j.at("curtailment_price").get<double>();
    c.hours_per_week = j.at("hours_per_week").get<double>();
    return c;
}

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ValidationError("model file truncated");
    return v;
}

} // namespace

void write_model(const std::filesystem::path& path, const MdpModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model file: " + path.string());
    nlohmann::json header{{"format", kMagic},
                          {"version", 1},
                          {"states", m.num_states},
                          {"actions", m.num_actions},
                          {"nonzeros", m.nonzeros()},
                          {"num_levels", m.index.num_levels},
                          {"num_regimes", m.index.num_regimes},
                          {"config_hash", m.config_hash},
                          {"endianness", "little"}};
    if (m.config) header["config"] = config_json(*m.config);
    out << header.dump() << '\n';
    for (double c : m.cost) put(out, c);
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            const auto k = static_cast<std::size_t>(m.pair(s, a));
            for (auto e = m.row_start[k]; e < m.row_start[k + 1]; ++e) {
                put(out, static_cast<std::int32_t>(s));
                put(out, static_cast<std::int32_t>(a));
                put(out, static_cast<std::int32_t>(m.next_state[static_cast<std::size_t>(e)]));
                put(out, m.probability[static_cast<std::size_t>(e)]);
            }
        }
    }
    if (!out) throw ValidationError("failed writing model file: " + path.string());
}

MdpModel read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path.string());
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("model file has no JSON header: " + path.string());
    }
    if (header.value("format", "") != kMagic) throw ValidationError("not a model file: " + path.string());

    MdpModel m;
    m.num_states = header.at("states").get<int>();
    m.num_actions = header.at("actions").get<int>();
    m.index = StateIndex{header.value("num_levels", 1), header.value("num_regimes", 1)};
    m.config_hash = header.value("config_hash", "");
    if (header.contains("config")) m.config = config_from(header["config"]);
    const auto nnz = header.at("nonzeros").get<std::size_t>();
    const std::size_t pairs = static_cast<std::size_t>(m.num_states) * static_cast<std::size_t>(m.num_actions);

    m.cost.resize(pairs);
    for (auto& c : m.cost) c = get<double>(in);
    m.row_start.assign(pairs + 1, 0);
    m.next_state.reserve(nnz);
    m.probability.reserve(nnz);
    std::int64_t last = -1;
    for (std::size_t e = 0; e < nnz; ++e) {
        const auto s = get<std::int32_t>(in);
        const auto a = get<std::int32_t>(in);
        const auto s2 = get<std::int32_t>(in);
        const auto p = get<double>(in);
        const std::int64_t k = m.pair(s, a);
        if (k < last || k < 0 || static_cast<std::size_t>(k) >= pairs) throw ValidationError("model file records out of order");
        last = k;
        ++m.row_start[static_cast<std::size_t>(k) + 1];
        m.next_state.push_back(s2);
        m.probability.push_back(p);
    }
    for (std::size_t k = 0; k < pairs; ++k) m.row_start[k + 1] += m.row_start[k];
    m.validate(1e-10);
    return m;
}

} // namespace hydrovalue
