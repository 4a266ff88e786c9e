#include "semcast/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "semcast/units.hpp"

namespace semcast {

using nlohmann::json;

void SignalGeometry::validate() const {
    if (total_pixels <= 0) throw ConfigError("geometry: total_pixels must be positive");
    if (!(class_pixel_fraction > 0.0) || class_pixel_fraction > 1.0) {
        throw ConfigError("geometry: class_pixel_fraction must lie in (0, 1]");
    }
    if (num_classes < 1) throw ConfigError("geometry: num_classes must be >= 1");
}

IntentMatrix::IntentMatrix(int num_users, int num_classes)
    : num_users_(num_users),
      num_classes_(num_classes),
      entries_(static_cast<std::size_t>(num_users) * num_classes, 0) {}

IntentMatrix::IntentMatrix(int num_users, int num_classes, std::vector<std::uint8_t> entries)
    : num_users_(num_users), num_classes_(num_classes), entries_(std::move(entries)) {
    if (entries_.size() != static_cast<std::size_t>(num_users) * num_classes) {
        throw ConfigError("intent: entry count does not match K x L");
    }
    for (auto e : entries_) {
        if (e > 1) throw ConfigError("intent: entries must be 0 or 1");
    }
}

void IntentMatrix::set(int user, int cls, bool value) {
    entries_[static_cast<std::size_t>(user) * num_classes_ + cls] = value ? 1 : 0;
}

std::vector<int> IntentMatrix::active_classes() const {
    std::vector<int> active;
    for (int l = 0; l < num_classes_; ++l) {
        for (int k = 0; k < num_users_; ++k) {
            if (interested(k, l)) {
                active.push_back(l);
                break;
            }
        }
    }
    return active;
}

std::vector<int> IntentMatrix::interested_users(int cls) const {
    std::vector<int> users;
    for (int k = 0; k < num_users_; ++k) {
        if (interested(k, cls)) users.push_back(k);
    }
    return users;
}

int IntentMatrix::row_sum(int user) const {
    int sum = 0;
    for (int l = 0; l < num_classes_; ++l) {
        if (interested(user, l)) ++sum;
    }
    return sum;
}

IntentStats intent_graph_stats(const IntentMatrix& intent) {
    IntentStats stats;
    stats.active_class_count = static_cast<int>(intent.active_classes().size());
    stats.per_user_class_counts.reserve(intent.num_users());
    for (int k = 0; k < intent.num_users(); ++k) {
        stats.per_user_class_counts.push_back(intent.row_sum(k));
    }
    return stats;
}

Requirements::Requirements(int num_users, int num_classes, double reconstruction, double synthesis)
    : reconstruction_(num_users, std::vector<double>(num_classes, reconstruction)),
      synthesis_(num_users, synthesis),
      num_classes_(num_classes) {}

Requirements::Requirements(std::vector<std::vector<double>> reconstruction, std::vector<double> synthesis)
    : reconstruction_(std::move(reconstruction)), synthesis_(std::move(synthesis)) {
    if (reconstruction_.size() != synthesis_.size()) {
        throw ConfigError("requirements: reconstruction and synthesis row counts differ");
    }
    num_classes_ = reconstruction_.empty() ? 0 : static_cast<int>(reconstruction_.front().size());
    for (const auto& row : reconstruction_) {
        if (static_cast<int>(row.size()) != num_classes_) {
            throw ConfigError("requirements: ragged reconstruction matrix");
        }
    }
}

double Requirements::tightest_reconstruction() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : reconstruction_) {
        for (double v : row) {
            if (std::isfinite(v)) best = std::min(best, v);
        }
    }
    return best;
}

void RadioParams::validate() const {
    if (!(multicast_bandwidth_hz > 0.0)) throw ConfigError("radio: multicast bandwidth must be positive");
    for (double b : class_bandwidths_hz) {
        if (!(b > 0.0)) throw ConfigError("radio: class bandwidths must be positive");
    }
    if (!(noise_density_w_per_hz > 0.0)) throw ConfigError("radio: noise density must be positive");
    if (!(power_budget_w > 0.0)) throw ConfigError("radio: power budget must be positive");
    if (!(pathloss_ref > 0.0)) throw ConfigError("radio: pathloss reference gain must be positive");
    if (!(pathloss_exponent > 0.0)) throw ConfigError("radio: pathloss exponent must be positive");
    for (double d : user_distances_m) {
        if (!(d > 0.0)) throw ConfigError("radio: user distances must be positive");
    }
}

ComputeSpec ComputeSpec::uniform(int num_users, double generation_time_s) {
    ComputeSpec spec;
    spec.generation_time_s.assign(num_users, generation_time_s);
    return spec;
}

ComputeSpec ComputeSpec::from_flops(double model_flops, const std::vector<double>& processor_flops_per_sec) {
    if (!(model_flops >= 0.0)) throw ConfigError("compute: model_flops must be non-negative");
    ComputeSpec spec;
    spec.generation_time_s.reserve(processor_flops_per_sec.size());
    for (double p : processor_flops_per_sec) {
        if (!(p > 0.0)) throw ConfigError("compute: processor rate must be positive");
        spec.generation_time_s.push_back(model_flops / p);
    }
    return spec;
}

void ComputeSpec::validate() const {
    for (double t : generation_time_s) {
        if (!(t >= 0.0)) throw ConfigError("compute: generation times must be non-negative");
    }
}

void Scenario::validate() const {
    geometry.validate();
    radio.validate();
    compute.validate();
    const int k = intent.num_users();
    const int l = intent.num_classes();
    if (k < 1) throw ConfigError("scenario: at least one user required");
    if (l != geometry.num_classes) throw ConfigError("scenario: intent columns != geometry num_classes");
    if (requirements.num_users() != k) throw ConfigError("scenario: requirement rows != K");
    if (requirements.num_classes() != l) throw ConfigError("scenario: requirement columns != L");
    if (static_cast<int>(radio.user_distances_m.size()) != k) {
        throw ConfigError("scenario: distance list must have K entries");
    }
    if (static_cast<int>(radio.class_bandwidths_hz.size()) != l) {
        throw ConfigError("scenario: class bandwidth list must have L entries");
    }
    if (static_cast<int>(compute.generation_time_s.size()) != k) {
        throw ConfigError("scenario: generation time list must have K entries");
    }
    if (!recon_curve.valid() || !synth_curve.valid()) {
        throw ConfigError("scenario: curves must have positive amplitude/decay and non-negative floor");
    }
}

EffectiveRequirements effective_requirements(const Scenario& scenario) {
    const IntentMatrix& intent = scenario.intent;
    if (intent.num_users() < 1) throw ConfigError("effective_requirements: no users");

    EffectiveRequirements eff;
    eff.synthesis = std::numeric_limits<double>::infinity();
    for (int k = 0; k < intent.num_users(); ++k) {
        eff.synthesis = std::min(eff.synthesis, scenario.requirements.synthesis(k));
    }
    if (!std::isfinite(eff.synthesis) || eff.synthesis <= 0.0) {
        throw ConfigError("effective_requirements: synthesis requirement must be finite and positive");
    }

    for (int l : intent.active_classes()) {
        double best = std::numeric_limits<double>::infinity();
        for (int k : intent.interested_users(l)) {
            const double v = scenario.requirements.reconstruction(k, l);
            if (std::isfinite(v)) best = std::min(best, v);
        }
        if (!std::isfinite(best) || best <= 0.0) {
            throw ConfigError("effective_requirements: active class " + std::to_string(l) +
                              " has no finite positive requirement");
        }
        eff.reconstruction.emplace(l, best);
    }
    return eff;
}

namespace {

RdpCurve parse_curve(const json& j) {
    RdpCurve c;
    c.amplitude = j.at("amplitude").get<double>();
    c.decay = j.at("decay").get<double>();
    c.floor = j.at("floor").get<double>();
    return c;
}

json curve_to_json(const RdpCurve& c) {
    return json{{"amplitude", c.amplitude}, {"decay", c.decay}, {"floor", c.floor}};
}

std::vector<double> broadcast_list(const json& j, int n, const char* what) {
    std::vector<double> out;
    if (j.is_number()) {
        out.assign(n, j.get<double>());
    } else if (j.is_array()) {
        out = j.get<std::vector<double>>();
        if (static_cast<int>(out.size()) != n) {
            throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " entries");
        }
    } else {
        throw ConfigError(std::string(what) + ": expected number or array");
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }

    Scenario s;
    try {
        const json& jg = j.at("geometry");
        s.geometry.total_pixels = jg.value("total_pixels", std::int64_t{131072});
        s.geometry.class_pixel_fraction = jg.value("class_pixel_fraction", 0.1);
        s.geometry.num_classes = jg.at("num_classes").get<int>();

        const json& jc = j.at("curves");
        s.recon_curve = parse_curve(jc.at("reconstruction"));
        s.synth_curve = parse_curve(jc.at("synthesis"));

        const json& ji = j.at("intent");
        const auto rows = ji.at("matrix").get<std::vector<std::vector<int>>>();
        const int K = static_cast<int>(rows.size());
        const int L = s.geometry.num_classes;
        IntentMatrix intent(K, L);
        for (int k = 0; k < K; ++k) {
            if (static_cast<int>(rows[k].size()) != L) {
                throw ConfigError("intent: row " + std::to_string(k) + " must have L entries");
            }
            for (int l = 0; l < L; ++l) {
                if (rows[k][l] != 0 && rows[k][l] != 1) throw ConfigError("intent: entries must be 0/1");
                intent.set(k, l, rows[k][l] == 1);
            }
        }
        s.intent = intent;

        const json& jr = j.at("requirements");
        const json& jrec = jr.at("reconstruction");
        std::vector<std::vector<double>> recon;
        if (jrec.is_number()) {
            recon.assign(K, std::vector<double>(L, jrec.get<double>()));
        } else if (jrec.is_array() && !jrec.empty() && jrec.front().is_array()) {
            recon = jrec.get<std::vector<std::vector<double>>>();
        } else if (jrec.is_array()) {
            const auto per_user = jrec.get<std::vector<double>>();
            if (static_cast<int>(per_user.size()) != K) {
                throw ConfigError("requirements.reconstruction: expected K entries");
            }
            for (double v : per_user) recon.emplace_back(L, v);
        } else {
            throw ConfigError("requirements.reconstruction: expected number, vector, or matrix");
        }
        std::vector<double> synth = broadcast_list(jr.at("synthesis"), K, "requirements.synthesis");
        s.requirements = Requirements(std::move(recon), std::move(synth));

        const json& jradio = j.at("radio");
        s.radio.multicast_bandwidth_hz = units::mhz_to_hz(jradio.at("multicast_bandwidth_mhz").get<double>());
        s.radio.class_bandwidths_hz =
            broadcast_list(jradio.at("class_bandwidth_mhz"), L, "radio.class_bandwidth_mhz");
        for (double& b : s.radio.class_bandwidths_hz) b = units::mhz_to_hz(b);
        s.radio.noise_density_w_per_hz =
            units::dbm_to_watts(jradio.at("noise_density_dbm_per_hz").get<double>());
        s.radio.power_budget_w = units::mw_to_watts(jradio.at("power_budget_mw").get<double>());
        s.radio.pathloss_ref = units::db_to_linear(jradio.at("pathloss_ref_db").get<double>());
        s.radio.pathloss_exponent = jradio.at("pathloss_exponent").get<double>();
        s.radio.user_distances_m = jradio.at("user_distances_m").get<std::vector<double>>();

        const json& jcomp = j.at("compute");
        if (jcomp.contains("generation_time_ms")) {
            auto times = broadcast_list(jcomp.at("generation_time_ms"), K, "compute.generation_time_ms");
            for (double& t : times) t = units::ms_to_s(t);
            s.compute.generation_time_s = std::move(times);
        } else if (jcomp.contains("model_flops")) {
            const auto rates = broadcast_list(jcomp.at("processor_flops_per_sec"), K,
                                              "compute.processor_flops_per_sec");
            s.compute = ComputeSpec::from_flops(jcomp.at("model_flops").get<double>(), rates);
        } else {
            throw ConfigError("compute: need generation_time_ms or model_flops");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario config: ") + e.what());
    }

    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["geometry"] = {{"total_pixels", s.geometry.total_pixels},
                     {"class_pixel_fraction", s.geometry.class_pixel_fraction},
                     {"num_classes", s.geometry.num_classes}};
    j["curves"] = {{"reconstruction", curve_to_json(s.recon_curve)},
                   {"synthesis", curve_to_json(s.synth_curve)}};

    std::vector<std::vector<int>> rows(s.num_users(), std::vector<int>(s.num_classes(), 0));
    for (int k = 0; k < s.num_users(); ++k) {
        for (int l = 0; l < s.num_classes(); ++l) rows[k][l] = s.intent.interested(k, l) ? 1 : 0;
    }
    j["intent"] = {{"matrix", rows}};

    std::vector<std::vector<double>> recon(s.num_users(), std::vector<double>(s.num_classes()));
    std::vector<double> synth(s.num_users());
    for (int k = 0; k < s.num_users(); ++k) {
        synth[k] = s.requirements.synthesis(k);
        for (int l = 0; l < s.num_classes(); ++l) recon[k][l] = s.requirements.reconstruction(k, l);
    }
    j["requirements"] = {{"reconstruction", recon}, {"synthesis", synth}};

    std::vector<double> class_bw_mhz;
    for (double b : s.radio.class_bandwidths_hz) class_bw_mhz.push_back(units::hz_to_mhz(b));
    j["radio"] = {{"multicast_bandwidth_mhz", units::hz_to_mhz(s.radio.multicast_bandwidth_hz)},
                  {"class_bandwidth_mhz", class_bw_mhz},
                  {"noise_density_dbm_per_hz", units::watts_to_dbm(s.radio.noise_density_w_per_hz)},
                  {"power_budget_mw", units::watts_to_mw(s.radio.power_budget_w)},
                  {"pathloss_ref_db", units::linear_to_db(s.radio.pathloss_ref)},
                  {"pathloss_exponent", s.radio.pathloss_exponent},
                  {"user_distances_m", s.radio.user_distances_m}};

    std::vector<double> gen_ms;
    for (double t : s.compute.generation_time_s) gen_ms.push_back(units::s_to_ms(t));
    j["compute"] = {{"generation_time_ms", gen_ms}};
    return j.dump(2);
}

}  // namespace semcast
