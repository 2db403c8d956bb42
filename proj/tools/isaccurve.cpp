// isaccurve: front end for the capacity-distortion solvers.
//
//   isaccurve run <config.json>      solve and write curve/trace files
//   isaccurve validate <config.json> schema + normalization diagnostics only
//
// Exit codes: 0 success, 2 at least one sweep point did not converge,
// 1 config errors / infeasible points / IO failures.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isac/ab_classic.hpp"
#include "isac/ab_logloss.hpp"
#include "isac/ab_se.hpp"
#include "isac/channel.hpp"
#include "isac/monostatic.hpp"
#include "isac/rng.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Config model

struct Settings {
    std::string mode;
    json channel;
    std::vector<double> dgrid;
    std::size_t u_size = 0;
    isac::SolverConfig solver;
    bool warm_start = false;
    bool seed_present = false;
    std::string curve_path;
    std::string trace_path;
};

bool is_sweep_mode(const std::string& mode) {
    return mode == "se-curve" || mode == "logloss-curve";
}

Settings parse_settings(const json& j, std::vector<std::string>& diags) {
    Settings s;
    if (!j.is_object()) {
        diags.push_back("config: top level must be a JSON object");
        return s;
    }

    if (!j.contains("mode") || !j.at("mode").is_string()) {
        diags.push_back("config: missing string field 'mode'");
    } else {
        s.mode = j.at("mode").get<std::string>();
        static const char* kModes[] = {"capacity", "se-curve", "logloss-curve",
                                       "monostatic-curve"};
        if (std::find(std::begin(kModes), std::end(kModes), s.mode) == std::end(kModes))
            diags.push_back("config: unknown mode '" + s.mode +
                            "' (expected capacity | se-curve | logloss-curve | "
                            "monostatic-curve)");
    }

    if (!j.contains("channel") || !j.at("channel").is_object())
        diags.push_back("config: missing object field 'channel'");
    else
        s.channel = j.at("channel");

    if (is_sweep_mode(s.mode)) {
        if (!j.contains("distortion_grid") || !j.at("distortion_grid").is_array() ||
            j.at("distortion_grid").empty()) {
            diags.push_back("config: 'distortion_grid' must be a non-empty array for mode " +
                            s.mode);
        } else {
            bool numeric = true;
            for (const auto& e : j.at("distortion_grid")) {
                if (!e.is_number()) {
                    diags.push_back("config: distortion_grid entries must be numbers");
                    numeric = false;
                    break;
                }
                s.dgrid.push_back(e.get<double>());
            }
            if (numeric) {
                for (std::size_t i = 0; i < s.dgrid.size(); ++i) {
                    if (!(s.dgrid[i] > 0.0)) {
                        diags.push_back("config: distortion_grid[" + std::to_string(i) +
                                        "] must be positive");
                        break;
                    }
                }
                for (std::size_t i = 1; i < s.dgrid.size(); ++i) {
                    if (!(s.dgrid[i] > s.dgrid[i - 1])) {
                        diags.push_back("config: distortion_grid must be strictly increasing "
                                        "(entry " +
                                        std::to_string(i) + ")");
                        break;
                    }
                }
            }
        }
    }

    if (j.contains("u_size")) {
        const auto& ju = j.at("u_size");
        if (!ju.is_number_unsigned() || ju.get<std::uint64_t>() == 0)
            diags.push_back("config: u_size must be a positive integer");
        else
            s.u_size = ju.get<std::size_t>();
    }

    if (j.contains("solver")) {
        const auto& js = j.at("solver");
        if (!js.is_object()) {
            diags.push_back("config: 'solver' must be an object");
        } else {
            auto positive = [&](const char* key, double& out) {
                if (!js.contains(key)) return;
                if (!js.at(key).is_number() || !(js.at(key).get<double>() > 0.0))
                    diags.push_back(std::string("config: solver.") + key + " must be positive");
                else
                    out = js.at(key).get<double>();
            };
            positive("tol", s.solver.tol);
            positive("root_tol", s.solver.root.root_tol);
            if (js.contains("max_iters")) {
                if (!js.at("max_iters").is_number_integer() || js.at("max_iters").get<int>() < 1)
                    diags.push_back("config: solver.max_iters must be an integer >= 1");
                else
                    s.solver.max_iters = js.at("max_iters").get<int>();
            }
            if (js.contains("restarts")) {
                if (!js.at("restarts").is_number_integer() || js.at("restarts").get<int>() < 0)
                    diags.push_back("config: solver.restarts must be an integer >= 0");
                else
                    s.solver.restarts = js.at("restarts").get<int>();
            }
            if (js.contains("jitter")) {
                if (!js.at("jitter").is_number() || js.at("jitter").get<double>() < 0.0 ||
                    js.at("jitter").get<double>() >= 1.0)
                    diags.push_back("config: solver.jitter must lie in [0, 1)");
                else
                    s.solver.jitter = js.at("jitter").get<double>();
            }
            if (js.contains("seed")) {
                if (!js.at("seed").is_number_unsigned())
                    diags.push_back("config: solver.seed must be a non-negative integer");
                else {
                    s.solver.seed = js.at("seed").get<std::uint64_t>();
                    s.seed_present = true;
                }
            }
            if (js.contains("warm_start")) {
                if (!js.at("warm_start").is_boolean())
                    diags.push_back("config: solver.warm_start must be a boolean");
                else
                    s.warm_start = js.at("warm_start").get<bool>();
            }
        }
    }
    if (is_sweep_mode(s.mode) && s.solver.restarts > 0 && !s.seed_present)
        diags.push_back("config: solver.seed is required when restarts > 0 (reproducibility)");

    if (j.contains("output")) {
        const auto& jo = j.at("output");
        if (!jo.is_object()) {
            diags.push_back("config: 'output' must be an object");
        } else {
            if (jo.contains("curve")) {
                if (!jo.at("curve").is_string())
                    diags.push_back("config: output.curve must be a string path");
                else
                    s.curve_path = jo.at("curve").get<std::string>();
            }
            if (jo.contains("trace")) {
                if (!jo.at("trace").is_string())
                    diags.push_back("config: output.trace must be a string path");
                else
                    s.trace_path = jo.at("trace").get<std::string>();
            }
        }
    }
    if (s.curve_path.empty()) diags.push_back("config: output.curve path is required");

    return s;
}

// ---------------------------------------------------------------------------
// Channel schema checks (validate-time; run reuses them before building)

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

std::optional<Tensor> get_tensor(const json& jc, const char* key, std::size_t rank,
                                 std::vector<std::string>& diags) {
    const std::string name = std::string("channel.") + key;
    if (!jc.contains(key)) {
        diags.push_back(name + ": missing tensor");
        return std::nullopt;
    }
    const auto& t = jc.at(key);
    if (!t.is_object() || !t.contains("shape") || !t.contains("data") ||
        !t.at("shape").is_array() || !t.at("data").is_array()) {
        diags.push_back(name + ": expected {\"shape\": [...], \"data\": [...]}");
        return std::nullopt;
    }
    Tensor out;
    for (const auto& e : t.at("shape")) {
        if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
            diags.push_back(name + ": shape entries must be positive integers");
            return std::nullopt;
        }
        out.shape.push_back(e.get<std::size_t>());
    }
    if (out.shape.size() != rank) {
        diags.push_back(name + ": expected rank " + std::to_string(rank) + ", got " +
                        std::to_string(out.shape.size()));
        return std::nullopt;
    }
    std::size_t total = 1;
    for (std::size_t d : out.shape) total *= d;
    for (const auto& e : t.at("data")) {
        if (!e.is_number()) {
            diags.push_back(name + ": data entries must be numbers");
            return std::nullopt;
        }
        out.data.push_back(e.get<double>());
    }
    if (out.data.size() != total) {
        diags.push_back(name + ": data length " + std::to_string(out.data.size()) +
                        " does not match shape product " + std::to_string(total));
        return std::nullopt;
    }
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (out.data[i] < 0.0) {
            diags.push_back(name + ": negative entry at flat index " + std::to_string(i));
            return std::nullopt;
        }
    }
    return out;
}

// Every slice over the leading n_given axes must sum to 1 within 1e-9.
void check_rows(const Tensor& t, std::size_t n_given, const std::string& name,
                const std::vector<std::string>& axis_names, std::vector<std::string>& diags) {
    std::size_t slices = 1;
    for (std::size_t k = 0; k < n_given; ++k) slices *= t.shape[k];
    const std::size_t free_size = t.data.size() / slices;
    for (std::size_t r = 0; r < slices; ++r) {
        double sum = 0.0;
        for (std::size_t i = 0; i < free_size; ++i) sum += t.data[r * free_size + i];
        if (std::abs(sum - 1.0) > 1e-9) {
            std::vector<std::size_t> idx(n_given);
            std::size_t rem = r;
            for (std::size_t k = n_given; k-- > 0;) {
                idx[k] = rem % t.shape[k];
                rem /= t.shape[k];
            }
            std::string label;
            for (std::size_t k = 0; k < n_given; ++k) {
                if (k) label += ",";
                label += axis_names[k] + "=" + std::to_string(idx[k]);
            }
            diags.push_back(name + ": slice (" + label + ") sums to " + g6(sum));
        }
    }
}

std::optional<std::vector<double>> get_values(const json& jc, const char* key,
                                              std::size_t expected, bool increasing,
                                              std::vector<std::string>& diags) {
    const std::string name = std::string("channel.") + key;
    if (!jc.contains(key)) return std::nullopt;
    const auto& v = jc.at(key);
    if (!v.is_array()) {
        diags.push_back(name + ": must be an array of numbers");
        return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) {
            diags.push_back(name + ": must be an array of numbers");
            return std::nullopt;
        }
        out.push_back(e.get<double>());
    }
    if (expected && out.size() != expected) {
        diags.push_back(name + ": length " + std::to_string(out.size()) + " does not match " +
                        std::to_string(expected));
        return std::nullopt;
    }
    if (increasing) {
        for (std::size_t i = 1; i < out.size(); ++i) {
            if (!(out[i] > out[i - 1])) {
                diags.push_back(name + ": values must be strictly increasing");
                return std::nullopt;
            }
        }
    }
    return out;
}

void check_gaussian(const json& jc, std::vector<std::string>& diags) {
    auto positive = [&](const char* key) {
        if (!jc.contains(key)) return;
        if (!jc.at(key).is_number() || !(jc.at(key).get<double>() > 0.0))
            diags.push_back(std::string("channel.") + key + " must be positive");
    };
    positive("sigma_s_sq");
    positive("sigma_1_sq");
    positive("sigma_2_sq");
    positive("power_budget");
    positive("truncation_multiplier");
    for (const char* key : {"n_x", "n_s", "n_y", "n_z"}) {
        if (!jc.contains(key)) continue;
        if (!jc.at(key).is_number_unsigned() || jc.at(key).get<std::uint64_t>() < 2)
            diags.push_back(std::string("channel.") + key + " must be an integer >= 2");
    }
}

bool has_markov_kernels(const json& jc) {
    return jc.contains("kernel_y_only") || jc.contains("kernel_zs");
}

void check_discrete_full(const json& jc, bool budget_required, std::vector<std::string>& diags) {
    auto ky = get_tensor(jc, "kernel_y", 3, diags);
    auto kz = get_tensor(jc, "kernel_z", 3, diags);
    std::size_t nx = 0, ns = 0;
    if (ky && kz) {
        if (ky->shape[0] != kz->shape[0] || ky->shape[1] != kz->shape[1])
            diags.push_back("channel: kernel_y and kernel_z disagree on (|X|, |S|)");
        nx = ky->shape[0];
        ns = ky->shape[1];
        check_rows(*ky, 2, "channel.kernel_y", {"x", "s"}, diags);
        check_rows(*kz, 2, "channel.kernel_z", {"x", "s"}, diags);
    }

    if (!jc.contains("state_prior")) {
        diags.push_back("channel.state_prior: missing");
    } else if (auto prior = get_values(jc, "state_prior", ns, false, diags)) {
        double sum = 0.0;
        bool neg = false;
        for (double v : *prior) {
            sum += v;
            neg = neg || v < 0.0;
        }
        if (neg) diags.push_back("channel.state_prior: negative entry");
        if (std::abs(sum - 1.0) > 1e-9)
            diags.push_back("channel.state_prior: sums to " + g6(sum));
    }
    if (!jc.contains("s_values"))
        diags.push_back("channel.s_values: missing (state grid values are required)");
    else
        get_values(jc, "s_values", ns, true, diags);

    const bool has_budget = jc.contains("power_budget");
    if (has_budget &&
        (!jc.at("power_budget").is_number() || !(jc.at("power_budget").get<double>() > 0.0)))
        diags.push_back("channel.power_budget must be positive");
    if (budget_required && !has_budget)
        diags.push_back("channel.power_budget: required for this mode");
    if (has_budget && !jc.contains("x_values"))
        diags.push_back("channel.x_values: required when power_budget is set");
    if (jc.contains("x_values")) get_values(jc, "x_values", nx, true, diags);
}

void check_discrete_markov(const json& jc, std::vector<std::string>& diags) {
    auto ky = get_tensor(jc, "kernel_y_only", 2, diags);
    auto kzs = get_tensor(jc, "kernel_zs", 3, diags);
    std::size_t nx = 0, ns = 0;
    if (ky && kzs) {
        if (ky->shape[0] != kzs->shape[0])
            diags.push_back("channel: kernel_y_only and kernel_zs disagree on |X|");
        nx = ky->shape[0];
        ns = kzs->shape[2];
        check_rows(*ky, 1, "channel.kernel_y_only", {"x"}, diags);
        check_rows(*kzs, 1, "channel.kernel_zs", {"x"}, diags);
    }
    if (jc.contains("s_values")) get_values(jc, "s_values", ns, true, diags);
    const bool has_budget = jc.contains("power_budget");
    if (has_budget &&
        (!jc.at("power_budget").is_number() || !(jc.at("power_budget").get<double>() > 0.0)))
        diags.push_back("channel.power_budget must be positive");
    if (has_budget && !jc.contains("x_values"))
        diags.push_back("channel.x_values: required when power_budget is set");
    if (jc.contains("x_values")) get_values(jc, "x_values", nx, true, diags);
}

void check_channel(const std::string& mode, const json& jc, std::vector<std::string>& diags) {
    if (!jc.is_object()) return;  // reported by parse_settings already
    if (!jc.contains("type") || !jc.at("type").is_string()) {
        diags.push_back("channel: missing string field 'type' (gaussian | discrete)");
        return;
    }
    const std::string type = jc.at("type").get<std::string>();
    if (type == "gaussian") {
        if (mode == "capacity") {
            diags.push_back("channel: capacity mode needs a discrete 'kernel' channel");
            return;
        }
        check_gaussian(jc, diags);
        return;
    }
    if (type != "discrete") {
        diags.push_back("channel: unknown type '" + type + "'");
        return;
    }
    if (mode == "capacity") {
        if (auto k = get_tensor(jc, "kernel", 2, diags)) {
            check_rows(*k, 1, "channel.kernel", {"x"}, diags);
            const bool has_budget = jc.contains("power_budget");
            if (has_budget && (!jc.at("power_budget").is_number() ||
                               !(jc.at("power_budget").get<double>() > 0.0)))
                diags.push_back("channel.power_budget must be positive");
            if (has_budget && !jc.contains("x_values"))
                diags.push_back("channel.x_values: required when power_budget is set");
            if (jc.contains("x_values")) get_values(jc, "x_values", k->shape[0], true, diags);
        }
        return;
    }
    if (mode == "logloss-curve") {
        if (has_markov_kernels(jc)) {
            if (jc.contains("kernel_y") || jc.contains("kernel_z"))
                diags.push_back(
                    "channel: give either the full kernels (kernel_y, kernel_z) or the Markov "
                    "kernels (kernel_y_only, kernel_zs), not both");
            check_discrete_markov(jc, diags);
        } else {
            check_discrete_full(jc, false, diags);
        }
        return;
    }
    check_discrete_full(jc, mode == "monostatic-curve", diags);
}

// ---------------------------------------------------------------------------
// Channel builders (called only after checks pass)

isac::GaussianSpec gaussian_from(const json& jc) {
    isac::GaussianSpec spec;
    auto g = [&](const char* key, double& out) {
        if (jc.contains(key)) out = jc.at(key).get<double>();
    };
    g("sigma_s_sq", spec.sigma_s_sq);
    g("sigma_1_sq", spec.sigma_1_sq);
    g("sigma_2_sq", spec.sigma_2_sq);
    g("power_budget", spec.power_budget);
    g("truncation_multiplier", spec.truncation_multiplier);
    auto n = [&](const char* key, std::size_t& out) {
        if (jc.contains(key)) out = jc.at(key).get<std::size_t>();
    };
    n("n_x", spec.n_x);
    n("n_s", spec.n_s);
    n("n_y", spec.n_y);
    n("n_z", spec.n_z);
    return spec;
}

Tensor tensor_from(const json& jc, const char* key) {
    Tensor t;
    for (const auto& e : jc.at(key).at("shape")) t.shape.push_back(e.get<std::size_t>());
    for (const auto& e : jc.at(key).at("data")) t.data.push_back(e.get<double>());
    return t;
}

isac::Alphabet alphabet_from(const json& jc, const char* key, std::size_t size) {
    if (!jc.contains(key)) return isac::Alphabet(size);
    std::vector<double> vals;
    for (const auto& e : jc.at(key)) vals.push_back(e.get<double>());
    return isac::Alphabet(size, std::move(vals));
}

isac::ChannelModel discrete_full_from(const json& jc) {
    Tensor ky = tensor_from(jc, "kernel_y");
    Tensor kz = tensor_from(jc, "kernel_z");
    const std::size_t nx = ky.shape[0], ns = ky.shape[1], ny = ky.shape[2], nz = kz.shape[2];
    isac::Alphabet alpha_s = alphabet_from(jc, "s_values", ns);
    isac::Alphabet alpha_x = alphabet_from(jc, "x_values", nx);
    std::vector<double> prior;
    for (const auto& e : jc.at("state_prior")) prior.push_back(e.get<double>());
    isac::DiscreteDistribution state_prior(alpha_s, std::move(prior));
    isac::JointTable kernel_y = isac::JointTable::kernel(
        {alpha_x, alpha_s, isac::Alphabet(ny)}, {0, 1}, std::move(ky.data));
    isac::JointTable kernel_z = isac::JointTable::kernel(
        {alpha_x, alpha_s, isac::Alphabet(nz)}, {0, 1}, std::move(kz.data));
    isac::ChannelModel ch =
        isac::build_discrete(state_prior, kernel_y, kernel_z, alpha_x);
    if (jc.contains("power_budget")) ch.power_budget = jc.at("power_budget").get<double>();
    return ch;
}

isac::ChannelModel channel_full_from(const json& jc) {
    if (jc.at("type").get<std::string>() == "gaussian")
        return isac::discretize_gaussian(gaussian_from(jc));
    return discrete_full_from(jc);
}

isac::ChannelModel channel_markov_from(const json& jc) {
    if (jc.at("type").get<std::string>() == "gaussian")
        return isac::to_markov(isac::discretize_gaussian(gaussian_from(jc)));
    if (!has_markov_kernels(jc)) return isac::to_markov(discrete_full_from(jc));
    Tensor ky = tensor_from(jc, "kernel_y_only");
    Tensor kzs = tensor_from(jc, "kernel_zs");
    const std::size_t nx = ky.shape[0], ny = ky.shape[1], nz = kzs.shape[1], ns = kzs.shape[2];
    isac::Alphabet alpha_x = alphabet_from(jc, "x_values", nx);
    isac::Alphabet alpha_s = alphabet_from(jc, "s_values", ns);
    isac::JointTable kernel_y_only =
        isac::JointTable::kernel({alpha_x, isac::Alphabet(ny)}, {0}, std::move(ky.data));
    isac::JointTable kernel_zs = isac::JointTable::kernel(
        {alpha_x, isac::Alphabet(nz), alpha_s}, {0}, std::move(kzs.data));
    isac::ChannelModel ch =
        isac::build_discrete_markov(kernel_y_only, kernel_zs, alpha_x, alpha_s);
    if (jc.contains("power_budget")) ch.power_budget = jc.at("power_budget").get<double>();
    return ch;
}

// ---------------------------------------------------------------------------
// Output files

struct CsvRow {
    double D, rate_bits, rate_nats, achieved, lambda, mu;
    int iterations;
    bool converged;
};

void write_curve(const fs::path& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open curve file " + path.string());
    out << "D,rate_bits,rate_nats,achieved_distortion,lambda,mu,iterations,converged\n";
    for (const CsvRow& r : rows) {
        out << g12(r.D) << ',' << g12(r.rate_bits) << ',' << g12(r.rate_nats) << ','
            << g12(r.achieved) << ',' << g12(r.lambda) << ',' << g12(r.mu) << ','
            << r.iterations << ',' << (r.converged ? "true" : "false") << '\n';
    }
}

// tr.jsonl -> tr.p007.jsonl for sweep point 7 (per-point files keep concurrent
// runs from interleaving one stream).
fs::path point_trace_path(const fs::path& base, std::size_t idx) {
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, ".p%03zu", idx);
    std::string ext = base.extension().string();
    if (ext.empty()) return fs::path(base.string() + suffix + ".jsonl");
    fs::path stem = base.parent_path() / base.stem();
    return fs::path(stem.string() + suffix + ext);
}

void write_point_trace(const fs::path& path, const std::string& mode, double D,
                       std::uint64_t master_seed, std::uint64_t point_seed,
                       const isac::SolveResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open trace file " + path.string());
    json hdr{{"type", "header"},           {"mode", mode},
             {"D", D},                     {"master_seed", master_seed},
             {"point_seed", point_seed},   {"u_size", res.nu},
             {"feasible_restarts", res.feasible_restarts}};
    out << hdr.dump() << '\n';
    for (const isac::TraceEntry& te : res.trace) {
        json line{{"iteration", te.iteration}, {"F_pre", te.F_pre},
                  {"F_post", te.F_post},       {"distortion", te.distortion},
                  {"lambda", te.lambda},       {"mu", te.mu},
                  {"bound", te.bound}};
        out << line.dump() << '\n';
    }
}

void write_scalar_trace(const fs::path& path, const std::string& mode,
                        const isac::CapacityResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open trace file " + path.string());
    json hdr{{"type", "header"}, {"mode", mode}, {"iterations", res.iterations}};
    out << hdr.dump() << '\n';
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        json line{{"iteration", i + 1}, {"F", res.trace[i]}};
        out << line.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// Runners

int run_capacity(const Settings& s, const fs::path& curve, const std::optional<fs::path>& trace) {
    Tensor k = tensor_from(s.channel, "kernel");
    const std::size_t nx = k.shape[0], ny = k.shape[1];
    isac::Alphabet alpha_x = alphabet_from(s.channel, "x_values", nx);
    isac::JointTable kernel =
        isac::JointTable::kernel({alpha_x, isac::Alphabet(ny)}, {0}, std::move(k.data));

    isac::CapacityConfig cfg;
    cfg.tol = s.solver.tol;
    cfg.max_iters = s.solver.max_iters;
    cfg.root = s.solver.root;

    isac::CapacityResult res;
    if (s.channel.contains("power_budget")) {
        std::vector<double> cost(nx);
        for (std::size_t x = 0; x < nx; ++x)
            cost[x] = alpha_x.values[x] * alpha_x.values[x];
        res = isac::capacity_with_cost(kernel, cost, s.channel.at("power_budget").get<double>(),
                                       cfg);
    } else {
        res = isac::capacity(kernel, cfg);
    }

    write_curve(curve, {{0.0, res.capacity / std::log(2.0), res.capacity, 0.0, 0.0, res.mu,
                         res.iterations, res.converged}});
    if (trace) write_scalar_trace(point_trace_path(*trace, 0), s.mode, res);
    std::cout << "wrote " << curve.string() << " (1 point)\n";
    return res.converged ? 0 : 2;
}

int run_monostatic(const Settings& s, const fs::path& curve,
                   const std::optional<fs::path>& trace) {
    isac::ChannelModel ch = channel_full_from(s.channel);
    if (!ch.power_budget) {
        std::cerr << "monostatic-curve: channel defines no power budget\n";
        return 1;
    }
    isac::CapacityConfig cfg;
    cfg.tol = s.solver.tol;
    cfg.max_iters = s.solver.max_iters;
    cfg.root = s.solver.root;
    isac::CapacityResult cap = isac::monostatic_rate(ch, *ch.power_budget, cfg);
    const double dist = isac::monostatic_distortion(ch, cap.input_dist);

    write_curve(curve, {{dist, cap.capacity / std::log(2.0), cap.capacity, dist, 0.0, cap.mu,
                         cap.iterations, cap.converged}});
    if (trace) write_scalar_trace(point_trace_path(*trace, 0), s.mode, cap);
    std::cout << "wrote " << curve.string() << " (1 point)\n";
    return cap.converged ? 0 : 2;
}

int run_sweep(const Settings& s, bool logloss, int workers, const fs::path& curve,
              const std::optional<fs::path>& trace) {
    isac::ChannelModel ch =
        logloss ? channel_markov_from(s.channel) : channel_full_from(s.channel);
    const std::optional<double> budget = ch.power_budget;
    const std::size_t n = s.dgrid.size();
    const std::uint64_t master = s.solver.seed;

    std::vector<isac::SolveResult> results(n);
    std::vector<std::string> errors(n);
    std::vector<std::uint64_t> pseeds(n);
    for (std::size_t i = 0; i < n; ++i)
        pseeds[i] = isac::splitmix64(master + 0x9e3779b97f4a7c15ULL * (i + 1));

    auto solve_point = [&](std::size_t i, const std::vector<double>& init) {
        isac::SolverConfig cfg = s.solver;
        cfg.u_size = s.u_size;
        cfg.seed = pseeds[i];
        cfg.init_p = init;
        try {
            results[i] = logloss ? isac::solve_ll(ch, s.dgrid[i], cfg, budget)
                                 : isac::solve(ch, s.dgrid[i], cfg, budget);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };

    if (s.warm_start || workers <= 1) {
        if (s.warm_start && workers > 1)
            std::cerr << "warm_start: sweep points run sequentially\n";
        std::vector<double> prev;
        for (std::size_t i = 0; i < n; ++i) {
            solve_point(i, s.warm_start ? prev : std::vector<double>{});
            if (s.warm_start) prev = errors[i].empty() ? results[i].p_ux : std::vector<double>{};
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                solve_point(i, {});
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    std::vector<CsvRow> rows;
    bool any_error = false, any_nonconverged = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
            std::cerr << "point D=" << g12(s.dgrid[i]) << ": " << errors[i] << "\n";
            any_error = true;
            continue;
        }
        const isac::SolveResult& r = results[i];
        rows.push_back({s.dgrid[i], r.rate_bits, r.rate_nats, r.achieved_distortion, r.lambda,
                        r.mu, r.iterations, r.converged});
        any_nonconverged = any_nonconverged || !r.converged;
    }
    write_curve(curve, rows);
    if (trace) {
        for (std::size_t i = 0; i < n; ++i)
            if (errors[i].empty())
                write_point_trace(point_trace_path(*trace, i), s.mode, s.dgrid[i], master,
                                  pseeds[i], results[i]);
    }
    std::cout << "wrote " << curve.string() << " (" << rows.size() << " of " << n
              << " points)\n";
    return any_error ? 1 : (any_nonconverged ? 2 : 0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capacity-distortion curve solver for bistatic sensing channels"};
    app.require_subcommand(1);

    std::string config_path;
    int workers = 1;
    std::string output_dir;
    std::optional<std::uint64_t> seed_override;

    CLI::App* run = app.add_subcommand("run", "Solve a config and write curve/trace files");
    run->add_option("config", config_path, "JSON run config")->required();
    run->add_option("--workers", workers, "Concurrent sweep-point solves")
        ->check(CLI::Range(1, 256));
    run->add_option("--output-dir", output_dir, "Base directory for relative output paths");
    run->add_option("--seed", seed_override, "Override the config master seed");

    CLI::App* val = app.add_subcommand("validate", "Check a config without solving");
    val->add_option("config", config_path, "JSON run config")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    json j;
    {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot read config: " << config_path << "\n";
            return 1;
        }
        try {
            in >> j;
        } catch (const json::exception& e) {
            std::cerr << "config parse error: " << e.what() << "\n";
            return 1;
        }
    }

    std::vector<std::string> diags;
    Settings s = parse_settings(j, diags);
    if (!s.mode.empty() && s.channel.is_object()) check_channel(s.mode, s.channel, diags);

    if (val->parsed()) {
        for (const std::string& d : diags) std::cout << d << "\n";
        return diags.empty() ? 0 : 1;
    }

    if (!diags.empty()) {
        for (const std::string& d : diags) std::cerr << d << "\n";
        return 1;
    }

    if (seed_override) s.solver.seed = *seed_override;

    try {
        const fs::path outdir = output_dir.empty() ? fs::path(".") : fs::path(output_dir);
        if (!output_dir.empty()) fs::create_directories(outdir);
        auto resolve = [&](const std::string& p) {
            const fs::path fp(p);
            return fp.is_absolute() ? fp : outdir / fp;
        };
        const fs::path curve = resolve(s.curve_path);
        if (curve.has_parent_path()) fs::create_directories(curve.parent_path());
        std::optional<fs::path> trace;
        if (!s.trace_path.empty()) {
            trace = resolve(s.trace_path);
            if (trace->has_parent_path()) fs::create_directories(trace->parent_path());
        }

        if (s.mode == "capacity") return run_capacity(s, curve, trace);
        if (s.mode == "monostatic-curve") return run_monostatic(s, curve, trace);
        return run_sweep(s, s.mode == "logloss-curve", workers, curve, trace);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
