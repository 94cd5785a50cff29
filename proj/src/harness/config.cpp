#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "common.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/harness.hpp"

namespace wb::harness {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

KernelSpec kernel_from_json(const json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "gaussian") return GaussianBlur{};
        if (name == "motion") return MotionBlur{};
        throw ConfigError("unknown kernel '" + name + "' (expected gaussian or motion)");
    }
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("kernel entries need a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") {
        reject_unknown(j, {"kind", "size", "std"}, "kernels[gaussian]");
        GaussianBlur g;
        read_opt(j, "size", g.size, "kernels[gaussian]");
        read_opt(j, "std", g.std_dev, "kernels[gaussian]");
        return g;
    }
    if (kind == "motion") {
        reject_unknown(j, {"kind", "length", "angle_deg"}, "kernels[motion]");
        MotionBlur m;
        read_opt(j, "length", m.length, "kernels[motion]");
        read_opt(j, "angle_deg", m.angle_deg, "kernels[motion]");
        return m;
    }
    throw ConfigError("unknown kernel kind '" + kind + "'");
}

json kernel_to_json(const KernelSpec& spec) {
    if (const auto* g = std::get_if<GaussianBlur>(&spec)) return {{"kind", "gaussian"}, {"size", g->size}, {"std", g->std_dev}};
    if (const auto* m = std::get_if<MotionBlur>(&spec))
        return {{"kind", "motion"}, {"length", m->length}, {"angle_deg", m->angle_deg}};
    throw ConfigError("custom kernels cannot be expressed in a config file");
}

}  // namespace

void GridSpec::validate() const {
    if (count < 3) throw ConfigError("grid.count must be at least 3, got " + std::to_string(count));
    if (!(lambda_min > 0.0) || !std::isfinite(lambda_max) || !(lambda_max > lambda_min)) {
        throw ConfigError("grid needs 0 < lambda_min < lambda_max");
    }
}

std::vector<double> GridSpec::values() const {
    validate();
    std::vector<double> out(count);
    const double lo = std::log(lambda_min);
    const double hi = std::log(lambda_max);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    out.front() = lambda_min;
    out.back() = lambda_max;
    return out;
}

void ExperimentConfig::validate() const {
    if (losses.empty()) throw ConfigError("at least one loss must be selected");
    if (kernels.empty()) throw ConfigError("at least one kernel must be selected");
    if (bsnr.empty()) throw ConfigError("at least one BSNR level must be selected");
    for (double b : bsnr)
        if (!std::isfinite(b)) throw ConfigError("BSNR levels must be finite");
    if (std::set<LossTag>(losses.begin(), losses.end()).size() != losses.size())
        throw ConfigError("duplicate loss in config");
    std::set<std::string> kernel_names;
    for (const auto& k : kernels) {
        if (!kernel_names.insert(kernel_name(k)).second) throw ConfigError("duplicate kernel '" + kernel_name(k) + "'");
        try {
            make_kernel(k);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("kernel: ") + e.what());
        }
    }
    if (synthetic.count > 0 && (synthetic.height < 11 || synthetic.width < 11)) {
        throw ConfigError("synthetic images must be at least 11x11 (SSIM window)");
    }
    try {
        agd.validate();
        bilevel.validate();
        HuberParams check(huber.eps);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    grid.validate();
    std::set<std::string> ids;
    for (const auto& id : image_ids(*this)) {
        if (id.empty() || id.find("__") != std::string::npos) throw ConfigError("invalid image id '" + id + "'");
        if (!ids.insert(id).second) throw ConfigError("duplicate image id '" + id + "'");
    }
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown(j,
                   {"images", "synthetic", "kernels", "bsnr", "losses", "agd", "bilevel", "huber", "grid", "out", "seed",
                    "threads"},
                   "config");
    ExperimentConfig cfg;
    try {
        if (j.contains("images")) {
            cfg.images.clear();
            for (const auto& p : j.at("images")) cfg.images.emplace_back(p.get<std::string>());
        }
        if (j.contains("synthetic")) {
            const auto& s = j.at("synthetic");
            reject_unknown(s, {"count", "height", "width", "seed"}, "synthetic");
            read_opt(s, "count", cfg.synthetic.count, "synthetic");
            read_opt(s, "height", cfg.synthetic.height, "synthetic");
            read_opt(s, "width", cfg.synthetic.width, "synthetic");
            read_opt(s, "seed", cfg.synthetic.seed, "synthetic");
        }
        if (j.contains("kernels")) {
            cfg.kernels.clear();
            for (const auto& k : j.at("kernels")) cfg.kernels.push_back(kernel_from_json(k));
        }
        read_opt(j, "bsnr", cfg.bsnr, "config");
        if (j.contains("losses")) {
            cfg.losses.clear();
            for (const auto& l : j.at("losses")) cfg.losses.push_back(parse_loss_tag(l.get<std::string>()));
        }
        if (j.contains("agd")) {
            const auto& a = j.at("agd");
            reject_unknown(a, {"tol", "max_iters"}, "agd");
            read_opt(a, "tol", cfg.agd.tol, "agd");
            read_opt(a, "max_iters", cfg.agd.max_iters, "agd");
        }
        if (j.contains("bilevel")) {
            const auto& b = j.at("bilevel");
            reject_unknown(b, {"beta0", "alpha", "tol_d", "max_it", "max_step", "cg_tol", "cg_max_iters"}, "bilevel");
            read_opt(b, "beta0", cfg.bilevel.beta0, "bilevel");
            read_opt(b, "alpha", cfg.bilevel.alpha, "bilevel");
            read_opt(b, "tol_d", cfg.bilevel.tol_d, "bilevel");
            read_opt(b, "max_it", cfg.bilevel.max_it, "bilevel");
            read_opt(b, "max_step", cfg.bilevel.max_step, "bilevel");
            read_opt(b, "cg_tol", cfg.bilevel.cg_tol, "bilevel");
            read_opt(b, "cg_max_iters", cfg.bilevel.cg_max_iters, "bilevel");
        }
        if (j.contains("huber")) {
            const auto& h = j.at("huber");
            reject_unknown(h, {"eps"}, "huber");
            read_opt(h, "eps", cfg.huber.eps, "huber");
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown(g, {"lambda_min", "lambda_max", "count"}, "grid");
            read_opt(g, "lambda_min", cfg.grid.lambda_min, "grid");
            read_opt(g, "lambda_max", cfg.grid.lambda_max, "grid");
            read_opt(g, "count", cfg.grid.count, "grid");
        }
        if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
        read_opt(j, "seed", cfg.seed, "config");
        read_opt(j, "threads", cfg.threads, "config");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    cfg.validate();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json images = json::array();
    for (const auto& p : cfg.images) images.push_back(p.generic_string());
    json kernels = json::array();
    for (const auto& k : cfg.kernels) kernels.push_back(kernel_to_json(k));
    json losses = json::array();
    for (auto l : cfg.losses) losses.push_back(std::string(to_string(l)));
    return {
        {"images", images},
        {"synthetic",
         {{"count", cfg.synthetic.count},
          {"height", cfg.synthetic.height},
          {"width", cfg.synthetic.width},
          {"seed", cfg.synthetic.seed}}},
        {"kernels", kernels},
        {"bsnr", cfg.bsnr},
        {"losses", losses},
        {"agd", {{"tol", cfg.agd.tol}, {"max_iters", cfg.agd.max_iters}}},
        {"bilevel",
         {{"beta0", cfg.bilevel.beta0},
          {"alpha", cfg.bilevel.alpha},
          {"tol_d", cfg.bilevel.tol_d},
          {"max_it", cfg.bilevel.max_it},
          {"max_step", cfg.bilevel.max_step},
          {"cg_tol", cfg.bilevel.cg_tol},
          {"cg_max_iters", cfg.bilevel.cg_max_iters}}},
        {"huber", {{"eps", cfg.huber.eps}}},
        {"grid", {{"lambda_min", cfg.grid.lambda_min}, {"lambda_max", cfg.grid.lambda_max}, {"count", cfg.grid.count}}},
        {"out", cfg.out.generic_string()},
        {"seed", cfg.seed},
        {"threads", cfg.threads},
    };
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    ExperimentConfig cfg = config_from_json(j);
    // Image paths are relative to the config file.
    for (auto& p : cfg.images)
        if (p.is_relative()) p = path.parent_path() / p;
    return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
    json j = to_json(cfg);
    j.erase("out");
    j.erase("threads");
    return detail::hex16(detail::fnv1a(j.dump()));
}

std::string Provenance::line() const { return "config_hash=" + config_hash + " seed=" + std::to_string(seed); }

Provenance provenance_of(const ExperimentConfig& cfg) { return {config_hash(cfg), cfg.seed}; }

}  // namespace wb::harness
