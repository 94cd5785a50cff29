#include <cmath>
#include <fstream>

#include "common.hpp"
#include "data.hpp"
#include "whitebilevel/error.hpp"
#include "whitebilevel/image_io.hpp"
#include "whitebilevel/synthetic.hpp"

namespace wb::harness {

using nlohmann::json;

std::string Instance::id() const { return image + "__" + kernel + "__b" + detail::fmt(bsnr, 6); }

Instance Instance::parse(const std::string& id) {
    const auto pos1 = id.find("__");
    const auto pos2 = pos1 == std::string::npos ? pos1 : id.find("__", pos1 + 2);
    if (pos2 == std::string::npos || id.compare(pos2 + 2, 1, "b") != 0) {
        throw ConfigError("malformed instance id '" + id + "' (expected <image>__<kernel>__b<bsnr>)");
    }
    Instance inst;
    inst.image = id.substr(0, pos1);
    inst.kernel = id.substr(pos1 + 2, pos2 - pos1 - 2);
    try {
        inst.bsnr = detail::parse_double(id.substr(pos2 + 3), "instance id");
    } catch (const IoError&) {
        throw ConfigError("malformed BSNR in instance id '" + id + "'");
    }
    return inst;
}

fs::path Layout::ground_truth(const std::string& image) const { return data_dir() / (image + ".gt.f64"); }
fs::path Layout::observed(const Instance& inst) const { return data_dir() / (inst.id() + ".y.f64"); }
fs::path Layout::kernel(const Instance& inst) const { return data_dir() / (inst.id() + ".kernel.f64"); }
fs::path Layout::noise_sidecar(const Instance& inst) const { return data_dir() / (inst.id() + ".noise.json"); }
fs::path Layout::run_stem(const Instance& inst, LossTag loss) const {
    return runs_dir() / (inst.id() + "__" + std::string(to_string(loss)));
}
fs::path Layout::grid_csv(const Instance& inst) const { return grids_dir() / (inst.id() + ".grid.csv"); }

std::vector<std::string> image_ids(const ExperimentConfig& cfg) {
    std::vector<std::string> ids;
    for (const auto& p : cfg.images) ids.push_back(p.stem().string());
    for (std::size_t i = 0; i < cfg.synthetic.count; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth%02zu", i);
        ids.emplace_back(buf);
    }
    return ids;
}

std::vector<Instance> instances(const ExperimentConfig& cfg) {
    std::vector<Instance> out;
    for (const auto& image : image_ids(cfg))
        for (const auto& k : cfg.kernels)
            for (double b : cfg.bsnr) out.push_back({image, kernel_name(k), b});
    return out;
}

std::uint64_t instance_seed(std::uint64_t base_seed, const Instance& inst) {
    // splitmix64 finalizer
    std::uint64_t z = base_seed ^ detail::fnv1a(inst.id());
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

json to_json(const NoiseSidecar& s) {
    return {{"kernel_kind", s.kernel_kind}, {"bsnr", s.bsnr},         {"sigma", s.sigma},
            {"seed", s.seed},               {"generator", s.generator}, {"config_hash", s.config_hash}};
}

NoiseSidecar read_noise_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingSideData("noise sidecar " + path.string() + " is missing");
    try {
        const json j = json::parse(in);
        NoiseSidecar s;
        s.kernel_kind = j.at("kernel_kind").get<std::string>();
        s.bsnr = j.at("bsnr").get<double>();
        s.sigma = j.at("sigma").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.generator = j.value("generator", "");
        s.config_hash = j.value("config_hash", "");
        if (!(s.sigma > 0.0) || !std::isfinite(s.sigma)) throw IoError("sigma must be positive");
        return s;
    } catch (const json::exception& e) {
        throw IoError("malformed noise sidecar " + path.string() + ": " + e.what());
    }
}

namespace detail {

Image load_ground_truth_source(const ExperimentConfig& cfg, const std::string& image) {
    const auto ids = image_ids(cfg);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] != image) continue;
        if (i < cfg.images.size()) return io::read_image(cfg.images[i]);
        const std::size_t k = i - cfg.images.size();
        return make_synthetic_image(cfg.synthetic.height, cfg.synthetic.width, cfg.synthetic.seed + k);
    }
    throw ConfigError("unknown image id '" + image + "'");
}

const KernelSpec& kernel_spec(const ExperimentConfig& cfg, const std::string& name) {
    for (const auto& k : cfg.kernels)
        if (kernel_name(k) == name) return k;
    throw ConfigError("kernel '" + name + "' is not configured");
}

Observation load_observation(const Layout& layout, const Instance& inst) {
    const auto y_path = layout.observed(inst);
    const auto k_path = layout.kernel(inst);
    if (!fs::exists(y_path)) throw MissingSideData("observation " + y_path.string() + " is missing (run degrade)");
    if (!fs::exists(k_path)) throw MissingSideData("kernel " + k_path.string() + " is missing (run degrade)");
    Observation obs;
    obs.y = io::read_f64(y_path);
    json header;
    Image taps = io::read_f64(k_path, &header);
    try {
        obs.kernel = Kernel(std::move(taps), header.at("anchor_row").get<std::size_t>(),
                            header.at("anchor_col").get<std::size_t>(), header.at("normalized").get<bool>());
    } catch (const json::exception& e) {
        throw IoError("kernel file " + k_path.string() + " lacks anchor metadata: " + e.what());
    }
    return obs;
}

Image load_ground_truth(const Layout& layout, const std::string& image) {
    const auto path = layout.ground_truth(image);
    if (!fs::exists(path)) throw MissingSideData("ground truth " + path.string() + " is missing");
    return io::read_f64(path);
}

}  // namespace detail

std::vector<Instance> cmd_degrade(const ExperimentConfig& cfg, const std::string& image) {
    cfg.validate();
    const Layout layout{cfg.out};
    const Provenance prov = provenance_of(cfg);
    fs::create_directories(layout.data_dir());

    std::vector<Instance> written;
    for (const auto& id : image_ids(cfg)) {
        if (!image.empty() && id != image) continue;
        const Image gt = detail::load_ground_truth_source(cfg, id);
        io::write_f64(layout.ground_truth(id), gt,
                      {{"image", id}, {"config_hash", prov.config_hash}, {"seed", prov.seed}});
        for (const auto& spec : cfg.kernels) {
            const Kernel kernel = make_kernel(spec);
            const ConvOperator op(kernel, gt.height(), gt.width());
            const Image blurred = op.apply(gt);
            for (double level : cfg.bsnr) {
                const Instance inst{id, kernel_name(spec), level};
                const std::uint64_t seed = instance_seed(cfg.seed, inst);
                const NoisyObservation obs = add_awgn_bsnr(blurred, level, seed);
                const json meta = {{"image", id},
                                   {"kernel", inst.kernel},
                                   {"bsnr", level},
                                   {"config_hash", prov.config_hash},
                                   {"seed", seed}};
                io::write_f64(layout.observed(inst), obs.noisy, meta);
                io::write_pgm(layout.data_dir() / (inst.id() + ".y.pgm"), obs.noisy, prov.line());
                io::write_f64(layout.kernel(inst), kernel.taps(),
                              {{"anchor_row", kernel.anchor_row()},
                               {"anchor_col", kernel.anchor_col()},
                               {"normalized", kernel.normalized()},
                               {"kernel", inst.kernel},
                               {"config_hash", prov.config_hash},
                               {"seed", prov.seed}});
                NoiseSidecar side{inst.kernel, level, obs.sigma, seed, std::string(kNoiseGenerator), prov.config_hash};
                detail::write_file(layout.noise_sidecar(inst), to_json(side).dump(2) + "\n");
                written.push_back(inst);
            }
        }
    }
    if (!image.empty() && written.empty()) throw ConfigError("unknown image id '" + image + "'");
    return written;
}

}  // namespace wb::harness
