#include "whitebilevel/synthetic.hpp"

#include <algorithm>
#include <random>

namespace wb {

Image make_synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = static_cast<double>(height);
    const double w = static_cast<double>(width);

    Image img(height, width);
    const double base = 0.15 + 0.2 * unit(engine);
    const double slope_r = 0.3 * (unit(engine) - 0.5);
    const double slope_c = 0.3 * (unit(engine) - 0.5);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            img(r, c) = base + slope_r * static_cast<double>(r) / h + slope_c * static_cast<double>(c) / w;

    const int shapes = 4 + static_cast<int>(unit(engine) * 4.0);
    for (int s = 0; s < shapes; ++s) {
        const bool disk = unit(engine) < 0.5;
        const double level = 0.05 + 0.9 * unit(engine);
        const bool ramped = unit(engine) < 0.3;
        const double ramp = 0.4 * (unit(engine) - 0.5);
        const double cr = h * (0.1 + 0.8 * unit(engine));
        const double cc = w * (0.1 + 0.8 * unit(engine));
        const double ext_r = h * (0.08 + 0.22 * unit(engine));
        const double ext_c = w * (0.08 + 0.22 * unit(engine));
        for (std::size_t r = 0; r < height; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                const double dr = (static_cast<double>(r) - cr) / ext_r;
                const double dc = (static_cast<double>(c) - cc) / ext_c;
                const bool inside = disk ? (dr * dr + dc * dc <= 1.0) : (std::abs(dr) <= 1.0 && std::abs(dc) <= 1.0);
                if (inside) img(r, c) = level + (ramped ? ramp * dc : 0.0);
            }
        }
    }
    for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

}  // namespace wb
