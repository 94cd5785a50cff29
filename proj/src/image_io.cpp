#include "whitebilevel/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "whitebilevel/error.hpp"

namespace wb::io {

namespace {

static_assert(std::endian::native == std::endian::little, "f64 I/O assumes a little-endian host");

// Skips whitespace and '#' comments between PGM header tokens.
void skip_pgm_space(std::istream& in) {
    while (in) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
}

std::size_t read_pgm_number(std::istream& in, const std::filesystem::path& path) {
    skip_pgm_space(in);
    std::size_t value = 0;
    if (!(in >> value)) throw IoError("malformed PGM header in " + path.string());
    return value;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') throw IoError(path.string() + " is not a binary PGM (P5)");
    const std::size_t width = read_pgm_number(in, path);
    const std::size_t height = read_pgm_number(in, path);
    const std::size_t maxval = read_pgm_number(in, path);
    if (width == 0 || height == 0) throw IoError("empty PGM image " + path.string());
    if (maxval == 0 || maxval > 255) throw IoError("only 8-bit PGM is supported: " + path.string());
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> raw(width * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("truncated PGM data in " + path.string());
    std::vector<double> samples(raw.size());
    std::transform(raw.begin(), raw.end(), samples.begin(), [](unsigned char v) { return v / 255.0; });
    return Image(height, width, std::move(samples));
}

void write_pgm(const std::filesystem::path& path, const Image& image, const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n";
    if (!comment.empty()) {
        std::istringstream lines(comment);
        std::string line;
        while (std::getline(lines, line)) out << "# " << line << "\n";
    }
    out << image.width() << " " << image.height() << "\n255\n";
    std::vector<unsigned char> raw(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = std::clamp(image[i], 0.0, 1.0);
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

Image read_f64(const std::filesystem::path& path, nlohmann::json* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing f64 header in " + path.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad f64 header in " + path.string() + ": " + e.what());
    }
    if (!meta.contains("height") || !meta.contains("width")) {
        throw IoError("f64 header lacks height/width in " + path.string());
    }
    const auto height = meta["height"].get<std::size_t>();
    const auto width = meta["width"].get<std::size_t>();
    std::vector<double> samples(height * width);
    in.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(samples.size() * sizeof(double)));
    if (!in) throw IoError("truncated f64 data in " + path.string());
    if (header) *header = std::move(meta);
    return Image(height, width, std::move(samples));
}

void write_f64(const std::filesystem::path& path, const Image& image, nlohmann::json metadata) {
    if (metadata.is_null()) metadata = nlohmann::json::object();
    metadata["height"] = image.height();
    metadata["width"] = image.width();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << metadata.dump() << "\n";
    const auto d = image.data();
    out.write(reinterpret_cast<const char*>(d.data()), static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!out) throw IoError("failed writing " + path.string());
}

Image read_image(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".pgm") return read_pgm(path);
    if (ext == ".f64") return read_f64(path);
    throw IoError("unsupported image format: " + path.string());
}

}  // namespace wb::io
