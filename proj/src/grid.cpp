#include "viewfusion/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace viewfusion {

ImageGrid::ImageGrid(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
    if (h <= 0 || w <= 0 || c <= 0) {
        throw std::invalid_argument("ImageGrid: dimensions must be positive, got " +
                                    std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c));
    }
    data.assign(static_cast<size_t>(h) * w * c, fill);
}

std::string ImageGrid::shape_str() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
}

bool ImageGrid::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

ImageGrid axpy_grids(const std::vector<double>& coeffs, const std::vector<const ImageGrid*>& grids) {
    if (coeffs.empty() || coeffs.size() != grids.size()) {
        throw std::invalid_argument("axpy_grids: need equal, non-empty coefficient and grid lists");
    }
    const ImageGrid& first = *grids[0];
    for (size_t i = 1; i < grids.size(); ++i) {
        if (!grids[i]->same_shape(first)) {
            throw std::invalid_argument("axpy_grids: grid " + std::to_string(i) + " has shape " +
                                        grids[i]->shape_str() + ", expected " + first.shape_str());
        }
    }
    ImageGrid out(first.height, first.width, first.channels, 0.0);
    for (size_t i = 0; i < grids.size(); ++i) {
        const double c = coeffs[i];
        const std::vector<double>& src = grids[i]->data;
        for (size_t k = 0; k < out.data.size(); ++k) out.data[k] += c * src[k];
    }
    return out;
}

ImageGrid axpy_grids(const std::vector<double>& coeffs, const std::vector<ImageGrid>& grids) {
    std::vector<const ImageGrid*> ptrs;
    ptrs.reserve(grids.size());
    for (const ImageGrid& g : grids) ptrs.push_back(&g);
    return axpy_grids(coeffs, ptrs);
}

namespace {

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace

double mse(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "mse");
    double sum = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) {
        const double d = a.data[k] - b.data[k];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr(const ImageGrid& a, const ImageGrid& b, double peak) {
    if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

double l1_mean(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "l1_mean");
    double sum = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) sum += std::abs(a.data[k] - b.data[k]);
    return sum / static_cast<double>(a.data.size());
}

double linf_diff(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "linf_diff");
    double m = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
    return m;
}

double l2_norm(const ImageGrid& g) {
    double sum = 0.0;
    for (double v : g.data) sum += v * v;
    return std::sqrt(sum);
}

double l2_diff(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "l2_diff");
    double sum = 0.0;
    for (size_t k = 0; k < a.data.size(); ++k) {
        const double d = a.data[k] - b.data[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

ImageGrid clamp_unit(ImageGrid g) {
    for (double& v : g.data) v = std::clamp(v, -1.0, 1.0);
    return g;
}

void write_pnm(const ImageGrid& g, const std::string& path) {
    if (g.channels != 1 && g.channels != 3) {
        throw std::invalid_argument("write_pnm: only 1- or 3-channel grids, got " + g.shape_str());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pnm: cannot open " + path);
    out << (g.channels == 1 ? "P5" : "P6") << "\n" << g.width << " " << g.height << "\n255\n";
    std::vector<uint8_t> bytes;
    bytes.reserve(g.data.size());
    for (double v : g.data) {
        const double scaled = std::clamp((v + 1.0) * 0.5, 0.0, 1.0) * 255.0;
        bytes.push_back(static_cast<uint8_t>(std::lround(scaled)));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_pnm: write failed for " + path);
}

namespace {

int next_pnm_int(std::istream& in, const std::string& path) {
    // Skip whitespace and '#' comment lines between header tokens.
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF) throw std::runtime_error("read_pnm: truncated header in " + path);
    int value = 0;
    bool any = false;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        any = true;
        ch = in.get();
    }
    if (!any) throw std::runtime_error("read_pnm: malformed header in " + path);
    return value;
}

}  // namespace

ImageGrid read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pnm: cannot open " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    int channels = 0;
    if (magic[0] == 'P' && magic[1] == '5') channels = 1;
    else if (magic[0] == 'P' && magic[1] == '6') channels = 3;
    else throw std::runtime_error("read_pnm: " + path + " is not a binary PGM/PPM file");

    const int width = next_pnm_int(in, path);
    const int height = next_pnm_int(in, path);
    const int maxval = next_pnm_int(in, path);
    if (maxval != 255) throw std::runtime_error("read_pnm: only 8-bit files supported, " + path);

    ImageGrid g(height, width, channels);
    std::vector<uint8_t> bytes(g.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw std::runtime_error("read_pnm: truncated pixel data in " + path);
    }
    for (size_t k = 0; k < bytes.size(); ++k) {
        g.data[k] = static_cast<double>(bytes[k]) / 255.0 * 2.0 - 1.0;
    }
    return g;
}

}  // namespace viewfusion
