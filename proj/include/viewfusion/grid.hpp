#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace viewfusion {

/// Dense H x W x C array of doubles, row-major with interleaved channels.
/// Clean images live in [-1, 1]; intermediate diffusion states are unbounded.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageGrid() = default;
    ImageGrid(int h, int w, int c, double fill = 0.0);

    double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const ImageGrid& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
    std::string shape_str() const;
    bool all_finite() const;
};

/// Elementwise sum(coeffs[i] * grids[i]). Lists must be non-empty, same length,
/// and every grid must share the shape of grids[0].
ImageGrid axpy_grids(const std::vector<double>& coeffs, const std::vector<const ImageGrid*>& grids);
ImageGrid axpy_grids(const std::vector<double>& coeffs, const std::vector<ImageGrid>& grids);

double mse(const ImageGrid& a, const ImageGrid& b);

/// 10*log10(peak^2 / mse), capped at kPsnrCap so reports stay finite.
inline constexpr double kPsnrCap = 99.0;
double psnr(const ImageGrid& a, const ImageGrid& b, double peak = 2.0);

double l1_mean(const ImageGrid& a, const ImageGrid& b);
double linf_diff(const ImageGrid& a, const ImageGrid& b);
double l2_norm(const ImageGrid& g);
double l2_diff(const ImageGrid& a, const ImageGrid& b);

/// Clamp every entry into [-1, 1] (condition views keep this invariant).
ImageGrid clamp_unit(ImageGrid g);

/// Binary PGM (P5) for 1-channel grids, PPM (P6) for 3-channel; values mapped
/// linearly from [-1, 1] to [0, 255] with clamping.
void write_pnm(const ImageGrid& g, const std::string& path);
ImageGrid read_pnm(const std::string& path);

}  // namespace viewfusion
