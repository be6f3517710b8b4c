#pragma once

#include "colorassoc/color.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace colorassoc {

inline constexpr int kNormalizedSide = 100;

/// Row-major grid of Lab pixels. Images produced by normalize_image are
/// always kNormalizedSide x kNormalizedSide; other sizes appear in tests.
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<LabColor> pixels;

    LabImage() = default;
    LabImage(int w, int h, LabColor fill = {});

    std::size_t size() const { return pixels.size(); }
    LabColor& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const LabColor& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

using NormalizedImage = LabImage;

/// Decodes JPEG/PNG bytes, bilinearly resamples to 100x100 (aspect ratio is
/// not preserved) and converts every pixel to Lab.
NormalizedImage normalize_image(std::span<const std::uint8_t> encoded);
NormalizedImage normalize_image_file(const std::filesystem::path& path);

LabImage lab_image_from_rgb(int width, int height, std::span<const Rgb8> rgb);

/// Encodes an RGB buffer by file extension (.png/.jpg).
void write_rgb_image(const std::filesystem::path& path, int width, int height,
                     std::span<const Rgb8> rgb);

enum class WindowKind { Center, Segmented };

/// A spatial window: a centered crop covering `percent` of the area, or the
/// figure region found by segmentation.
struct Window {
    WindowKind kind = WindowKind::Center;
    int percent = 100;

    static Window center(int p) { return {WindowKind::Center, p}; }
    static Window segmented() { return {WindowKind::Segmented, 0}; }

    auto operator<=>(const Window&) const = default;
};

inline constexpr int kCenterPercents[] = {20, 40, 60, 80, 100};

/// All six windows in canonical order: center 20..100, then segmented.
std::vector<Window> all_windows();

std::string window_token(const Window& w);

struct WindowMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;
    Window window;

    std::size_t count() const;
    bool contains(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
};

/// Centered rectangle with sides round(dim * sqrt(p/100)), rounding half away
/// from zero. `percent` must be one of 20, 40, 60, 80, 100.
WindowMask center_window(int percent, int width = kNormalizedSide, int height = kNormalizedSide);

WindowMask full_frame(int width, int height, Window window);

/// Morphological Chan-Vese (region-based active contour) parameters.
struct SegmentationParams {
    int iterations = 500;
    int smoothing = 1;
    double lambda_inside = 1.0;
    double lambda_outside = 1.0;
    int border = 1;  ///< initial contour sits this many pixels in from the edge
};

/// Evolves a contour from the image boundary and returns the interior region.
/// Returns the full frame when the image has no contrast or the region
/// collapses to nothing.
WindowMask segment_figure(const LabImage& img, const SegmentationParams& params = {});

/// 0/255 grayscale PNG of a mask.
void write_mask_png(const WindowMask& mask, const std::filesystem::path& path);

}  // namespace colorassoc
