#include "colorassoc/image.hpp"

#include "colorassoc/error.hpp"

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

namespace colorassoc {

LabImage::LabImage(int w, int h, LabColor fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w <= 0 || h <= 0) {
        throw InputError("image dimensions must be positive");
    }
}

namespace {

LabImage lab_from_bgr(const cv::Mat& bgr) {
    LabImage img(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            img.at(x, y) = srgb_to_lab({row[x][2], row[x][1], row[x][0]});
        }
    }
    return img;
}

NormalizedImage normalize_decoded(const cv::Mat& decoded) {
    cv::Mat resized;
    if (decoded.cols == kNormalizedSide && decoded.rows == kNormalizedSide) {
        resized = decoded;
    } else {
        cv::resize(decoded, resized, cv::Size(kNormalizedSide, kNormalizedSide), 0.0, 0.0,
                   cv::INTER_LINEAR);
    }
    return lab_from_bgr(resized);
}

}  // namespace

NormalizedImage normalize_image(std::span<const std::uint8_t> encoded) {
    if (encoded.empty()) {
        throw InputError("cannot decode empty image buffer");
    }
    const cv::Mat buf(1, static_cast<int>(encoded.size()), CV_8UC1,
                      const_cast<std::uint8_t*>(encoded.data()));
    const cv::Mat decoded = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (decoded.empty()) {
        throw InputError("image decode failed");
    }
    return normalize_decoded(decoded);
}

NormalizedImage normalize_image_file(const std::filesystem::path& path) {
    const cv::Mat decoded = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (decoded.empty()) {
        throw InputError("image decode failed: " + path.string());
    }
    return normalize_decoded(decoded);
}

LabImage lab_image_from_rgb(int width, int height, std::span<const Rgb8> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InputError("rgb buffer size does not match dimensions");
    }
    LabImage img(width, height);
    std::transform(rgb.begin(), rgb.end(), img.pixels.begin(), srgb_to_lab);
    return img;
}

void write_rgb_image(const std::filesystem::path& path, int width, int height,
                     std::span<const Rgb8> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InputError("rgb buffer size does not match dimensions");
    }
    cv::Mat bgr(height, width, CV_8UC3);
    for (int y = 0; y < height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < width; ++x) {
            const Rgb8& p = rgb[static_cast<std::size_t>(y) * width + x];
            row[x] = {p.b, p.g, p.r};
        }
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), bgr)) {
        throw IoError("cannot write image " + path.string());
    }
}

std::vector<Window> all_windows() {
    std::vector<Window> w;
    for (int p : kCenterPercents) {
        w.push_back(Window::center(p));
    }
    w.push_back(Window::segmented());
    return w;
}

std::string window_token(const Window& w) {
    return w.kind == WindowKind::Segmented ? std::string("seg") : fmt::format("w{}", w.percent);
}

std::size_t WindowMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

WindowMask full_frame(int width, int height, Window window) {
    WindowMask m;
    m.width = width;
    m.height = height;
    m.window = window;
    m.bits.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 1);
    return m;
}

WindowMask center_window(int percent, int width, int height) {
    if (std::find(std::begin(kCenterPercents), std::end(kCenterPercents), percent) ==
        std::end(kCenterPercents)) {
        throw InputError(fmt::format("window percent {} not in {{20,40,60,80,100}}", percent));
    }
    if (width <= 0 || height <= 0) {
        throw InputError("window dimensions must be positive");
    }
    const double scale = std::sqrt(percent / 100.0);
    // std::lround rounds half away from zero.
    const int sx = std::max(1, static_cast<int>(std::lround(width * scale)));
    const int sy = std::max(1, static_cast<int>(std::lround(height * scale)));
    const int x0 = (width - sx) / 2;
    const int y0 = (height - sy) / 2;
    WindowMask m;
    m.width = width;
    m.height = height;
    m.window = Window::center(percent);
    m.bits.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
    for (int y = y0; y < y0 + sy; ++y) {
        std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(y) * width + x0, sx, std::uint8_t{1});
    }
    return m;
}

void write_mask_png(const WindowMask& mask, const std::filesystem::path& path) {
    cv::Mat gray(mask.height, mask.width, CV_8UC1);
    for (int y = 0; y < mask.height; ++y) {
        auto* row = gray.ptr<std::uint8_t>(y);
        for (int x = 0; x < mask.width; ++x) {
            row[x] = mask.contains(x, y) ? 255 : 0;
        }
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), gray)) {
        throw IoError("cannot write mask " + path.string());
    }
}

}  // namespace colorassoc
