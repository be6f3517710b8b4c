#include "colorassoc/color.hpp"

#include "colorassoc/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace colorassoc {
namespace {

constexpr double kDelta = 6.0 / 29.0;
constexpr double kDelta3 = kDelta * kDelta * kDelta;

double lab_f(double t) {
    if (t > kDelta3) {
        return std::cbrt(t);
    }
    return t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    if (t > kDelta) {
        return t * t * t;
    }
    return 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

// Linear sRGB -> XYZ (Y of white = 1).
constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

constexpr Xyz kSrgbWhite{
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

double srgb_decode(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double srgb_encode(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

const std::array<double, 256>& linear_lut() {
    static const std::array<double, 256> lut = [] {
        std::array<double, 256> t{};
        for (int i = 0; i < 256; ++i) {
            t[i] = srgb_decode(i / 255.0);
        }
        return t;
    }();
    return lut;
}

bool finite(const XyY& c) {
    return std::isfinite(c.x) && std::isfinite(c.y) && std::isfinite(c.Y);
}

}  // namespace

Xyz xyy_to_xyz(const XyY& c) {
    if (c.Y == 0.0) {
        return {};
    }
    if (c.y <= 0.0) {
        throw InputError("xyY chromaticity y must be positive when Y > 0");
    }
    return {c.x * c.Y / c.y, c.Y, (1.0 - c.x - c.y) * c.Y / c.y};
}

LabColor xyz_to_lab(const Xyz& c, const Xyz& white) {
    const double fx = lab_f(c.X / white.X);
    const double fy = lab_f(c.Y / white.Y);
    const double fz = lab_f(c.Z / white.Z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabColor xyy_to_lab(const XyY& c, const WhitePoint& wp) {
    if (!finite(c) || !std::isfinite(wp.x) || !std::isfinite(wp.y) || !std::isfinite(wp.Y)) {
        throw InputError("xyy_to_lab: non-finite coordinates");
    }
    if (!(wp.Y > 0.0) || !(wp.y > 0.0)) {
        throw InputError("xyy_to_lab: white point luminance and y must be positive");
    }
    const Xyz white = xyy_to_xyz({wp.x, wp.y, wp.Y});
    return xyz_to_lab(xyy_to_xyz(c), white);
}

LabColor srgb_to_lab(const Rgb8& c) {
    const auto& lut = linear_lut();
    const double r = lut[c.r];
    const double g = lut[c.g];
    const double b = lut[c.b];
    const Xyz xyz{
        kRgbToXyz[0][0] * r + kRgbToXyz[0][1] * g + kRgbToXyz[0][2] * b,
        kRgbToXyz[1][0] * r + kRgbToXyz[1][1] * g + kRgbToXyz[1][2] * b,
        kRgbToXyz[2][0] * r + kRgbToXyz[2][1] * g + kRgbToXyz[2][2] * b,
    };
    return xyz_to_lab(xyz, kSrgbWhite);
}

Rgb8 lab_to_srgb(const LabColor& c) {
    const double fy = (c.L + 16.0) / 116.0;
    const double fx = fy + c.a / 500.0;
    const double fz = fy - c.b / 200.0;
    const double X = kSrgbWhite.X * lab_f_inv(fx);
    const double Y = kSrgbWhite.Y * lab_f_inv(fy);
    const double Z = kSrgbWhite.Z * lab_f_inv(fz);
    // Inverse of kRgbToXyz.
    const double r = 3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z;
    const double g = -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z;
    const double b = 0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z;
    auto to8 = [](double v) {
        const double e = srgb_encode(std::clamp(v, 0.0, 1.0));
        return static_cast<std::uint8_t>(std::lround(std::clamp(e, 0.0, 1.0) * 255.0));
    };
    return {to8(r), to8(g), to8(b)};
}

bool is_achromatic(const LchColor& c) { return c.c <= kAchromaticChroma; }

LchColor lab_to_lch(const LabColor& c) {
    const double chroma = std::hypot(c.a, c.b);
    if (chroma <= kAchromaticChroma) {
        return {c.L, chroma, 0.0};
    }
    double h = std::atan2(c.b, c.a) * 180.0 / std::numbers::pi;
    if (h < 0.0) {
        h += 360.0;
    }
    if (h >= 360.0) {
        h -= 360.0;
    }
    return {c.L, chroma, h};
}

LabColor lch_to_lab(const LchColor& c) {
    const double rad = c.h * std::numbers::pi / 180.0;
    return {c.L, c.c * std::cos(rad), c.c * std::sin(rad)};
}

double delta_e_76(const LabColor& p, const LabColor& q) {
    const double dl = p.L - q.L;
    const double da = p.a - q.a;
    const double db = p.b - q.b;
    return std::sqrt(dl * dl + da * da + db * db);
}

double hue_delta(double h1, double h2) {
    double d = std::fmod(std::fabs(h1 - h2), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

}  // namespace colorassoc
