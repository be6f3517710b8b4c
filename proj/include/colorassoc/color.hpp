#pragma once

#include <cstdint>

namespace colorassoc {

/// CIE 1931 chromaticity plus luminance.
struct XyY {
    double x = 0.0;
    double y = 0.0;
    double Y = 0.0;
};

/// Reference white in xyY. Luminance must be positive.
struct WhitePoint {
    double x = 0.0;
    double y = 0.0;
    double Y = 0.0;
};

struct LabColor {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

/// Cylindrical CIELAB. Hue in degrees, [0, 360).
struct LchColor {
    double L = 0.0;
    double c = 0.0;
    double h = 0.0;
};

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
};

struct Xyz {
    double X = 0.0;
    double Y = 0.0;
    double Z = 0.0;
};

// Chroma at or below this is treated as achromatic: hue is reported as 0 and
// sector features ignore the hue constraint.
inline constexpr double kAchromaticChroma = 1e-9;

inline constexpr WhitePoint kD65{0.31273, 0.32902, 100.0};

Xyz xyy_to_xyz(const XyY& c);

/// xyY -> XYZ -> L*a*b* relative to `wp`. Throws InputError on non-finite
/// input or non-positive white luminance.
LabColor xyy_to_lab(const XyY& c, const WhitePoint& wp);

LabColor xyz_to_lab(const Xyz& c, const Xyz& white);

/// 8-bit sRGB (IEC 61966-2-1 transfer curve, D65) to L*a*b*.
LabColor srgb_to_lab(const Rgb8& c);

/// Inverse of srgb_to_lab with rounding and gamut clipping; used to render
/// target colors into synthetic images.
Rgb8 lab_to_srgb(const LabColor& c);

LchColor lab_to_lch(const LabColor& c);
LabColor lch_to_lab(const LchColor& c);

bool is_achromatic(const LchColor& c);

/// CIE76 color difference.
double delta_e_76(const LabColor& p, const LabColor& q);

/// Smallest angle between two hues, in [0, 180].
double hue_delta(double h1, double h2);

}  // namespace colorassoc
