// Morphological Chan-Vese: the level set is a binary image; each step moves
// boundary pixels toward the region whose mean color they resemble, then
// applies a discrete curvature operator built from line erosions/dilations.

#include "colorassoc/image.hpp"

#include "colorassoc/error.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace colorassoc {
namespace {

using Grid = std::vector<std::uint8_t>;

// 3-pixel line structuring elements: diagonal, vertical, anti-diagonal, horizontal.
constexpr std::array<std::array<int, 2>, 4> kLineDirs{{{1, 1}, {0, 1}, {-1, 1}, {1, 0}}};

class Morphology {
public:
    Morphology(int w, int h) : w_(w), h_(h), tmp_(static_cast<std::size_t>(w) * h) {}

    // Pixels outside the grid read as 0 for both erosion and dilation.
    std::uint8_t get(const Grid& g, int x, int y) const {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) {
            return 0;
        }
        return g[static_cast<std::size_t>(y) * w_ + x];
    }

    // Union of erosions by each line element.
    void sup_inf(Grid& u) {
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                std::uint8_t any = 0;
                for (const auto& d : kLineDirs) {
                    if (get(u, x, y) && get(u, x + d[0], y + d[1]) && get(u, x - d[0], y - d[1])) {
                        any = 1;
                        break;
                    }
                }
                tmp_[static_cast<std::size_t>(y) * w_ + x] = any;
            }
        }
        u.swap(tmp_);
    }

    // Intersection of dilations by each line element.
    void inf_sup(Grid& u) {
        for (int y = 0; y < h_; ++y) {
            for (int x = 0; x < w_; ++x) {
                std::uint8_t all = 1;
                for (const auto& d : kLineDirs) {
                    if (!(get(u, x, y) || get(u, x + d[0], y + d[1]) || get(u, x - d[0], y - d[1]))) {
                        all = 0;
                        break;
                    }
                }
                tmp_[static_cast<std::size_t>(y) * w_ + x] = all;
            }
        }
        u.swap(tmp_);
    }

    // Alternates SI∘IS and IS∘SI on successive calls.
    void curvature(Grid& u) {
        if (phase_ == 0) {
            inf_sup(u);
            sup_inf(u);
        } else {
            sup_inf(u);
            inf_sup(u);
        }
        phase_ ^= 1;
    }

private:
    int w_;
    int h_;
    Grid tmp_;
    int phase_ = 0;
};

bool has_contrast(const LabImage& img) {
    const LabColor& first = img.pixels.front();
    for (const auto& p : img.pixels) {
        if (p.L != first.L || p.a != first.a || p.b != first.b) {
            return true;
        }
    }
    return false;
}

// Nonzero iff numpy-style gradient (central differences inside, one-sided at
// the edges) is nonzero along either axis.
bool on_front(const Grid& u, int w, int h, int x, int y) {
    auto at = [&](int xx, int yy) { return static_cast<int>(u[static_cast<std::size_t>(yy) * w + xx]); };
    int gx = 0;
    if (w > 1) {
        if (x == 0) {
            gx = at(1, y) - at(0, y);
        } else if (x == w - 1) {
            gx = at(w - 1, y) - at(w - 2, y);
        } else {
            gx = at(x + 1, y) - at(x - 1, y);
        }
    }
    int gy = 0;
    if (h > 1) {
        if (y == 0) {
            gy = at(x, 1) - at(x, 0);
        } else if (y == h - 1) {
            gy = at(x, h - 1) - at(x, h - 2);
        } else {
            gy = at(x, y + 1) - at(x, y - 1);
        }
    }
    return gx != 0 || gy != 0;
}

}  // namespace

WindowMask segment_figure(const LabImage& img, const SegmentationParams& params) {
    if (params.iterations < 0 || params.smoothing < 0 || params.border < 1) {
        throw InputError("segmentation: iterations/smoothing must be >= 0 and border >= 1");
    }
    const int w = img.width;
    const int h = img.height;
    if (w <= 2 * params.border || h <= 2 * params.border || !has_contrast(img)) {
        return full_frame(w, h, Window::segmented());
    }

    Grid u(static_cast<std::size_t>(w) * h, 0);
    for (int y = params.border; y < h - params.border; ++y) {
        for (int x = params.border; x < w - params.border; ++x) {
            u[static_cast<std::size_t>(y) * w + x] = 1;
        }
    }

    Morphology morph(w, h);
    std::vector<std::uint8_t> front(u.size());
    // history[k] holds the latest state after a step of parity k; the
    // initial contour counts as the state after step -1.
    std::array<Grid, 2> history{Grid{}, u};
    int last_repeat = -1;

    int it = 0;
    for (; it < params.iterations; ++it) {
        std::array<double, 3> sum_in{}, sum_out{};
        std::size_t n_in = 0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const LabColor& p = img.pixels[i];
            auto& s = u[i] ? sum_in : sum_out;
            s[0] += p.L;
            s[1] += p.a;
            s[2] += p.b;
            n_in += u[i];
        }
        const std::size_t n_out = u.size() - n_in;
        if (n_in == 0 || n_out == 0) {
            break;
        }
        const LabColor c_in{sum_in[0] / n_in, sum_in[1] / n_in, sum_in[2] / n_in};
        const LabColor c_out{sum_out[0] / n_out, sum_out[1] / n_out, sum_out[2] / n_out};

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                front[static_cast<std::size_t>(y) * w + x] = on_front(u, w, h, x, y) ? 1 : 0;
            }
        }
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!front[i]) {
                continue;
            }
            const LabColor& p = img.pixels[i];
            const double d_in = (p.L - c_in.L) * (p.L - c_in.L) + (p.a - c_in.a) * (p.a - c_in.a) +
                                (p.b - c_in.b) * (p.b - c_in.b);
            const double d_out = (p.L - c_out.L) * (p.L - c_out.L) +
                                 (p.a - c_out.a) * (p.a - c_out.a) +
                                 (p.b - c_out.b) * (p.b - c_out.b);
            const double force = params.lambda_inside * d_in - params.lambda_outside * d_out;
            if (force < 0.0) {
                u[i] = 1;
            } else if (force > 0.0) {
                u[i] = 0;
            }
        }
        for (int s = 0; s < params.smoothing; ++s) {
            morph.curvature(u);
        }

        // The update depends only on u and the curvature phase, which has
        // period 2 in iterations; a repeat of the state two steps back means
        // the evolution has entered a 2-cycle.
        if (u == history[it % 2]) {
            last_repeat = it;
            break;
        }
        history[it % 2] = u;
    }

    if (last_repeat >= 0) {
        // States now alternate: u (after step it) and history[(it + 1) % 2]
        // (after step it - 1). Pick the one the full run would end on.
        const int remaining = params.iterations - 1 - last_repeat;
        if (remaining % 2 == 1) {
            u = history[(last_repeat + 1) % 2];
        }
    }

    WindowMask mask;
    mask.width = w;
    mask.height = h;
    mask.window = Window::segmented();
    mask.bits = std::move(u);
    if (mask.count() == 0) {
        return full_frame(w, h, Window::segmented());
    }
    return mask;
}

}  // namespace colorassoc
