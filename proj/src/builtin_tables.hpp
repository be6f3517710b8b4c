#pragma once

#include "colorassoc/color.hpp"

#include <array>

namespace colorassoc::detail {

struct BuiltinRow {
    int index;
    const char* label;
    XyY xyy;
    LabColor lab;
    LchColor lch;
};

extern const std::array<BuiltinRow, 58> kUw58Rows;
extern const std::array<BuiltinRow, 37> kBcp37Rows;

}  // namespace colorassoc::detail
