#pragma once

#include "colorassoc/image.hpp"

#include <nlohmann/json.hpp>

namespace colorassoc::detail {

inline nlohmann::ordered_json segmentation_json(const SegmentationParams& s) {
    return {{"iterations", s.iterations},
            {"smoothing", s.smoothing},
            {"lambda_inside", s.lambda_inside},
            {"lambda_outside", s.lambda_outside},
            {"border", s.border}};
}

inline SegmentationParams segmentation_from_json(const nlohmann::json& j) {
    SegmentationParams s;
    s.iterations = j.at("iterations").get<int>();
    s.smoothing = j.at("smoothing").get<int>();
    s.lambda_inside = j.at("lambda_inside").get<double>();
    s.lambda_outside = j.at("lambda_outside").get<double>();
    s.border = j.at("border").get<int>();
    return s;
}

}  // namespace colorassoc::detail
