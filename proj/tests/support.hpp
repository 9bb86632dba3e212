#pragma once

#include <string>
#include <vector>

#include "fuzzyifs/systems.hpp"

namespace testsupport {

using namespace fuzzyifs;

inline MapSpec affine_map(const Box& box, int arity, const std::vector<std::string>& coords) {
    MapSpec m = MapSpec::parse(box.dim, arity, coords);
    if (auto form = detect_affine(m, box))
        m.set_affine(*form);
    return m;
}

inline SystemSpec make_system(const Box& box, int arity, const std::vector<std::vector<std::string>>& maps) {
    SystemSpec s;
    s.box = box;
    s.arity = arity;
    for (const auto& c : maps)
        s.maps.push_back(affine_map(box, arity, c));
    return s;
}

inline GreyMap step_grey() {
    return GreyMap(PiecewiseMap({{0.0, 0.0}, {0.2505, 0.25}, {0.505, 0.5}, {0.7505, 0.75}}));
}

inline SystemSpec sierpinski() {
    return make_system(Box::unit(2), 1, {{"0.5*x", "0.5*y"}, {"0.5*x + 0.5", "0.5*y"}, {"0.5*x + 0.25", "0.5*y + 0.5"}});
}

inline SystemSpec fern() {
    return make_system(Box::unit(2), 1,
                       {{"0.856*x + 0.0414*y + 0.07", "-0.0205*x + 0.858*y + 0.147"},
                        {"0.244*x - 0.385*y + 0.393", "0.176*x + 0.224*y + 0.102"},
                        {"-0.144*x + 0.39*y + 0.527", "0.181*x + 0.259*y - 0.014"},
                        {"0.486", "0.031*x + 0.216*y + 0.05"}});
}

inline SystemSpec maple() {
    return make_system(Box::unit(2), 1,
                       {{"0.8*x + 0.1", "0.8*y + 0.04"},
                        {"0.5*x + 0.25", "0.5*y + 0.4"},
                        {"0.355*x - 0.355*y + 0.266", "0.355*x + 0.355*y + 0.078"},
                        {"0.355*x + 0.355*y + 0.378", "-0.355*x + 0.355*y + 0.434"}});
}

// Four half-scale squares with a stepped grey map on the first.
inline SystemSpec squares_fuzzy() {
    SystemSpec s = make_system(Box::unit(2), 1,
                               {{"0.5*x", "0.5*y"}, {"0.5*x + 0.5", "0.5*y"}, {"0.5*x", "0.5*y + 0.5"},
                                {"0.5*x + 0.5", "0.5*y + 0.5"}});
    s.grey = {step_grey(), GreyMap::identity(), GreyMap::identity(), GreyMap::identity()};
    return s;
}

inline SystemSpec gifs_three() {
    return make_system(Box::rect(0, 0.77, 0, 0.77), 2,
                       {{"0.25*x1 + 0.2*y2", "0.25*y1 + 0.2*y2"},
                        {"0.25*x1 + 0.2*x2", "0.25*y1 + 0.1*y2 + 0.5"},
                        {"0.25*x1 + 0.1*x2 + 0.5", "0.25*y1 + 0.2*y2"}});
}

} // namespace testsupport
