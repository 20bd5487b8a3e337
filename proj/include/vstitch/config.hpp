#pragma once

#include <string>
#include <string_view>

#include "vstitch/pipeline.hpp"

namespace vstitch {

// Flat key=value text over StitchConfig; absent keys keep their defaults.
// Keys: s, eps_o, eps_r, M0, M, m, min_support, min_agreement, selection,
// ratio, sigma, sigma_fraction, gamma, cell_size, orientation, mode,
// lambda, lambda_scale, seam_update, pyramid_levels, realign_interval,
// input_width, input_height, seed, max_canvas_area. Throws kParse naming
// `origin` and the line.
StitchConfig parse_config(std::string_view text, std::string_view origin = "config");
std::string format_config(const StitchConfig& config);

}  // namespace vstitch
