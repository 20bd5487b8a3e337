#include "vstitch/config.hpp"

#include <sstream>

#include "keyvalue.hpp"
#include "vstitch/error.hpp"

namespace vstitch {

StitchConfig parse_config(std::string_view text, std::string_view origin) {
  StitchConfig c;
  SelectionParams& sel = c.selection;
  for (const kv::Entry& e : kv::entries(text, origin)) {
    const std::string& k = e.key;
    auto real = [&] { return kv::numbers(e.value, origin, e.line, 1).front(); };
    auto integer = [&] { return static_cast<int>(kv::integer(e.value, origin, e.line)); };
    auto choice = [&](std::string_view first, std::string_view second) {
      if (e.value == first) return true;
      if (e.value != second) {
        kv::fail(origin, e.line, k + " must be " + std::string(first) + " or " + std::string(second));
      }
      return false;
    };
    if (k == "s") sel.s = integer();
    else if (k == "eps_o") sel.eps_o = real();
    else if (k == "eps_r") sel.eps_r = real();
    else if (k == "M0") sel.m0 = integer();
    else if (k == "M") sel.m_total = integer();
    else if (k == "m") sel.m = integer();
    else if (k == "min_support") sel.min_support = integer();
    else if (k == "min_agreement") sel.min_agreement = integer();
    else if (k == "selection")
      sel.mode = choice("mean", "first") ? SelectionMode::kMeanOfSelected : SelectionMode::kFirstInlier;
    else if (k == "ratio") c.ratio = real();
    else if (k == "sigma") c.sigma = real();
    else if (k == "sigma_fraction") c.sigma_fraction = real();
    else if (k == "gamma") c.gamma = real();
    else if (k == "cell_size") c.cell_size = integer();
    else if (k == "orientation")
      c.orientation = choice("toward_inliers", "as_written") ? IntegrationOrientation::kTowardInliers
                                                            : IntegrationOrientation::kAsWritten;
    else if (k == "mode") c.mode = choice("multi", "global") ? AlignmentMode::kMultiHomography : AlignmentMode::kGlobal;
    else if (k == "lambda") c.lambda = real();
    else if (k == "lambda_scale") c.lambda_scale = real();
    else if (k == "seam_update")
      c.seam_update = choice("per_pixel", "cumulative") ? SeamUpdateMode::kPerPixel : SeamUpdateMode::kCumulative;
    else if (k == "pyramid_levels") c.pyramid_levels = integer();
    else if (k == "realign_interval") c.realign_interval = integer();
    else if (k == "input_width") c.input_width = integer();
    else if (k == "input_height") c.input_height = integer();
    else if (k == "seed") c.seed = static_cast<std::uint64_t>(kv::integer(e.value, origin, e.line));
    else if (k == "max_canvas_area") c.max_canvas_area = real();
    else kv::fail(origin, e.line, "unknown key '" + k + "'");
  }
  try {
    c.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::kParse, std::string(origin) + ": " + err.what());
  }
  return c;
}

std::string format_config(const StitchConfig& c) {
  const SelectionParams& sel = c.selection;
  std::ostringstream out;
  out << "s=" << sel.s << "\neps_o=" << kv::format(sel.eps_o) << "\neps_r=" << kv::format(sel.eps_r)
      << "\nM0=" << sel.m0 << "\nM=" << sel.m_total << "\nm=" << sel.m << "\nmin_support=" << sel.min_support
      << "\nmin_agreement=" << sel.min_agreement
      << "\nselection=" << (sel.mode == SelectionMode::kMeanOfSelected ? "mean" : "first")
      << "\nratio=" << kv::format(c.ratio) << "\n";
  if (c.sigma) out << "sigma=" << kv::format(*c.sigma) << "\n";
  out << "sigma_fraction=" << kv::format(c.sigma_fraction) << "\ngamma=" << kv::format(c.gamma)
      << "\ncell_size=" << c.cell_size << "\norientation="
      << (c.orientation == IntegrationOrientation::kTowardInliers ? "toward_inliers" : "as_written")
      << "\nmode=" << (c.mode == AlignmentMode::kMultiHomography ? "multi" : "global") << "\n";
  if (c.lambda) out << "lambda=" << kv::format(*c.lambda) << "\n";
  out << "lambda_scale=" << kv::format(c.lambda_scale)
      << "\nseam_update=" << (c.seam_update == SeamUpdateMode::kPerPixel ? "per_pixel" : "cumulative")
      << "\npyramid_levels=" << c.pyramid_levels << "\nrealign_interval=" << c.realign_interval
      << "\ninput_width=" << c.input_width << "\ninput_height=" << c.input_height << "\nseed=" << c.seed
      << "\nmax_canvas_area=" << kv::format(c.max_canvas_area) << "\n";
  return out.str();
}

}  // namespace vstitch
