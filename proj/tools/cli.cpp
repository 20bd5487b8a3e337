#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "vstitch/config.hpp"
#include "vstitch/diagnostics.hpp"
#include "vstitch/error.hpp"
#include "vstitch/io.hpp"
#include "vstitch/pipeline.hpp"
#include "vstitch/synth.hpp"

namespace vstitch::cli {

namespace fs = std::filesystem;

namespace {

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kIo: return kExitIo;
    case ErrorCode::kAlignmentFailed: return kExitAlignment;
    default: return kExitUsage;
  }
}

// Runs `body` after parsing; maps library errors to exit codes.
template <typename Body>
int guarded(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            Body body) {
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    return body();
  } catch (const Error& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitIo;
  }
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, dir.string() + ": " + ec.message());
}

FrameStream stream_of(const fs::path& source) {
  auto paths = std::make_shared<std::vector<fs::path>>(list_frames(source));
  return {paths->size(), [paths](std::size_t i) { return read_image((*paths)[i]); }};
}

double overlap_rmse(const AlignmentModel& model, const CorrespondenceSet& truth) {
  double sum = 0.0;
  for (const Correspondence& c : truth) {
    const double d = distance(model.map_a_point(c.src), model.map_b_point(c.dst));
    sum += d * d;
  }
  return truth.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(truth.size()));
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

int cmd_stitch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stitch synchronized frame sequences", "stitch"};
  std::string left, right, out_dir, config_file, matches_file, diag_dir;
  std::optional<int> realign;
  std::optional<std::uint64_t> seed;
  app.add_option("--left", left, "Wide-angle frame directory or image")->required();
  app.add_option("--right", right, "Fisheye frame directory or image")->required();
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--config", config_file, "key=value configuration file");
  app.add_option("--matches", matches_file, "Correspondences replacing detection and matching");
  app.add_option("--realign-interval", realign, "Frames between re-alignments (0 aligns once)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--diag", diag_dir, "Directory for seam and inlier overlays");

  return guarded(app, args, out, err, [&] {
    StitchConfig config = config_file.empty() ? StitchConfig{} : parse_config(read_text(config_file), config_file);
    if (realign) config.realign_interval = *realign;
    if (seed) config.seed = *seed;
    config.validate();

    const FrameStream a = stream_of(left);
    const FrameStream b = stream_of(right);
    std::optional<CorrespondenceSet> matches;
    if (!matches_file.empty()) {
      matches = parse_matches(read_text(matches_file), matches_file, config.input_width, config.input_height);
    }
    make_dir(out_dir);
    if (!diag_dir.empty()) make_dir(diag_dir);

    RunOptions options;
    options.matches = matches ? &*matches : nullptr;
    std::shared_ptr<const OverlapRegion> fresh_overlap;
    options.on_alignment = [&](const AlignmentModel& model, const ImageU8& fa, const ImageU8& fb) {
      if (diag_dir.empty()) return;
      fresh_overlap = model.overlap;
      write_image(fs::path(diag_dir) / ("inliers_" + frame_name(model.frame_estimated)),
                  inlier_overlay(fa, fb, model.diagnostics.inliers));
    };
    const FrameSink sink = [&](std::size_t i, const ImageU8& frame, const StitchResult& r) {
      write_image(fs::path(out_dir) / frame_name(i), frame);
      if (fresh_overlap) {
        write_image(fs::path(diag_dir) / ("seam_" + frame_name(i)), seam_overlay(frame, r.seam, *fresh_overlap));
        fresh_overlap.reset();
      }
    };
    const RunStats stats = run(a, b, config, sink, options);
    if (stats.truncated) {
      err << "stitch: warning: frame counts differ (" << stats.frames_a << " vs " << stats.frames_b << "); processed "
          << stats.frames << " pairs\n";
    }
    write_text(fs::path(out_dir) / "stats.txt", format_report(stats, false));
    out << format_report(stats, true);
    return kExitOk;
  });
}

int cmd_synth(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Render a synthetic wide-angle and fisheye sequence", "synth"};
  std::string scene_file, out_dir;
  int frames = 1;
  std::optional<std::uint64_t> seed;
  app.add_option("--scene", scene_file, "Scene description file")->required();
  app.add_option("--frames", frames, "Number of frame pairs")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--seed", seed, "Overrides the scene seed");

  return guarded(app, args, out, err, [&] {
    SceneSpec spec = parse_scene(read_text(scene_file), scene_file);
    if (seed) spec.seed = *seed;
    const Sequence seq = make_sequence(spec, frames);
    const fs::path root(out_dir);
    make_dir(root / "left");
    make_dir(root / "right");
    if (spec.object) make_dir(root / "object");
    for (std::size_t i = 0; i < seq.a.size(); ++i) {
      write_image(root / "left" / frame_name(i), seq.a[i]);
      write_image(root / "right" / frame_name(i), seq.b[i]);
      if (spec.object) {
        ImageU8 mask = seq.object_masks[i];
        for (auto& v : mask.data()) v = v ? 255 : 0;
        write_image(root / "object" / frame_name(i), mask);
      }
    }
    write_text(root / "truth.txt", format_truth(seq.truth));
    write_text(root / "scene.txt", format_scene(spec));
    out << "frames=" << seq.a.size() << "\n";
    return kExitOk;
  });
}

int cmd_eval(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Overlap RMSE and seam cost against ground truth", "eval"};
  std::string left, right, truth_file, config_file, matches_file;
  std::string mode = "multi";
  app.add_option("--left", left, "Wide-angle frame directory or image")->required();
  app.add_option("--right", right, "Fisheye frame directory or image")->required();
  app.add_option("--truth", truth_file, "Ground-truth correspondence file")->required();
  app.add_option("--mode", mode, "Alignment mode")->check(CLI::IsMember({"global", "multi"}));
  app.add_option("--config", config_file, "key=value configuration file");
  app.add_option("--matches", matches_file, "Correspondences replacing detection and matching");

  return guarded(app, args, out, err, [&] {
    StitchConfig config = config_file.empty() ? StitchConfig{} : parse_config(read_text(config_file), config_file);
    config.mode = mode == "global" ? AlignmentMode::kGlobal : AlignmentMode::kMultiHomography;
    const GroundTruth truth = parse_truth(read_text(truth_file), truth_file);
    const ImageU8 a = read_image(list_frames(left).front());
    const ImageU8 b = read_image(list_frames(right).front());
    // Truth lives in the stored frame coordinates, so no resizing here.
    config.input_width = a.width();
    config.input_height = a.height();
    std::optional<CorrespondenceSet> matches;
    if (!matches_file.empty()) matches = parse_matches(read_text(matches_file), matches_file, a.width(), a.height());

    const AlignmentModel model = align(a, b, config, matches ? &*matches : nullptr);
    const CorrespondenceSet inliers = truth.inliers();
    const StitchResult r = stitch_frame(a, b, model, FrameState{}, config);
    out << "mode=" << mode << "\n";
    out << "truth_inliers=" << inliers.size() << "\n";
    out << "selected_inliers=" << model.diagnostics.inliers.size() << "\n";
    out << "rmse_px=" << fixed(overlap_rmse(model, inliers), 6) << "\n";
    out << "seam_pixels=" << r.seam.path.size() << "\n";
    out << "seam_cost=" << fixed(r.seam_cost, 6) << "\n";
    out << "seam_cost_per_pixel="
        << fixed(r.seam.path.empty() ? 0.0 : r.seam_cost / static_cast<double>(r.seam.path.size()), 6) << "\n";
    return kExitOk;
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string usage = "usage: vstitch <stitch|synth|eval> [options]; --help on any command for details\n";
  if (args.empty()) {
    err << usage;
    return kExitUsage;
  }
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (args[0] == "stitch") return cmd_stitch(rest, out, err);
  if (args[0] == "synth") return cmd_synth(rest, out, err);
  if (args[0] == "eval") return cmd_eval(rest, out, err);
  if (args[0] == "--help" || args[0] == "-h") {
    out << usage;
    return kExitOk;
  }
  err << "vstitch: unknown command '" << args[0] << "'\n" << usage;
  return kExitUsage;
}

}  // namespace vstitch::cli
