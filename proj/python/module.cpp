#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "vstitch/config.hpp"
#include "vstitch/error.hpp"
#include "vstitch/geometry.hpp"
#include "vstitch/io.hpp"
#include "vstitch/pipeline.hpp"
#include "vstitch/synth.hpp"

namespace py = pybind11;
using namespace vstitch;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageU8 to_image(const U8Array& arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3) throw py::value_error("expected an (H, W, 3) uint8 array");
  ImageU8 img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)), 3);
  std::memcpy(img.data().data(), arr.data(), img.data().size());
  return img;
}

U8Array to_array(const ImageU8& img) {
  U8Array out({img.height(), img.width(), img.channels()});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
  return out;
}

CorrespondenceSet to_pairs(const F64Array& arr) {
  if (arr.ndim() != 2 || arr.shape(1) != 4) throw py::value_error("expected an (N, 4) array of x1 y1 x2 y2");
  auto r = arr.unchecked<2>();
  CorrespondenceSet out;
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out.push_back({{r(i, 0), r(i, 1)}, {r(i, 2), r(i, 3)}});
  return out;
}

F64Array from_pairs(const CorrespondenceSet& pairs) {
  F64Array out({static_cast<py::ssize_t>(pairs.size()), py::ssize_t{4}});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto k = static_cast<py::ssize_t>(i);
    w(k, 0) = pairs[i].src.x;
    w(k, 1) = pairs[i].src.y;
    w(k, 2) = pairs[i].dst.x;
    w(k, 3) = pairs[i].dst.y;
  }
  return out;
}

py::dict rendered(const RenderedPair& p) {
  py::dict d;
  d["a"] = to_array(p.a);
  d["b"] = to_array(p.b);
  d["matches"] = from_pairs(p.truth.all());
  std::vector<bool> inlier;
  for (const auto& c : p.truth.correspondences) inlier.push_back(c.inlier);
  d["inlier"] = py::array(py::cast(inlier));
  return d;
}

}  // namespace

PYBIND11_MODULE(_vstitch, m) {
  m.doc() = "Fisheye/wide-angle video stitching";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error)(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def(
      "estimate_homography",
      [](const F64Array& matches) { return estimate_global_homography(to_pairs(matches)).matrix(); },
      py::arg("matches"), "Least-squares DLT homography from an (N, 4) array; unit Frobenius norm.");

  m.def(
      "render_scene",
      [](const std::string& kind, std::uint64_t seed, int frame) {
        if (kind == "planar") return rendered(render_pair(planar_scene(seed), frame));
        if (kind == "two_plane") return rendered(render_pair(two_plane_scene(seed), frame));
        throw py::value_error("kind must be 'planar' or 'two_plane'");
      },
      py::arg("kind") = "planar", py::arg("seed") = 1, py::arg("frame") = 0);
  m.def(
      "render_scene_text", [](const std::string& text, int frame) { return rendered(render_pair(parse_scene(text), frame)); },
      py::arg("text"), py::arg("frame") = 0);

  m.def("read_image", [](const std::string& path) { return to_array(read_image(path)); });
  m.def("write_image", [](const std::string& path, const U8Array& img) { write_image(path, to_image(img)); });

  m.def("default_config", [] { return format_config(StitchConfig{}); });
  m.def(
      "normalize_config", [](const std::string& text) { return format_config(parse_config(text)); }, py::arg("text"),
      "Parse key=value config text and return it with every key filled in.");

  m.def(
      "stitch_pair",
      [](const U8Array& a, const U8Array& b, const std::string& config_text, std::optional<F64Array> matches) {
        const ImageU8 ia = to_image(a);
        const ImageU8 ib = to_image(b);
        const StitchConfig config = parse_config(config_text);
        std::optional<CorrespondenceSet> pairs;
        if (matches) pairs = to_pairs(*matches);
        StitchResult r;
        {
          py::gil_scoped_release release;
          const AlignmentModel model = align(ia, ib, config, pairs ? &*pairs : nullptr);
          r = stitch_frame(ia, ib, model, FrameState{}, config);
        }
        py::array_t<int> seam({static_cast<py::ssize_t>(r.seam.path.size()), py::ssize_t{2}});
        auto w = seam.mutable_unchecked<2>();
        for (std::size_t i = 0; i < r.seam.path.size(); ++i) {
          w(static_cast<py::ssize_t>(i), 0) = r.seam.path[i].x;
          w(static_cast<py::ssize_t>(i), 1) = r.seam.path[i].y;
        }
        py::dict d;
        d["canvas"] = to_array(r.frame);
        d["seam"] = seam;
        d["seam_cost"] = r.seam_cost;
        return d;
      },
      py::arg("a"), py::arg("b"), py::arg("config") = "", py::arg("matches") = py::none(),
      "Align one pair and composite it. The seam is an (K, 2) array of canvas x, y.");
}
