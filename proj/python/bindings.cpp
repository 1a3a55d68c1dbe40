#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dpscale/blur_estimation.hpp"
#include "dpscale/error.hpp"
#include "dpscale/evaluation.hpp"
#include "dpscale/io/dataset.hpp"
#include "dpscale/io/json_io.hpp"
#include "dpscale/io/pfm.hpp"
#include "dpscale/pipeline.hpp"
#include "dpscale/psf.hpp"
#include "dpscale/synthetic.hpp"

namespace py = pybind11;
using namespace dpscale;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.pixels().begin());
    return img;
}

Array to_array(const Image& img) {
    Array a({img.height(), img.width()});
    std::copy(img.pixels().begin(), img.pixels().end(), a.mutable_data());
    return a;
}

std::string estimate(const std::string& manifest_path, const std::string& parameters, int threads,
                     const std::string& blur_observations) {
    const io::Manifest manifest = io::load_manifest(manifest_path);
    RunConfig config;
    io::apply_config(config, manifest.parameters);
    if (!parameters.empty()) io::apply_config(config, io::Json::parse(parameters));
    config.threads = threads;
    const std::vector<DpView> views = io::load_views(manifest, config.image_gamma);
    PipelineResult result;
    {
        py::gil_scoped_release release;
        if (blur_observations.empty()) {
            result = run_pipeline(views, config);
        } else {
            result = run_from_observations(
                views, io::observations_from_json(io::read_json(blur_observations)), config);
        }
    }
    return io::dump_json(io::make_report(result, views, config, manifest.ground_truth_scale));
}

double synth(const std::string& out_dir, const RandomSceneOptions& options, const std::string& scene_json) {
    const SceneSpec spec =
        scene_json.empty() ? random_scene(options) : io::scene_from_json(io::Json::parse(scene_json));
    io::write_dataset(out_dir, spec, render_dataset(spec));
    return spec.scale;
}

}  // namespace

PYBIND11_MODULE(_dpscale, m) {
    m.doc() = "Metric scale recovery from dual-pixel defocus.";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("thin_lens_blur", [](double z, double g, double f, double l) { return thin_lens_blur(z, g, f, l).meters; },
          py::arg("z"), py::arg("g"), py::arg("f"), py::arg("l"));
    m.def("blur_to_pixel_radius", [](double b, double pitch) { return blur_to_pixel_radius(BlurSize{b}, pitch); },
          py::arg("b"), py::arg("pitch"));
    m.def("right_psf", [](double r) { return to_array(right_psf(r).weights()); }, py::arg("r"));
    m.def("convolve", [](const Array& image, double r) { return to_array(convolve(to_image(image), right_psf(r))); },
          py::arg("image"), py::arg("r"), "valid-region convolution with right_psf(r)");
    m.def(
        "estimate_patch_blur",
        [](const Array& left, const Array& right, double r_max, double step) {
            const BlurEstimate e = estimate_patch_blur(to_image(left), to_image(right), blur_candidates(r_max, step));
            return py::dict(py::arg("radius_px") = e.radius_px, py::arg("loss") = e.loss,
                            py::arg("relative_loss") = e.relative_loss);
        },
        py::arg("left"), py::arg("right"), py::arg("r_max") = 15.0, py::arg("step") = 0.5);

    m.def("scale_ratio", &scale_ratio, py::arg("s_est"), py::arg("s_gt"));
    m.def("average_error", [](const std::vector<double>& r) { return average_error(r); }, py::arg("ratios"));
    m.def("round3", &round3);

    m.def("read_pfm", [](const std::string& path) { return to_array(io::read_pfm(path)); }, py::arg("path"));
    m.def("write_pfm",
          [](const std::string& path, const Array& map, bool little_endian) {
              io::write_pfm(path, to_image(map), little_endian);
          },
          py::arg("path"), py::arg("map"), py::arg("little_endian") = true);

    py::class_<RandomSceneOptions>(m, "RandomSceneOptions")
        .def(py::init<>())
        .def_readwrite("seed", &RandomSceneOptions::seed)
        .def_readwrite("views", &RandomSceneOptions::views)
        .def_readwrite("planes", &RandomSceneOptions::planes)
        .def_readwrite("width", &RandomSceneOptions::width)
        .def_readwrite("height", &RandomSceneOptions::height)
        .def_readwrite("channels", &RandomSceneOptions::channels)
        .def_readwrite("min_scale", &RandomSceneOptions::min_scale)
        .def_readwrite("max_scale", &RandomSceneOptions::max_scale)
        .def_readwrite("max_radius_px", &RandomSceneOptions::max_radius_px)
        .def_readwrite("radius_step", &RandomSceneOptions::radius_step)
        .def_readwrite("f_numbers", &RandomSceneOptions::f_numbers)
        .def_readwrite("single_depth", &RandomSceneOptions::single_depth)
        .def_readwrite("all_in_focus", &RandomSceneOptions::all_in_focus);

    m.def("_synth", &synth, py::arg("out_dir"), py::arg("options"), py::arg("scene_json") = "");
    m.def("_estimate", &estimate, py::arg("manifest"), py::arg("parameters") = "", py::arg("threads") = 0,
          py::arg("blur_observations") = "");
}
