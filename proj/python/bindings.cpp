// Python bindings: numpy in, numpy out. Complex cubes map to (K, H, W)
// arrays, image stacks to (T, H, W).

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hspr/experiment.hpp"
#include "hspr/io.hpp"
#include "hspr/metrics.hpp"
#include "hspr/optics.hpp"
#include "hspr/phantoms.hpp"
#include "hspr/spo.hpp"

namespace py = pybind11;
using namespace hspr;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;
using RArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

RArray to_numpy(const RealImage& img) {
    RArray out({img.height(), img.width()});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

RArray to_numpy(const std::vector<RealImage>& stack) {
    const std::size_t h = stack.empty() ? 0 : stack.front().height();
    const std::size_t w = stack.empty() ? 0 : stack.front().width();
    RArray out({stack.size(), h, w});
    double* dst = out.mutable_data();
    for (const auto& img : stack) dst = std::copy(img.data().begin(), img.data().end(), dst);
    return out;
}

CArray to_numpy(const ComplexCube& cube) {
    CArray out({cube.channels(), cube.height(), cube.width()});
    std::copy(cube.data().begin(), cube.data().end(), out.mutable_data());
    return out;
}

CArray to_numpy(const ComplexField& f) {
    CArray out({f.height(), f.width()});
    std::copy(f.data().begin(), f.data().end(), out.mutable_data());
    return out;
}

ComplexCube cube_from(const CArray& a) {
    if (a.ndim() != 3) throw std::invalid_argument("expected a (K, H, W) complex array");
    ComplexCube cube(a.shape(0), a.shape(1), a.shape(2));
    std::copy(a.data(), a.data() + a.size(), cube.data().begin());
    return cube;
}

ComplexField field_from(const CArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected an (H, W) complex array");
    ComplexField f(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), f.data().begin());
    return f;
}

std::span<const cplx> span_of(const CArray& a) { return {a.data(), static_cast<std::size_t>(a.size())}; }

py::tuple spo_call(bool gaussian, const CArray& v, double z, double gamma, double param) {
    std::vector<cplx> u(static_cast<std::size_t>(v.size()));
    const auto res = gaussian ? spo::spo_gaussian(span_of(v), z, gamma, param, u)
                              : spo::spo_poisson(span_of(v), z, gamma, param, u);
    CArray out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(u.size())});
    std::copy(u.begin(), u.end(), out.mutable_data());
    return py::make_tuple(out, res.x, res.degenerate);
}

py::dict run_experiment(const std::string& config_text, const std::map<std::string, std::string>& overrides) {
    auto config = experiment::parse_config(config_text);
    for (const auto& [k, v] : overrides) experiment::apply_override(config, k, v);
    config.validate();
    experiment::Dataset data;
    experiment::SingleResult result;
    {
        py::gil_scoped_release release;
        data = experiment::build_dataset(config);
        result = experiment::reconstruct_dataset(config, data);
    }
    py::dict out;
    out["final_error"] = result.final_error;
    out["channel_errors"] = result.final_channel_errors;
    out["trace"] = result.run.trace.mean;
    out["object"] = to_numpy(result.run.state.object);
    out["truth"] = to_numpy(data.truth);
    out["observations"] = to_numpy(data.observations);
    out["wavelengths"] = data.grid.wavelengths;
    out["gamma0"] = result.run.gamma0;
    out["warnings"] = result.run.warnings;
    out["config"] = experiment::to_text(config);
    return out;
}

}  // namespace

PYBIND11_MODULE(_hspr, m) {
    m.doc() = "Hyperspectral broadband phase retrieval";
    m.attr("__version__") = HSPR_VERSION;

    m.def("phantom", [](const std::string& kind, std::size_t size, std::uint64_t seed) {
        return to_numpy(phantoms::make_phantom(phantoms::parse_phantom_kind(kind), size, seed));
    }, py::arg("kind"), py::arg("size") = 64, py::arg("seed") = 7,
       "Test image in [0, 1]: 'blobs', 'checker' or 'shepp'.");

    m.def("spo_gaussian", [](const CArray& v, double z, double gamma, double sigma) {
        return spo_call(true, v, z, gamma, sigma);
    }, py::arg("v"), py::arg("z"), py::arg("gamma"), py::arg("sigma"),
       "Gaussian pixel update; returns (u, sum |u|^2, degenerate).");
    m.def("spo_poisson", [](const CArray& v, double z, double gamma, double chi) {
        return spo_call(false, v, z, gamma, chi);
    }, py::arg("v"), py::arg("z"), py::arg("gamma"), py::arg("chi"),
       "Poissonian pixel update; returns (u, sum |u|^2, degenerate).");
    m.def("gaussian_criterion", [](const CArray& u, const CArray& v, double z, double gamma, double sigma) {
        return spo::gaussian_criterion(span_of(u), span_of(v), z, gamma, sigma);
    }, py::arg("u"), py::arg("v"), py::arg("z"), py::arg("gamma"), py::arg("sigma"));
    m.def("poisson_criterion", [](const CArray& u, const CArray& v, double z, double gamma, double chi) {
        return spo::poisson_criterion(span_of(u), span_of(v), z, gamma, chi);
    }, py::arg("u"), py::arg("v"), py::arg("z"), py::arg("gamma"), py::arg("chi"));

    m.def("propagate", [](const CArray& field, double wavelength, double distance, double pitch) {
        const auto f = field_from(field);
        const auto grid =
            SpectralGrid::uniform(1, wavelength, wavelength, f.height(), f.width(), pitch, std::abs(distance));
        return to_numpy(optics::propagate(f, optics::angular_spectrum_tf(grid, wavelength, distance)));
    }, py::arg("field"), py::arg("wavelength"), py::arg("distance"), py::arg("pitch") = 3.45e-6,
       "Angular-spectrum propagation; lengths in meters.");

    m.def("relative_error", [](const CArray& estimate, const CArray& truth) {
        if (estimate.size() != truth.size()) throw std::invalid_argument("relative_error: size mismatch");
        return metrics::relative_error(span_of(estimate), span_of(truth));
    }, py::arg("estimate"), py::arg("truth"), "Phase-aligned relative squared error.");

    m.def("read_hsc1", [](const std::filesystem::path& p) { return to_numpy(io::read_hsc1(p)); });
    m.def("write_hsc1", [](const std::filesystem::path& p, const CArray& a) { io::write_hsc1(p, cube_from(a)); });
    m.def("read_hsr1", [](const std::filesystem::path& p) { return to_numpy(io::read_hsr1(p)); });

    m.def("default_config", [] { return experiment::to_text(experiment::ExperimentConfig{}); },
          "Configuration text with every default value.");
    m.def("run", &run_experiment, py::arg("config") = std::string(),
          py::arg("overrides") = std::map<std::string, std::string>{},
          "Simulate and reconstruct in memory; returns a dict of results.");

    py::register_exception<std::invalid_argument>(m, "InvalidArgument", PyExc_ValueError);
}
