#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snnport/converter.hpp"
#include "snnport/dnn.hpp"
#include "snnport/edge.hpp"
#include "snnport/model_ir.hpp"
#include "snnport/simulator.hpp"

namespace py = pybind11;
using namespace snnport;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a)
{
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(shape, std::vector<float>(a.data(), a.data() + a.size()));
}

FloatArray to_array(const Tensor& t)
{
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    FloatArray a(shape);
    std::copy(t.values().begin(), t.values().end(), a.mutable_data());
    return a;
}

LabeledDataset to_dataset(const FloatArray& images, const std::vector<std::uint32_t>& labels)
{
    LabeledDataset d;
    Tensor t = to_tensor(images);
    if (t.rank() == 3) {
        t = t.reshaped({t.shape()[0], 1, t.shape()[1], t.shape()[2]});
    }
    d.images = std::move(t);
    d.labels = labels;
    return d;
}

edge::CannyParams canny_params(double sigma, std::size_t k, double low, double high)
{
    edge::CannyParams p;
    p.sigma = sigma;
    p.kernel_size = k;
    p.low = low;
    p.high = high;
    p.validate();
    return p;
}

}  // namespace

PYBIND11_MODULE(_snnport, m)
{
    m.doc() = "Converted spiking network toolkit";
    py::register_exception<Error>(m, "SnnportError", PyExc_RuntimeError);

    py::class_<LayerSpec>(m, "Layer")
        .def_property_readonly("kind", [](const LayerSpec& l) { return to_string(l.kind); })
        .def_readonly("name", &LayerSpec::name)
        .def_readonly("units", &LayerSpec::units)
        .def_property_readonly("activation", [](const LayerSpec& l) { return to_string(l.activation); })
        .def_property_readonly("parameter_count", &LayerSpec::parameter_count)
        .def_property_readonly("weights", [](const LayerSpec& l) { return to_array(l.weights); })
        .def_property_readonly("biases", [](const LayerSpec& l) { return to_array(l.biases); });

    py::class_<NetworkSpec>(m, "Network")
        .def_readwrite("name", &NetworkSpec::name)
        .def_readonly("input_shape", &NetworkSpec::input_shape)
        .def_readonly("class_count", &NetworkSpec::class_count)
        .def_readwrite("metadata", &NetworkSpec::metadata)
        .def_property_readonly("layers", [](const NetworkSpec& n) { return n.layers; })
        .def_property_readonly("parameter_count", &NetworkSpec::parameter_count)
        .def("set_parameters",
             [](NetworkSpec& n, std::size_t index, const FloatArray& w, const FloatArray& b) {
                 auto& layer = n.layers.at(index);
                 if (!layer.has_parameters()) {
                     throw Error("layer " + layer.name + " has no parameters");
                 }
                 Tensor wt = to_tensor(w), bt = to_tensor(b);
                 if (wt.shape() != layer.weights.shape() || bt.shape() != layer.biases.shape()) {
                     throw Error("parameter shape mismatch for layer " + layer.name + ": expected " +
                                 shape_string(layer.weights.shape()) + " and " + shape_string(layer.biases.shape()));
                 }
                 layer.weights = std::move(wt);
                 layer.biases = std::move(bt);
             })
        .def("violations",
             [](const NetworkSpec& n) {
                 std::vector<std::string> out;
                 for (const auto& v : validate_convertible(n)) {
                     out.push_back(v.layer_name + ": " + v.message);
                 }
                 return out;
             })
        .def("save", [](const NetworkSpec& n, const std::string& path) { save_network(n, path); })
        .def("predict",
             [](const NetworkSpec& n, const FloatArray& images, std::size_t workers) {
                 std::vector<std::uint32_t> labels(static_cast<std::size_t>(images.shape(0)), 0);
                 const auto pred = dnn::predict_batch(n, to_dataset(images, labels), workers);
                 return std::vector<std::size_t>(pred.begin(), pred.end());
             },
             py::arg("images"), py::arg("workers") = 1);

    m.def("vgg9_skeleton", &build_vgg9_skeleton, py::arg("class_count") = 10);
    m.def("load_network", &load_network);
    m.def("load_idx",
          [](const std::string& path) { return to_array(parse_idx(read_file(path))); });
    m.def("load_idx_labels", [](const std::string& path) { return parse_idx_labels(read_file(path)); });
    m.def("save_idx_dataset",
          [](const FloatArray& images, const std::vector<std::uint32_t>& labels, const std::string& images_path,
             const std::string& labels_path) { save_idx_dataset(to_dataset(images, labels), images_path, labels_path); });

    m.def(
        "canny",
        [](const FloatArray& image, double sigma, std::size_t k, double low, double high) {
            if (image.ndim() != 2) {
                throw Error("canny expects a 2-D array");
            }
            const auto rows = static_cast<std::size_t>(image.shape(0));
            const auto cols = static_cast<std::size_t>(image.shape(1));
            edge::Image img(rows, cols, std::vector<float>(image.data(), image.data() + image.size()));
            const auto out = edge::canny(img, canny_params(sigma, k, low, high));
            FloatArray a({image.shape(0), image.shape(1)});
            std::copy(out.pixels.begin(), out.pixels.end(), a.mutable_data());
            return a;
        },
        py::arg("image"), py::arg("sigma") = 1.0, py::arg("kernel_size") = 5, py::arg("low") = 0.1,
        py::arg("high") = 0.2);
    m.def(
        "canny_batch",
        [](const FloatArray& images, double sigma, std::size_t k, double low, double high, std::size_t workers) {
            std::vector<std::uint32_t> labels(static_cast<std::size_t>(images.shape(0)), 0);
            const auto out = edge::canny_dataset(to_dataset(images, labels), canny_params(sigma, k, low, high), workers);
            return to_array(out.images);
        },
        py::arg("images"), py::arg("sigma") = 1.0, py::arg("kernel_size") = 5, py::arg("low") = 0.1,
        py::arg("high") = 0.2, py::arg("workers") = 1);
    m.def("sparsity", [](const FloatArray& a) { return edge::sparsity(std::span<const float>(a.data(), a.size())); });

    m.def(
        "convert",
        [](const NetworkSpec& n, const FloatArray& images, const std::vector<std::uint32_t>& labels, double percentile,
           const std::string& out_path) {
            const auto c = convert::convert(n, to_dataset(images, labels), percentile);
            save_snn(c.snn, out_path);
            return c.scales.lambda;
        },
        py::arg("network"), py::arg("images"), py::arg("labels"), py::arg("percentile") = convert::kDefaultPercentile,
        py::arg("out_path"));

    m.def(
        "accuracy_curve",
        [](const std::string& snn_path, const FloatArray& images, const std::vector<std::uint32_t>& labels,
           const std::vector<std::size_t>& durations, std::uint64_t seed, const std::string& mode, std::size_t workers) {
            sim::Simulator simulator(load_snn(snn_path));
            sim::EncodingConfig cfg;
            cfg.seed = seed;
            cfg.mode = sim::encoding_mode_from_string(mode);
            const auto r = sim::accuracy_curve(simulator, to_dataset(images, labels), durations, cfg, workers);
            py::dict d;
            d["durations"] = r.durations;
            d["accuracy"] = r.accuracy;
            std::vector<double> sops;
            for (std::size_t i = 0; i < r.durations.size(); ++i) {
                sops.push_back(r.mean_sops(i));
            }
            d["mean_sops"] = sops;
            return d;
        },
        py::arg("snn_path"), py::arg("images"), py::arg("labels"), py::arg("durations"), py::arg("seed") = 0,
        py::arg("mode") = "rate", py::arg("workers") = 1);
}
