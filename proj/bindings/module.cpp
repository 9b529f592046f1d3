#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <memory>

#include "phaseseg/checkpoint.hpp"
#include "phaseseg/io.hpp"
#include "phaseseg/metrics.hpp"
#include "phaseseg/model.hpp"
#include "phaseseg/ops.hpp"
#include "phaseseg/synthdata.hpp"

namespace py = pybind11;
using namespace phaseseg;

namespace {

using Array2d = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Array1d = py::array_t<double, py::array::c_style | py::array::forcecast>;

TensorPtr tensor_from_2d(const Array2d& a) {
    if (a.ndim() != 2) throw DimensionError("expected a 2-D array");
    auto t = Tensor::create({static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))}, false);
    std::copy(a.data(), a.data() + a.size(), t->data.begin());
    return t;
}

TensorPtr tensor_from_1d(const Array1d& a) {
    if (a.ndim() != 1) throw DimensionError("expected a 1-D array");
    auto t = Tensor::create({static_cast<int>(a.shape(0))}, false);
    std::copy(a.data(), a.data() + a.size(), t->data.begin());
    return t;
}

py::array_t<double> array_from_tensor(const TensorPtr& t) {
    if (t->ndim() != 2) throw DimensionError("expected a 2-D tensor");
    py::array_t<double> out({t->rows(), t->cols()});
    std::copy(t->data.begin(), t->data.end(), out.mutable_data());
    return out;
}

WorkflowModel preset_by_name(const std::string& preset, int num_classes) {
    if (preset == "ramie") return ramie_preset();
    if (preset == "autolaparo") return autolaparo_preset();
    if (preset == "sequential") return sequential_preset(num_classes > 0 ? num_classes : 5);
    throw ParameterError("unknown preset \"" + preset + "\"");
}

// Owns the model a streaming session borrows from.
class Inference {
public:
    explicit Inference(const std::string& checkpoint_path)
        : model_(std::make_unique<Model>(model_from_checkpoint(load_checkpoint(checkpoint_path)))) {
        model_->freeze();
        session_ = std::make_unique<StreamingSession>(*model_);
    }

    int push(const std::vector<double>& frame) {
        const auto logits = session_->push_frame(frame);
        const auto& last = logits.back();
        return argmax_row(last.data(), static_cast<int>(last.size()));
    }

    std::vector<int> predict(const Array2d& features) const {
        const auto stages = model_->forward(tensor_from_2d(features)).stage_logits;
        return argmax_rows(*stages.back());
    }

    void reset() { session_->reset(); }
    int frames_seen() const { return session_->frames_seen(); }
    int input_dim() const { return model_->config().input_dim; }
    int num_classes() const { return model_->config().num_classes; }

private:
    std::unique_ptr<Model> model_;
    std::unique_ptr<StreamingSession> session_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Core routines for causal surgical phase segmentation";

    // --- building-block operations -----------------------------------------
    m.def("softmax", [](const Array2d& x) {
        return array_from_tensor(softmax(tensor_from_2d(x), 1));
    }, py::arg("x"), "Row-wise softmax of a [T, C] array.");

    m.def("causal_conv", [](const Array2d& x,
                            const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
                            const Array1d& b, int dilation) {
        if (w.ndim() != 3) throw DimensionError("kernel must be [k, d_in, d_out]");
        auto wt = Tensor::create({static_cast<int>(w.shape(0)), static_cast<int>(w.shape(1)),
                                  static_cast<int>(w.shape(2))}, false);
        std::copy(w.data(), w.data() + w.size(), wt->data.begin());
        return array_from_tensor(causal_dilated_conv1d(tensor_from_2d(x), wt, tensor_from_1d(b), dilation));
    }, py::arg("x"), py::arg("w"), py::arg("b"), py::arg("dilation") = 1,
       "Causal dilated 1-D convolution over a [T, d_in] sequence.");

    m.def("windowed_attention", [](const Array2d& q, const Array2d& k, const Array2d& v, int window) {
        return array_from_tensor(windowed_causal_attention(
            tensor_from_2d(q), tensor_from_2d(k), tensor_from_2d(v), window));
    }, py::arg("q"), py::arg("k"), py::arg("v"), py::arg("window"),
       "Causal windowed single-head attention.");

    // --- metrics -------------------------------------------------------------
    m.def("accuracy", &accuracy, py::arg("pred"), py::arg("gt"),
          "Frame accuracy in percent.");

    m.def("edit_score", [](const std::vector<int>& pred, const std::vector<int>& gt) {
        return edit_score(segments_from_frames(pred), segments_from_frames(gt));
    }, py::arg("pred"), py::arg("gt"), "Segmental edit score in percent.");

    m.def("f1_at_tau", [](const std::vector<int>& pred, const std::vector<int>& gt, double tau) {
        return f1_at_tau(segments_from_frames(pred), segments_from_frames(gt), tau);
    }, py::arg("pred"), py::arg("gt"), py::arg("tau"),
       "Segmental F1 at an IoU threshold of tau percent.");

    m.def("evaluate", [](const std::vector<int>& pred, const std::vector<int>& gt, int num_classes) {
        const VideoMetrics v = evaluate_video("video", pred, gt, num_classes);
        py::dict d;
        d["accuracy"] = v.accuracy;
        d["precision"] = v.precision;
        d["recall"] = v.recall;
        d["jaccard"] = v.jaccard;
        d["edit"] = v.edit;
        d["f1_25"] = v.f1_25;
        d["f1_50"] = v.f1_50;
        d["f1_75"] = v.f1_75;
        return d;
    }, py::arg("pred"), py::arg("gt"), py::arg("num_classes"),
       "Every segmentation metric of one video as a dict.");

    // --- synthetic data --------------------------------------------------------
    m.def("generate_labels", [](const std::string& preset, std::uint64_t seed, int target_length,
                                int num_classes) {
        return generate_video(preset_by_name(preset, num_classes), seed, target_length).labels;
    }, py::arg("preset"), py::arg("seed"), py::arg("target_length"), py::arg("num_classes") = 0,
       "Per-frame labels from a semi-Markov workflow preset.");

    m.def("synthesize_features", [](const std::vector<int>& labels, int dim, double noise_scale,
                                    int ambiguity_width, std::uint64_t seed) {
        const FeatureSequence f = synthesize_features(labels, dim, noise_scale, ambiguity_width, seed);
        py::array_t<double> out({f.num_frames, f.dim});
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
    }, py::arg("labels"), py::arg("dim"), py::arg("noise_scale") = 0.1,
       py::arg("ambiguity_width") = 10, py::arg("seed") = 0,
       "Anchor-plus-noise features for a label sequence.");

    // --- files -------------------------------------------------------------------
    m.def("load_features", [](const std::string& path) {
        const FeatureSequence f = load_features(path);
        py::array_t<double> out({f.num_frames, f.dim});
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
    }, py::arg("path"), "Feature file as a [T, D] array.");

    m.def("save_features", [](const std::string& path, const Array2d& values) {
        FeatureSequence f;
        f.num_frames = static_cast<int>(values.shape(0));
        f.dim = static_cast<int>(values.shape(1));
        f.values.assign(values.data(), values.data() + values.size());
        save_features(f, path);
    }, py::arg("path"), py::arg("values"), "Write a [T, D] array as a feature file.");

    m.def("load_labels", [](const std::string& path, int num_classes) {
        return load_labels(path, num_classes);
    }, py::arg("path"), py::arg("num_classes") = -1, "Labels file as a list of ints.");

    // --- inference ------------------------------------------------------------------
    py::class_<Inference>(m, "Inference",
                          "Checkpoint-backed predictor; push() streams causally, predict() "
                          "scores a whole sequence. Both agree frame for frame.")
        .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
        .def("push", &Inference::push, py::arg("frame"),
             "Feed one frame, get its phase label; earlier outputs never change.")
        .def("predict", &Inference::predict, py::arg("features"),
             "Labels for a whole [T, D] sequence at once.")
        .def("reset", &Inference::reset)
        .def_property_readonly("frames_seen", &Inference::frames_seen)
        .def_property_readonly("input_dim", &Inference::input_dim)
        .def_property_readonly("num_classes", &Inference::num_classes);

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
