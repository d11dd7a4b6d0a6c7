#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cleer/ablation.hpp"
#include "cleer/augment.hpp"
#include "cleer/error.hpp"
#include "cleer/gradcheck_suite.hpp"
#include "cleer/losses.hpp"
#include "cleer/preprocess.hpp"
#include "cleer/segments.hpp"
#include "cleer/synthetic.hpp"
#include "cleer/trainer.hpp"

namespace py = pybind11;
using namespace cleer;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const F64& a, bool requires_grad) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor::from(shape, std::vector<double>(a.data(), a.data() + a.size()), requires_grad);
}

F64 array_from(std::span<const double> v, const std::vector<py::ssize_t>& shape) {
  F64 out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<py::ssize_t> shape_of(const F64& a) { return {a.shape(), a.shape() + a.ndim()}; }

// Segments cross the boundary as (data [N, T, C] float32, labels [N]).
py::dict segments_to_py(const SegmentSet& s) {
  F32 data({s.n, s.t, s.c});
  std::copy(s.data.begin(), s.data.end(), data.mutable_data());
  py::dict d;
  d["data"] = data;
  d["labels"] = py::array_t<int>(static_cast<py::ssize_t>(s.labels.size()), s.labels.data());
  d["channel_names"] = s.channel_names;
  d["sample_rate_hz"] = s.sample_rate_hz;
  return d;
}

SegmentSet segments_from_py(const F32& data, const std::vector<int>& labels, double fs,
                            std::vector<std::string> names) {
  if (data.ndim() != 3) throw DimensionError("data must be [N, T, C]");
  SegmentSet s;
  s.n = static_cast<std::size_t>(data.shape(0));
  s.t = static_cast<std::size_t>(data.shape(1));
  s.c = static_cast<std::size_t>(data.shape(2));
  s.data.assign(data.data(), data.data() + data.size());
  s.labels = labels;
  s.sample_rate_hz = fs;
  s.window_seconds = static_cast<double>(s.t) / fs;
  s.overlap_seconds = 0.0;
  s.channel_names = names.empty() ? default_channel_names(s.c) : std::move(names);
  s.validate();
  return s;
}

using LossFn = Tensor (*)(const Tensor&, const Tensor&, const ContrastOptions&);

// Loss value plus gradients with respect to both inputs.
py::tuple loss_with_grad(LossFn fn, const F64& z, const F64& zp, bool symmetrize) {
  Tensor a = tensor_from(z, true), b = tensor_from(zp, true);
  Tensor loss = fn(a, b, ContrastOptions{symmetrize});
  loss.backward();
  return py::make_tuple(loss.item(), array_from(a.grad(), shape_of(z)), array_from(b.grad(), shape_of(zp)));
}

std::vector<double> filter_rows(const F64& x, const std::function<std::vector<double>(std::span<const double>,
                                                                                     std::size_t)>& fn) {
  if (x.ndim() != 2) throw DimensionError("signal must be [channels, samples]");
  return fn({x.data(), static_cast<std::size_t>(x.size())}, static_cast<std::size_t>(x.shape(0)));
}

}  // namespace

PYBIND11_MODULE(_cleer, m) {
  m.doc() = "Native core of the cleer package";

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<StratificationError>(m, "StratificationError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  // losses
  m.def("tcl_loss", [](const F64& z, const F64& zp, bool sym) { return loss_with_grad(tcl_loss, z, zp, sym); },
        py::arg("z"), py::arg("z_prime"), py::arg("symmetrize") = false,
        "Temporal contrastive loss over [B, K, D] views; returns (loss, dz, dz_prime).");
  m.def("icl_loss", [](const F64& z, const F64& zp, bool sym) { return loss_with_grad(icl_loss, z, zp, sym); },
        py::arg("z"), py::arg("z_prime"), py::arg("symmetrize") = false);
  m.def("dcl_loss", [](const F64& z, const F64& zp, bool sym) { return loss_with_grad(dcl_loss, z, zp, sym); },
        py::arg("z"), py::arg("z_prime"), py::arg("symmetrize") = false);
  m.def(
      "hcl_loss",
      [](const F64& z, const F64& zp, bool sym) {
        Tensor a = tensor_from(z, true), b = tensor_from(zp, true);
        auto r = hcl_loss(a, b, ContrastOptions{sym});
        r.loss.backward();
        py::list levels;
        for (const auto& l : r.breakdown.per_level)
          levels.append(py::dict(py::arg("level") = l.level, py::arg("length") = l.length, py::arg("tcl") = l.tcl,
                                 py::arg("icl") = l.icl, py::arg("dcl") = l.dcl));
        return py::make_tuple(r.loss.item(), array_from(a.grad(), shape_of(z)), array_from(b.grad(), shape_of(zp)),
                              levels);
      },
      py::arg("z"), py::arg("z_prime"), py::arg("symmetrize") = false,
      "Hierarchical loss; returns (loss, dz, dz_prime, per_level).");
  m.def("hierarchy_levels", &hierarchy_levels, py::arg("k"));

  // augmentation
  m.def(
      "sample_crop_pairs",
      [](std::size_t t, std::size_t count, std::uint64_t seed) {
        Rng rng(seed);
        py::array_t<std::int64_t> out({static_cast<py::ssize_t>(count), py::ssize_t{4}});
        auto* p = out.mutable_data();
        for (std::size_t i = 0; i < count; ++i) {
          const auto c = sample_crop_pair(t, rng);
          p[4 * i] = static_cast<std::int64_t>(c.a1);
          p[4 * i + 1] = static_cast<std::int64_t>(c.b1);
          p[4 * i + 2] = static_cast<std::int64_t>(c.a2);
          p[4 * i + 3] = static_cast<std::int64_t>(c.b2);
        }
        return out;
      },
      py::arg("t"), py::arg("count"), py::arg("seed") = 0, "Rows of 1-based (a1, b1, a2, b2).");
  m.def(
      "sample_masks",
      [](std::size_t length, std::size_t count, double p, std::uint64_t seed) {
        Rng rng(seed);
        py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(count), static_cast<py::ssize_t>(length)});
        auto* dst = out.mutable_data();
        for (std::size_t i = 0; i < count; ++i) {
          const auto mask = sample_mask(length, p, rng);
          std::copy(mask.bits.begin(), mask.bits.end(), dst + i * length);
        }
        return out;
      },
      py::arg("length"), py::arg("count"), py::arg("p") = 0.5, py::arg("seed") = 0, "1 = keep, 0 = masked.");

  // signal chain on [channels, samples]
  m.def(
      "bandpass",
      [](const F64& x, double low, double high, double fs, int order) {
        const auto spec = FilterSpec::bandpass(low, high, fs, order);
        return array_from(filter_rows(x, [&](auto s, auto c) { return bandpass(s, c, spec); }), shape_of(x));
      },
      py::arg("x"), py::arg("low_hz") = 1.0, py::arg("high_hz") = 49.0, py::arg("fs") = 200.0, py::arg("order") = 4);
  m.def(
      "notch",
      [](const F64& x, double center, double fs, double q) {
        const auto spec = FilterSpec::notch(center, fs, q);
        return array_from(filter_rows(x, [&](auto s, auto c) { return notch(s, c, spec); }), shape_of(x));
      },
      py::arg("x"), py::arg("center_hz") = 60.0, py::arg("fs") = 200.0, py::arg("quality") = 30.0);
  m.def(
      "average_reference",
      [](const F64& x) {
        return array_from(filter_rows(x, [](auto s, auto c) { return average_reference(s, c); }), shape_of(x));
      },
      py::arg("x"));
  m.def("window_count", &window_count, py::arg("samples"), py::arg("window"), py::arg("stride"));

  // data
  m.def(
      "make_synthetic_dataset",
      [](std::size_t n_per_class, std::size_t t, std::size_t c, std::vector<std::size_t> channels, double snr_db,
         std::uint64_t seed) {
        SyntheticSpec s;
        s.n_per_class = n_per_class;
        s.t = t;
        s.c = c;
        s.informative_channels = std::move(channels);
        s.snr_db = snr_db;
        s.seed = seed;
        return segments_to_py(make_synthetic_dataset(s));
      },
      py::arg("n_per_class") = 200, py::arg("t") = 128, py::arg("c") = 8,
      py::arg("informative_channels") = std::vector<std::size_t>{2, 5}, py::arg("snr_db") = 0.0, py::arg("seed") = 7);
  m.def("load_segments", [](const std::filesystem::path& p) { return segments_to_py(load_segments(p)); },
        py::arg("path"));
  m.def(
      "save_segments",
      [](const std::filesystem::path& p, const F32& data, const std::vector<int>& labels, double fs,
         std::vector<std::string> names) { save_segments(segments_from_py(data, labels, fs, std::move(names)), p); },
      py::arg("path"), py::arg("data"), py::arg("labels"), py::arg("sample_rate_hz") = 200.0,
      py::arg("channel_names") = std::vector<std::string>{});

  // training; configs and results travel as JSON text
  m.def(
      "run_skcv",
      [](const F32& data, const std::vector<int>& labels, const std::string& config_json) {
        const auto set = segments_from_py(data, labels, 200.0, {});
        const auto cfg = train_config_from_json(nlohmann::json::parse(config_json));
        SkcvResult r;
        {
          py::gil_scoped_release release;
          r = run_skcv(set, cfg);
        }
        return to_json(r).dump();
      },
      py::arg("data"), py::arg("labels"), py::arg("config_json") = "{}");
  m.def("default_train_config", [] { return to_json(TrainConfig{}).dump(); });
  m.def(
      "per_channel_eval",
      [](const F32& data, const std::vector<int>& labels, const std::string& config_json, const std::string& method) {
        const auto set = segments_from_py(data, labels, 200.0, {});
        const auto cfg = train_config_from_json(nlohmann::json::parse(config_json));
        ChannelReport report;
        {
          py::gil_scoped_release release;
          report = per_channel_eval(set, cfg, parse_ablation_method(method));
        }
        return report.to_csv(true);
      },
      py::arg("data"), py::arg("labels"), py::arg("config_json") = "{}", py::arg("method") = "retrain",
      "Ranked per-channel accuracy as CSV text.");

  m.def(
      "gradcheck",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& c : run_gradcheck_suite(seed))
          out.append(py::make_tuple(c.name, c.report.passed, c.report.max_rel_error));
        return out;
      },
      py::arg("seed") = 0, "List of (kernel, passed, max_rel_error).");
}
