// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kvpilot/cli.hpp"
#include "kvpilot/config.hpp"
#include "kvpilot/error.hpp"
#include "kvpilot/kv_tensor.hpp"
#include "kvpilot/latency.hpp"
#include "kvpilot/pareto.hpp"
#include "kvpilot/pipeline.hpp"
#include "kvpilot/policy.hpp"
#include "kvpilot/strategy.hpp"

namespace py = pybind11;
using namespace kvpilot;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

KVTensor to_tensor(const Array& values, std::optional<Array> importance) {
    if (values.ndim() != 4) throw DimensionError("values must be 4-D (layers, heads, tokens, channels)");
    const KVShape shape{static_cast<std::size_t>(values.shape(0)), static_cast<std::size_t>(values.shape(1)),
                        static_cast<std::size_t>(values.shape(2)), static_cast<std::size_t>(values.shape(3))};
    std::vector<double> v(values.data(), values.data() + values.size());
    std::vector<double> imp(shape.num_heads(), 0.0);
    if (importance) {
        if (static_cast<std::size_t>(importance->size()) != shape.num_heads())
            throw DimensionError("head_importance needs layers * heads entries");
        imp.assign(importance->data(), importance->data() + importance->size());
    }
    return KVTensor(shape, std::move(v), std::move(imp));
}

Array to_array(const KVTensor& x) {
    const auto& s = x.shape();
    Array out({s.layers, s.heads, s.tokens, s.channels});
    std::copy(x.values().begin(), x.values().end(), out.mutable_data());
    return out;
}

py::dict metrics_dict(const PipelineMetrics& m) {
    py::dict d;
    d["cr"] = m.cr;
    d["quality"] = m.quality;
    d["s_enc"] = m.s_enc;
    d["s_dec"] = m.s_dec;
    d["s_p"] = m.s_p;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "KV cache compression profiling and serving-policy core";

    auto base = py::register_exception<Error>(m, "KvpilotError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<DecodeError>(m, "DecodeError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<InfeasibleQualityError>(m, "InfeasibleQualityError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    m.def("canonical_strategy", [](const std::string& id) { return StrategyConfig::parse(id).id(); },
          py::arg("id"), "Parse a strategy id and print it back in canonical form.");
    m.def("analytic_cr", [](const std::string& id) { return analytic_cr(StrategyConfig::parse(id)); },
          py::arg("id"));

    m.def(
        "generate_kv",
        [](std::vector<std::size_t> shape, std::uint64_t seed) {
            if (shape.size() != 4) throw DimensionError("shape must have 4 entries");
            GeneratorParams g;
            g.shape = {shape[0], shape[1], shape[2], shape[3]};
            g.seed = seed;
            const auto x = generate_kv(g);
            Array imp(static_cast<py::ssize_t>(x.head_importance().size()));
            std::copy(x.head_importance().begin(), x.head_importance().end(), imp.mutable_data());
            return py::make_tuple(to_array(x), imp);
        },
        py::arg("shape"), py::arg("seed") = 0, "Synthetic KV tensor and its per-head importance.");

    m.def(
        "run_pipeline",
        [](const Array& values, const std::string& strategy, std::optional<Array> importance) {
            const auto x = to_tensor(values, importance);
            return metrics_dict(run_pipeline(x, StrategyConfig::parse(strategy)));
        },
        py::arg("values"), py::arg("strategy"), py::arg("head_importance") = py::none(),
        "Compress, decompress and score a tensor.");

    m.def(
        "roundtrip",
        [](const Array& values, const std::string& strategy, std::optional<Array> importance) {
            const auto s = StrategyConfig::parse(strategy);
            const auto c = compress(to_tensor(values, importance), s);
            return py::make_tuple(to_array(decompress(c.blob, s).tensor), c.metrics.cr);
        },
        py::arg("values"), py::arg("strategy"), py::arg("head_importance") = py::none(),
        "Reconstructed tensor and measured compression ratio.");

    py::class_<Profile>(m, "Profile")
        .def(py::init([](std::string id, double cr, double s, double q) { return Profile::make(std::move(id), cr, s, q); }),
             py::arg("id"), py::arg("cr"), py::arg("s"), py::arg("q"))
        .def_static("uncompressed", &Profile::uncompressed)
        .def_readwrite("id", &Profile::id)
        .def_readwrite("cr", &Profile::cr)
        .def_readwrite("s", &Profile::s)
        .def_readwrite("q", &Profile::q)
        .def_readwrite("s_enc", &Profile::s_enc)
        .def_readwrite("s_dec", &Profile::s_dec)
        .def_readwrite("workload", &Profile::workload)
        .def("validate", &Profile::validate)
        .def("__repr__", [](const Profile& p) {
            std::ostringstream o;
            o << "Profile(id='" << p.id << "', cr=" << p.cr << ", s=" << p.s << ", q=" << p.q << ")";
            return o.str();
        });

    m.def(
        "predict_latency",
        [](const Profile& p, double bandwidth, double volume, double t_model) {
            ServiceContext c;
            c.bandwidth = bandwidth;
            c.volume = volume;
            c.t_model = t_model;
            return predict_latency(p, c);
        },
        py::arg("profile"), py::arg("bandwidth"), py::arg("volume"), py::arg("t_model") = 0.0,
        "Seconds; bandwidth in bytes/s, volume in bytes.");
    m.def("benefit_threshold", &benefit_threshold, py::arg("profile"), "Bandwidth in bytes/s below which compressing pays off.");
    m.attr("BYTES_PER_GBPS") = kBytesPerGbps;

    m.def(
        "pareto_frontier",
        [](const std::vector<std::tuple<std::string, double, double, double>>& points) {
            std::vector<ParetoPoint> in;
            for (const auto& [id, acc, cr, lat] : points) in.push_back({id, acc, cr, lat});
            std::vector<std::tuple<std::string, double, double, double>> out;
            for (const auto& p : pareto_frontier(std::move(in))) out.emplace_back(p.id, p.acc, p.cr, p.lat);
            return out;
        },
        py::arg("points"), "Non-dominated (id, acc, cr, lat) tuples, sorted by id.");

    py::class_<PolicyTable>(m, "PolicyTable")
        .def(py::init([](const std::vector<Profile>& profiles, const std::vector<double>& floors, double b_min,
                         double b_max) { return build_policy_table(profiles, floors, b_min, b_max); }),
             py::arg("profiles"), py::arg("floors"), py::arg("b_min"), py::arg("b_max"))
        .def_property_readonly("profile_ids",
                               [](const PolicyTable& t) {
                                   std::vector<std::string> ids;
                                   for (const auto& p : t.profiles) ids.push_back(p.id);
                                   return ids;
                               })
        .def(
            "lookup",
            [](const PolicyTable& t, double bandwidth, double q_min, const std::string& workload) {
                ServiceContext c;
                c.bandwidth = bandwidth;
                c.q_min = q_min;
                c.workload = workload;
                const auto r = lookup(t, c);
                std::vector<std::string> ids;
                for (std::size_t i : r.candidates) ids.push_back(t.profiles[i].id);
                py::dict d;
                d["bucket"] = r.bucket;
                d["interval"] = r.interval;
                d["candidates"] = ids;
                return d;
            },
            py::arg("bandwidth"), py::arg("q_min") = 0.0, py::arg("workload") = "",
            "Model-optimal profile first, then its envelope neighbours.");

    m.def(
        "normalize_config",
        [](const std::string& text) { return serialize_config(parse_config(text)); },
        py::arg("text"), "Validated config with every default filled in.");
    m.def(
        "config_digest", [](const std::string& text) { return config_digest(parse_config(text)); },
        py::arg("text"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "kvpilot");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a kvpilot subcommand; returns (exit_code, stdout, stderr).");
}
