#include "qlog/bundle.hpp"
#include "qlog/casestudies.hpp"
#include "qlog/hoare.hpp"
#include "qlog/logic.hpp"
#include "qlog/measures.hpp"
#include "qlog/suite.hpp"
#include "qlog/typecheck.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using nlohmann::json;

namespace {

// Reports cross the boundary as JSON text and are decoded on the Python side.
std::string dump(const json& j) { return j.dump(); }

std::string check_file(const std::string& path) { return dump(qlog::checkQlogFile(path).to_json()); }

std::string prove(const std::string& path, bool semantic, std::uint64_t seed) {
  auto b = qlog::load_proof_bundle(path);
  return dump(qlog::checkProofBundle(b, semantic, {}, seed).to_json());
}

std::string typecheck(const std::string& term, const std::string& type) {
  auto r = qlog::check({}, qlog::parse_term(term), type.empty() ? nullptr : qlog::parse_type(type));
  json j{{"ok", r.ok}};
  if (r.ok) j["type"] = qlog::print_type(r.type);
  else j["error"] = json::parse(r.error->json());
  return dump(j);
}

std::string eval(const std::string& term, const std::string& type, int fuel) {
  qlog::EvalOptions opt;
  opt.fuel = fuel;
  auto t = qlog::parse_term(term);
  return dump(qlog::approx_to_json(qlog::eval_closed(t, type.empty() ? nullptr : qlog::parse_type(type), opt)));
}

double kantorovich(const std::vector<double>& mu, const std::vector<double>& nu,
                   const std::vector<std::vector<double>>& cost) {
  return qlog::transport::solve<double>(mu, nu, cost).cost;
}

std::string run_criterion(int id, const std::string& corpus) {
  qlog::SuiteOptions opt;
  opt.corpus_dir = corpus;
  return dump(qlog::runCriterion(id, opt).to_json());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.def("check_file", &check_file, py::arg("path"));
  m.def("prove", &prove, py::arg("path"), py::arg("semantic") = true, py::arg("seed") = 1);
  m.def("typecheck", &typecheck, py::arg("term"), py::arg("type") = "");
  m.def("eval", &eval, py::arg("term"), py::arg("type") = "", py::arg("fuel") = 30);
  m.def("kantorovich", &kantorovich, py::arg("mu"), py::arg("nu"), py::arg("cost"));
  m.def("markov", [] { return dump(qlog::markovCheck().to_json()); });
  m.def("coin", [](const std::string& c, const std::string& eps) {
    return dump(qlog::coinCheck(qlog::Grade::parse(c), qlog::Grade::parse(eps)).to_json());
  }, py::arg("c"), py::arg("eps"));
  m.def("hypercube", [](int n) { return dump(qlog::hypercubeContractionCheck(n).to_json()); }, py::arg("n"));
  m.def("prp", [](int L, int N, int q) { return dump(qlog::hoare::prpPrfCheck(L, N, q).to_json()); },
        py::arg("L"), py::arg("N"), py::arg("max_q"));
  m.def("run_criterion", &run_criterion, py::arg("id"), py::arg("corpus"));
  m.attr("criteria") = qlog::kCriteria;
}
