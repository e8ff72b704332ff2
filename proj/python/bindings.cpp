#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ncc/corpus.hpp"
#include "ncc/error.hpp"
#include "ncc/metrics.hpp"
#include "ncc/ngram.hpp"
#include "ncc/registry.hpp"
#include "ncc/synparse.hpp"
#include "ncc/task.hpp"

namespace py = pybind11;
using namespace ncc;

namespace {

std::vector<std::pair<std::string, std::string>> train_merges(const std::map<std::string, std::int64_t>& counts,
                                                             int num_merges, std::int64_t min_pair_freq) {
  return bpe_train(TokenCounts(counts.begin(), counts.end()), num_merges, min_pair_freq).merges;
}

std::vector<std::string> encode_word(const std::string& word,
                                     const std::vector<std::pair<std::string, std::string>>& merges) {
  MergeTable t;
  t.merges = merges;
  return bpe_encode(word, t);
}

py::list lex_tokens(const std::string& source) {
  py::list out;
  for (const auto& t : syn::lex(source)) {
    out.append(py::make_tuple(std::string(syn::to_string(t.kind)), t.text, t.line, t.col));
  }
  return out;
}

std::vector<std::string> registered(const std::string& kind) {
  install_builtins();
  for (auto k : {RegistryKind::task, RegistryKind::model, RegistryKind::tokenizer, RegistryKind::metric}) {
    if (to_string(k) == kind) return global_registry().names(k);
  }
  throw Error(ErrorCode::InvalidArgument, "kind must be task, model, tokenizer or metric");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the ncc toolkit core";

  static py::exception<Error> error(m, "NccError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("registered", &registered, py::arg("kind"), "Names registered under a kind.");

  m.def("space_tokenize", [](const std::string& s) { return space_tokenize(s); });
  m.def("bpe_train", &train_merges, py::arg("word_counts"), py::arg("num_merges"), py::arg("min_pair_freq") = 2);
  m.def("bpe_encode", &encode_word, py::arg("word"), py::arg("merges"));

  m.def("lex", &lex_tokens, "(kind, text, line, col) tuples");
  m.def("linearize", [](const std::string& s) { return syn::linearize_source(s); });

  m.def("mrr", [](const std::vector<std::optional<std::size_t>>& ranks, std::size_t cutoff) { return mrr(ranks, cutoff); },
        py::arg("ranks"), py::arg("cutoff") = default_mrr_cutoff);
  m.def(
      "bleu",
      [](const std::vector<TokenSeq>& h, const std::vector<TokenSeq>& r, int max_n, bool smooth) {
        return bleu(h, r, BleuOptions{max_n, smooth});
      },
      py::arg("hypotheses"), py::arg("references"), py::arg("max_n") = 4, py::arg("smooth") = false);
  m.def(
      "rouge_l",
      [](const TokenSeq& h, const TokenSeq& r) {
        const auto s = rouge_l(h, r);
        return py::make_tuple(s.precision, s.recall, s.f);
      },
      py::arg("hypothesis"), py::arg("reference"));

  py::class_<NgramModel>(m, "NgramModel")
      .def_static("train", &NgramModel::train, py::arg("sequences"), py::arg("order"), py::arg("lam"),
                  py::arg("vocab_size"))
      .def("next_distribution",
           [](const NgramModel& self, const std::vector<int>& prefix) { return self.next_distribution(prefix); })
      .def("count", [](const NgramModel& self, const std::vector<int>& ctx, int w) { return self.count(ctx, w); })
      .def_property_readonly("order", &NgramModel::order);

  py::class_<Predictor>(m, "Predictor")
      .def_property_readonly("task", [](const Predictor& p) { return std::string(p.task()); })
      .def_property_readonly("model_name", [](const Predictor& p) { return std::string(p.model_name()); })
      .def(
          "complete",
          [](const Predictor& p, const std::string& text, std::size_t k) {
            std::vector<std::pair<std::string, double>> out;
            for (const auto& c : p.complete_text(text, k)) out.emplace_back(c.token, c.prob);
            return out;
          },
          py::arg("text"), py::arg("k") = 5)
      .def("summarize", [](const Predictor& p, const std::string& code) { return p.summarize(code).summary; })
      .def(
          "search",
          [](const Predictor& p, const std::string& query, std::size_t k) {
            std::vector<std::tuple<std::size_t, double, std::string>> out;
            for (const auto& h : p.search(query, k)) out.emplace_back(h.id, h.score, h.path);
            return out;
          },
          py::arg("query"), py::arg("k") = 5);

  m.def("load_predictor", [](const std::filesystem::path& dir) {
    install_builtins();
    return load_predictor(dir);
  });
}
