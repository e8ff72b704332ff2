#include <doctest.h>

#include <functional>

#include "ncc/error.hpp"
#include "ncc/registry.hpp"
#include "ncc/task.hpp"

using ncc::ErrorCode;
using ncc::Registry;
using ncc::RegistryKind;

namespace {

int make_one() { return 1; }
int make_two() { return 2; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ncc::Error& e) {
    return e.code();
  }
  FAIL("expected an ncc::Error");
  return ErrorCode::BadConfig;
}

}  // namespace

TEST_SUITE("registry") {
  TEST_CASE("resolve returns the registered factory") {
    Registry r;
    r.add(RegistryKind::task, "completion", &make_one);
    CHECK(r.resolve_as<int (*)()>(RegistryKind::task, "completion") == &make_one);
    CHECK(r.resolve_as<int (*)()>(RegistryKind::task, "completion")() == 1);
  }

  TEST_CASE("duplicate names are rejected") {
    Registry r;
    r.add(RegistryKind::task, "completion", &make_one);
    CHECK(code_of([&] { r.add(RegistryKind::task, "completion", &make_two); }) == ErrorCode::DuplicateName);
    CHECK(r.resolve_as<int (*)()>(RegistryKind::task, "completion") == &make_one);
  }

  TEST_CASE("kinds are independent namespaces") {
    Registry r;
    r.add(RegistryKind::task, "completion", &make_one);
    r.add(RegistryKind::model, "completion", &make_two);
    CHECK(r.resolve_as<int (*)()>(RegistryKind::model, "completion")() == 2);
  }

  TEST_CASE("unknown names list the candidates") {
    Registry r;
    r.add(RegistryKind::task, "completion", &make_one);
    r.add(RegistryKind::task, "retrieval", &make_two);
    try {
      r.resolve(RegistryKind::task, "nonexistent");
      FAIL("resolve should throw");
    } catch (const ncc::Error& e) {
      CHECK(e.code() == ErrorCode::UnknownName);
      const std::string msg = e.what();
      CHECK(msg.find("completion") != std::string::npos);
      CHECK(msg.find("retrieval") != std::string::npos);
    }
  }

  TEST_CASE("names must match [a-z0-9_]+") {
    Registry r;
    for (const char* bad : {"", "Bleu", "rouge-l", "a b", "é"}) {
      CHECK(code_of([&] { r.add(RegistryKind::metric, bad, &make_one); }) == ErrorCode::InvalidName);
    }
    r.add(RegistryKind::metric, "rouge_l2", &make_one);
    CHECK(r.contains(RegistryKind::metric, "rouge_l2"));
  }

  TEST_CASE("listing keeps registration order") {
    Registry r;
    r.add(RegistryKind::metric, "bleu", &make_one);
    r.add(RegistryKind::metric, "mrr", &make_two);
    r.add(RegistryKind::metric, "aaa", &make_two);
    CHECK(r.names(RegistryKind::metric) == std::vector<std::string>{"bleu", "mrr", "aaa"});
    CHECK(r.names(RegistryKind::task).empty());
  }

  TEST_CASE("built-ins install once") {
    ncc::install_builtins();
    ncc::install_builtins();
    auto& g = ncc::global_registry();
    CHECK(g.names(RegistryKind::task) == std::vector<std::string>{"completion", "summarization", "retrieval"});
    CHECK(g.names(RegistryKind::model) == std::vector<std::string>{"ngram", "seqrnn", "nbow", "seq2seq"});
    CHECK(g.names(RegistryKind::tokenizer) == std::vector<std::string>{"space", "bpe", "linearize"});
    CHECK(g.names(RegistryKind::metric) == std::vector<std::string>{"mrr", "bleu", "rouge_l", "perplexity"});
    CHECK(code_of([] { ncc::make_task("nonexistent"); }) == ErrorCode::UnknownName);
    CHECK(ncc::make_task("retrieval")->name() == "retrieval");
  }
}
