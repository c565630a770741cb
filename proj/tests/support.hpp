#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ctxbench/corpus.hpp"
#include "ctxbench/error.hpp"

namespace testing {

// Code of the ctxbench::Error thrown by fn; nullopt when it does not throw.
inline std::optional<ctxbench::ErrorCode> error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ctxbench::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(CTXBENCH_FIXTURES_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

// Fresh directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ctxbench-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline ctxbench::QARecord freeform(std::string id, std::string question, std::string context,
                                   std::vector<std::string> answers) {
  ctxbench::QARecord r;
  r.id = std::move(id);
  r.question = std::move(question);
  r.context = std::move(context);
  r.gold_answers = std::move(answers);
  r.task_kind = ctxbench::TaskKind::FreeForm;
  return r;
}

inline ctxbench::QARecord mcqa(std::string id, std::string question, std::string context,
                               std::vector<std::string> options, std::size_t correct) {
  ctxbench::QARecord r;
  r.id = std::move(id);
  r.question = std::move(question);
  r.context = std::move(context);
  r.gold_answers = {options.at(correct)};
  r.options = std::move(options);
  r.correct_option_index = correct;
  r.task_kind = ctxbench::TaskKind::MultipleChoice;
  return r;
}

// n records, each with its own context and a single-word answer in it.
inline ctxbench::Dataset synthetic_dataset(std::size_t n, std::string name = "synthetic") {
  static const char* kCities[] = {"Paris", "Lima", "Oslo", "Cairo", "Quito", "Hanoi", "Dakar", "Riga", "Sofia", "Bern"};
  ctxbench::Dataset d;
  d.name = std::move(name);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string answer = std::string(kCities[i % 10]);
    const std::string tag = std::to_string(i);
    d.records.push_back(freeform("r" + tag, "Where is landmark " + tag + "?",
                                 "Landmark " + tag + " stands in " + answer + " near the old market.", {answer}));
  }
  return d;
}

}  // namespace testing
