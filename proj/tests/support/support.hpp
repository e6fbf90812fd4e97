#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "funcnav/domain.hpp"
#include "funcnav/llm_gateway.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return FUNCNAV_SOURCE_DIR; }
inline std::filesystem::path fixture_apps() { return source_dir() / "fixtures" / "apps"; }
inline std::filesystem::path fixture_file(const std::string& rel) { return source_dir() / "fixtures" / rel; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("funcnav-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
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

// Provider backed by a function; remembers every request it saw.
class LambdaProvider final : public funcnav::CompletionProvider {
 public:
  using Fn = std::function<std::string(const funcnav::CompletionRequest&, int call)>;
  explicit LambdaProvider(Fn fn) : fn_(std::move(fn)) {}

  std::string complete(const funcnav::CompletionRequest& request) override {
    int call = 0;
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
      call = static_cast<int>(requests_.size()) - 1;
    }
    return fn_(request, call);
  }

  std::vector<funcnav::CompletionRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Fn fn_;
  mutable std::mutex mutex_;
  std::vector<funcnav::CompletionRequest> requests_;
};

inline std::string user_text(const funcnav::CompletionRequest& request) {
  std::string out;
  for (const auto& part : request.user_parts) {
    if (const auto* text = std::get_if<std::string>(&part)) out += *text;
  }
  return out;
}

inline funcnav::ActionableElement element(const std::string& xpath, const std::string& tag, const std::string& text,
                                          funcnav::BBox box = {0, 0, 10, 10}) {
  funcnav::ActionableElement e;
  e.xpath = xpath;
  e.tag_name = tag;
  e.inner_text = text;
  e.outer_html = "<" + tag + ">" + text + "</" + tag + ">";
  e.cleaned_html = e.outer_html;
  e.bbox = box;
  e.accepts_text = tag == "input" || tag == "textarea";
  return e;
}

// Random lowercase sentence over a small vocabulary, so that overlaps and
// exact ties both occur often.
inline std::string random_sentence(std::mt19937& rng, int min_words = 1, int max_words = 6) {
  static const std::vector<std::string> vocab = {
      "search", "blazer", "men",  "women", "black", "size",    "cart",  "wishlist", "add",     "filter",
      "open",   "menu",   "home", "login", "sign",  "account", "price", "sort",     "product", "next"};
  std::uniform_int_distribution<int> count(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string out;
  for (int i = count(rng); i > 0; --i) {
    if (!out.empty()) out += ' ';
    out += vocab[pick(rng)];
  }
  return out;
}

}  // namespace testing_support
