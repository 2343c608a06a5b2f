#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "coopsteer/game.hpp"
#include "coopsteer/text.hpp"

namespace test_support {

inline std::filesystem::path test_dir() { return COOPSTEER_TEST_DIR; }
inline std::filesystem::path golden(const std::string& name) { return test_dir() / "golden" / name; }
inline std::filesystem::path fixture(const std::string& name) { return test_dir() / "fixtures" / name; }

// Removed with its contents on scope exit.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "coopsteer-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Replays a fixed list of actions, ignoring history.
class FixedMoves final : public coopsteer::MatchAgent {
 public:
  explicit FixedMoves(std::vector<coopsteer::Action> moves) : moves_(std::move(moves)) {}
  void begin_match(std::uint64_t) override { next_ = 0; }
  coopsteer::AgentMove decide(std::span<const coopsteer::RoundOutcome>, int) override {
    coopsteer::AgentMove m;
    m.action = moves_[next_++ % moves_.size()];
    return m;
  }

 private:
  std::vector<coopsteer::Action> moves_;
  std::size_t next_ = 0;
};

}  // namespace test_support
