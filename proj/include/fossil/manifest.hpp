#pragma once

#include <ctime>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "fossil/common.hpp"
#include "fossil/textio.hpp"
#include "fossil/version.hpp"

namespace fossil {

inline std::string content_digest(const std::string& content) {
  return hex64(fnv1a64(content));
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Tracks every file a subcommand reads or writes, refuses to clobber
// existing outputs unless forced, and emits the run manifest. The manifest
// is the one artifact allowed to differ between identical reruns (it holds
// the timestamp), so it is always rewritten and never listed as an output.
class Workspace {
 public:
  Workspace(std::filesystem::path out_dir, bool force)
      : out_(std::move(out_dir)), force_(force) {}

  const std::filesystem::path& out_dir() const { return out_; }

  std::filesystem::path path(const std::string& rel) const {
    return out_ / rel;
  }

  std::string read_input(const std::filesystem::path& p) {
    const std::string content = read_text_file(p);
    inputs_[p.string()] = content_digest(content);
    return content;
  }

  // Overwrite guard: call with every planned output before writing anything
  // so a refusal leaves the directory untouched.
  void require_fresh(const std::vector<std::string>& rel_names) const {
    if (force_) return;
    std::vector<std::string> existing;
    for (const auto& rel : rel_names)
      if (std::filesystem::exists(path(rel)))
        existing.push_back(path(rel).string());
    if (!existing.empty())
      throw RefusalError(
          "refusing to overwrite existing output (pass --force): " +
          join(existing, ", "));
  }

  void write_output(const std::string& rel, const std::string& content) {
    write_text_file(path(rel), content);
    outputs_[path(rel).string()] = content_digest(content);
  }

  void write_manifest(const std::string& subcommand,
                      const std::string& config_hash) const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash;
    j["tool_version"] = kVersion;
    j["timestamp"] = utc_timestamp();
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    write_text_file(path("manifest_" + subcommand + ".json"), j.dump(2) + "\n");
  }

  const std::map<std::string, std::string>& outputs() const { return outputs_; }

 private:
  std::filesystem::path out_;
  bool force_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

}  // namespace fossil
