#pragma once

#include "noetic/flow/pipeline.hpp"

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

namespace noetic::gateway {

// Pipelines on disk under <root>/pipelines/<id>.json, in canonical form.
class PipelineStore {
 public:
  explicit PipelineStore(std::filesystem::path root);

  /// NOETIC_DATA_DIR, or ./noetic-data when unset.
  static std::filesystem::path default_root();

  struct Stored {
    std::string id;
    std::string hash;
    flow::PipelineDoc doc;
    bool changed = false;  // false when the stored text was already identical
  };

  /// Validates the graph before storing; throws PipelineError.
  Stored put(const std::string& id, const std::string& text);
  std::optional<Stored> get(const std::string& id) const;
  std::vector<std::string> ids() const;

  const std::filesystem::path& root() const { return root_; }

  static bool valid_id(const std::string& id);

 private:
  std::filesystem::path path_of(const std::string& id) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace noetic::gateway
