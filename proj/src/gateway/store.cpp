#include "noetic/gateway/store.hpp"

#include "noetic/io/recording.hpp"

#include <algorithm>
#include <cstdlib>

namespace noetic::gateway {

namespace fs = std::filesystem;

PipelineStore::PipelineStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "pipelines"); }

fs::path PipelineStore::default_root() {
  if (const char* env = std::getenv("NOETIC_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "noetic-data";
}

bool PipelineStore::valid_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
  }) && id.front() != '.';
}

fs::path PipelineStore::path_of(const std::string& id) const { return root_ / "pipelines" / (id + ".json"); }

PipelineStore::Stored PipelineStore::put(const std::string& id, const std::string& text) {
  if (!valid_id(id)) throw Error("invalid pipeline id '" + id + "'");
  auto doc = flow::parse_pipeline(text, id);
  flow::validate_graph(doc);
  const auto canonical = flow::save_pipeline(doc);
  std::lock_guard lock(mu_);
  const auto path = path_of(id);
  bool changed = true;
  if (fs::exists(path)) changed = io::read_file(path) != canonical;
  if (changed) io::write_file_atomic(path, canonical);
  return {id, flow::pipeline_hash(doc), std::move(doc), changed};
}

std::optional<PipelineStore::Stored> PipelineStore::get(const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  std::lock_guard lock(mu_);
  const auto path = path_of(id);
  if (!fs::exists(path)) return std::nullopt;
  auto doc = flow::parse_pipeline(io::read_file(path), path.string());
  return Stored{id, flow::pipeline_hash(doc), std::move(doc), false};
}

std::vector<std::string> PipelineStore::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root_ / "pipelines"))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace noetic::gateway
