#include "noetic/io/recording.hpp"

#include "bytes.hpp"
#include "noetic/error.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace noetic::io {

using nlohmann::json;

void RecordingHeader::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw FormatError("recording header: fs must be > 0");
  if (channels.empty()) throw FormatError("recording header: at least one channel required");
  if (unit != "microvolt") throw FormatError("recording header: unit must be 'microvolt'");
  try {
    validate_channels(channels);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("recording header: ") + e.what());
  }
}

json header_to_json(const RecordingHeader& h) {
  json channels = json::array();
  for (const auto& c : h.channels)
    channels.push_back({{"index", c.index}, {"name", c.name}, {"role", to_string(c.role)}});
  return json{{"magic", kMagic},           {"format_version", h.format_version},
              {"fs", h.fs},                {"channels", channels},
              {"unit", h.unit},            {"start_time", h.start_time},
              {"subject_tag", h.subject_tag}};
}

RecordingHeader header_from_json(const json& j) {
  if (!j.is_object() || j.value("magic", std::string{}) != kMagic) throw FormatError("bad magic: not a NEEG header");
  RecordingHeader h;
  try {
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != kFormatVersion)
      throw FormatError("unsupported format version " + std::to_string(h.format_version));
    h.fs = j.at("fs").get<double>();
    h.unit = j.at("unit").get<std::string>();
    h.start_time = j.at("start_time").get<double>();
    h.subject_tag = j.value("subject_tag", std::string{});
    for (const auto& c : j.at("channels"))
      h.channels.push_back({c.at("name").get<std::string>(), c.at("index").get<std::size_t>(),
                            channel_role_from_string(c.at("role").get<std::string>())});
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed recording header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed recording header: ") + e.what());
  }
  h.validate();
  return h;
}

RecordingHeader header_of(const SignalBlock& block, std::string subject_tag) {
  RecordingHeader h;
  h.fs = block.fs;
  h.channels = block.channels;
  h.start_time = block.t0;
  h.subject_tag = std::move(subject_tag);
  return h;
}

json marker_to_json(const Marker& m) {
  json j{{"t", m.t}, {"label", m.label}};
  j["class_id"] = m.class_id ? json(*m.class_id) : json(nullptr);
  return j;
}

Marker marker_from_json(const json& j) {
  Marker m;
  m.t = j.at("t").get<double>();
  m.label = j.value("label", std::string{});
  if (j.contains("class_id") && !j.at("class_id").is_null()) m.class_id = j.at("class_id").get<int>();
  return m;
}

std::string markers_to_jsonl(const std::vector<Marker>& markers) {
  std::string out;
  for (const auto& m : markers) {
    out += marker_to_json(m).dump();
    out += '\n';
  }
  return out;
}

std::vector<Marker> markers_from_jsonl(std::string_view text) {
  std::vector<Marker> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(marker_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("bad marker line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string encode_recording(const Recording& rec) {
  rec.block.validate();
  validate_markers(rec.markers);
  RecordingHeader h = header_of(rec.block, rec.subject_tag);
  json hj = header_to_json(h);
  hj["n_samples"] = rec.block.sample_count();

  std::string out = hj.dump();
  out.push_back('\n');
  out.push_back('\0');
  const auto n_ch = rec.block.samples.rows();
  const auto n_t = rec.block.samples.cols();
  out.reserve(out.size() + static_cast<std::size_t>(n_ch * n_t) * 4 + rec.markers.size() * 48);
  for (Eigen::Index t = 0; t < n_t; ++t)
    for (Eigen::Index c = 0; c < n_ch; ++c) detail::put_f32(out, static_cast<float>(rec.block.samples(c, t)));
  out += markers_to_jsonl(rec.markers);
  return out;
}

Recording decode_recording(std::string_view bytes) {
  const std::size_t sentinel = bytes.find(std::string_view("\n\0", 2));
  if (bytes.size() < 4 || bytes.substr(0, 1) != "{" || sentinel == std::string_view::npos)
    throw FormatError("bad magic: missing NEEG JSON header");
  json hj;
  try {
    hj = json::parse(bytes.substr(0, sentinel));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad magic: header is not JSON: ") + e.what());
  }
  RecordingHeader h = header_from_json(hj);
  std::uint64_t n_samples = 0;
  try {
    n_samples = hj.at("n_samples").get<std::uint64_t>();
  } catch (const json::exception&) {
    throw FormatError("recording header lacks n_samples");
  }
  if (n_samples == 0) throw FormatError("recording header: n_samples must be >= 1");

  const std::size_t data_start = sentinel + 2;
  const std::uint64_t n_ch = h.channels.size();
  const std::uint64_t need = n_ch * n_samples * 4;
  if (bytes.size() - data_start < need) {
    const std::uint64_t have = bytes.size() - data_start;
    throw CorruptionError("truncated data section (" + std::to_string(have) + " of " + std::to_string(need) +
                              " bytes present)",
                          data_start + have - have % (4 * n_ch));
  }

  Recording rec;
  rec.subject_tag = h.subject_tag;
  rec.block.fs = h.fs;
  rec.block.t0 = h.start_time;
  rec.block.channels = h.channels;
  rec.block.samples.resize(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(n_samples));
  std::size_t pos = data_start;
  for (std::uint64_t t = 0; t < n_samples; ++t) {
    for (std::uint64_t c = 0; c < n_ch; ++c, pos += 4) {
      const float v = detail::get_f32(bytes, pos);
      if (!std::isfinite(v)) throw CorruptionError("non-finite sample", pos);
      rec.block.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = v;
    }
  }
  rec.markers = markers_from_jsonl(bytes.substr(pos));
  return rec;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_recording(const Recording& rec, const std::filesystem::path& path) {
  write_file_atomic(path, encode_recording(rec));
}

Recording read_recording(const std::filesystem::path& path) { return decode_recording(read_file(path)); }

Recording read_csv(const std::filesystem::path& path, double fs) {
  if (!(fs > 0.0)) throw FormatError("csv import needs --fs > 0");
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      std::size_t b = cell.find_first_not_of(' ');
      cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b));
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv '" + path.string() + "' is empty");
  const auto names = split(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    auto cells = split(line);
    if (cells.size() != names.size())
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                        " values, got " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || *end != '\0' || !std::isfinite(row[i]))
        throw FormatError("csv line " + std::to_string(line_no) + ": bad number '" + cells[i] + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("csv '" + path.string() + "' has no samples");
  Recording rec;
  rec.block.fs = fs;
  for (std::size_t i = 0; i < names.size(); ++i) rec.block.channels.push_back({names[i], i, ChannelRole::eeg});
  rec.block.samples.resize(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < names.size(); ++c)
      rec.block.samples(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = rows[t][c];
  rec.block.validate();
  return rec;
}

}  // namespace noetic::io
