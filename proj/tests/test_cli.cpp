#include "doctest.h"
#include "support.hpp"

#include "noetic/flow/pipeline.hpp"
#include "noetic/io/recording.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <sys/wait.h>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run noetic_cli(const std::string& args, const fs::path& cwd) {
  const auto out = cwd / "stdout.txt", err = cwd / "stderr.txt";
  const std::string cmd = "cd '" + cwd.string() + "' && '" NOETIC_CLI "' " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = noetic::io::read_file(out);
  r.err = noetic::io::read_file(err);
  return r;
}

}  // namespace

TEST_CASE("cli: nodes lists every registered kind") {
  const auto dir = testsupport::scratch_dir("cli-nodes");
  const auto r = noetic_cli("nodes", dir);
  CHECK(r.code == 0);
  for (const auto& k : noetic::flow::node_catalog()) CHECK(r.out.find(k.kind) != std::string::npos);
  const auto j = noetic_cli("nodes --json", dir);
  CHECK(json::parse(j.out).size() == noetic::flow::node_catalog().size());
}

TEST_CASE("cli: usage errors and missing files exit 1") {
  const auto dir = testsupport::scratch_dir("cli-errors");
  const auto flag = noetic_cli("nodes --frobnicate", dir);
  CHECK(flag.code == 1);
  CHECK(flag.err.find("frobnicate") != std::string::npos);
  CHECK(noetic_cli("", dir).code == 1);
  CHECK(noetic_cli("run", dir).code == 1);  // --pipeline is required

  const auto missing = noetic_cli("run --pipeline /nonexistent/doc.json", dir);
  CHECK(missing.code == 1);
  CHECK(missing.err.find("/nonexistent/doc.json") != std::string::npos);
  const auto rec = noetic_cli("select --input absent.neeg", dir);
  CHECK(rec.code == 1);
  CHECK(rec.err.find("absent.neeg") != std::string::npos);

  noetic::io::write_file_atomic(dir / "broken.json", "{\"version\": 1, \"nodes\": [");
  CHECK(noetic_cli("run --pipeline broken.json", dir).code == 1);
  CHECK(noetic_cli("run --help", dir).code == 0);
}

TEST_CASE("cli: synth then run the raw/filtered viewer") {
  const auto dir = testsupport::scratch_dir("cli-run");
  const auto s = noetic_cli("synth --out rec.neeg --seed 5 --duration 4 --channels 4", dir);
  REQUIRE(s.code == 0);
  const auto meta = json::parse(s.out);
  CHECK(meta["samples"] == 1024);
  CHECK(meta["sha256"] == noetic::flow::sha256_hex(noetic::io::read_file(dir / "rec.neeg")));

  const json doc{
      {"version", 1},
      {"nodes",
       {{{"id", "replay"}, {"kind", "source.replay"}, {"params", {{"path", "ignored.neeg"}}}},
        {{"id", "select"}, {"kind", "select.channels"}, {"params", {{"channels", {"ch0", "ch1"}}}}},
        {{"id", "butter"}, {"kind", "filt.butter"}, {"params", {{"cutoffs", {1.0, 40.0}}}}},
        {{"id", "plot_raw"}, {"kind", "sink.plot"}, {"params", {{"kind", "raw"}}}},
        {{"id", "plot_filtered"}, {"kind", "sink.plot"}, {"params", {{"kind", "filtered"}}}},
        {{"id", "copy"}, {"kind", "sink.file"}, {"params", {{"path", "files/copy.neeg"}}}}}},
      {"edges",
       {{{"from", "replay"}, {"from_port", "out"}, {"to", "select"}, {"to_port", "in"}},
        {{"from", "select"}, {"from_port", "out"}, {"to", "butter"}, {"to_port", "in"}},
        {{"from", "select"}, {"from_port", "out"}, {"to", "plot_raw"}, {"to_port", "in"}},
        {{"from", "butter"}, {"from_port", "out"}, {"to", "plot_filtered"}, {"to_port", "in"}},
        {{"from", "butter"}, {"from_port", "out"}, {"to", "copy"}, {"to_port", "in"}}}}};
  noetic::io::write_file_atomic(dir / "viewer.json", doc.dump());
  const auto r = noetic_cli("run --pipeline viewer.json --input rec.neeg --out out", dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "out" / "files" / "copy.neeg"));
  CHECK(fs::exists(dir / "out" / "result.json"));
  const auto plots = noetic::io::read_file(dir / "out" / "plots.jsonl");
  CHECK(plots.find("\"node\":\"plot_raw\"") != std::string::npos);
  CHECK(plots.find("\"node\":\"plot_filtered\"") != std::string::npos);
  for (auto& p : fs::directory_iterator(dir / "out" / "files")) CHECK(p.path().extension() != ".tmp");

  const auto online = noetic_cli("run --pipeline viewer.json --input rec.neeg --out online --online --chunk 7", dir);
  REQUIRE(online.code == 0);
  CHECK(noetic::io::read_file(dir / "online" / "files" / "copy.neeg") ==
        noetic::io::read_file(dir / "out" / "files" / "copy.neeg"));
}

TEST_CASE("cli: select, train, sim and filter-design") {
  const auto dir = testsupport::scratch_dir("cli-tools");
  noetic::io::write_recording(noetic::io::synth_recording(testsupport::ssvep_spec(20, 8, 3.0)), dir / "ssvep.neeg");

  const auto sel = noetic_cli("select --input ssvep.neeg --method correlation -n 2 --post 2 --out sel.json", dir);
  REQUIRE(sel.code == 0);
  const auto report = json::parse(noetic::io::read_file(dir / "sel.json"));
  CHECK(report["method"] == "correlation");
  const auto banded = noetic_cli("select --input ssvep.neeg -n 2 --post 2 --bands 9:11,14:16", dir);
  REQUIRE(banded.code == 0);
  CHECK(json::parse(banded.out)["chosen_names"] == json::array({"ch6@9:11", "ch7@9:11"}));

  const auto tr = noetic_cli("train --input ssvep.neeg --kind rmdm --post 2 --bands 9:11,14:16 --out model.json", dir);
  REQUIRE(tr.code == 0);
  CHECK(json::parse(tr.out)["cv"]["mean_accuracy"].get<double>() >= 0.8);
  CHECK(json::parse(noetic::io::read_file(dir / "model.json"))["kind"] == "rmdm");
  CHECK(noetic_cli("train --input ssvep.neeg --kind svm", dir).code == 1);

  noetic::io::write_file_atomic(dir / "trace.json", R"([{"t": 0.5, "class_id": 0}, {"t": 4.5, "class_id": 1}])");
  noetic::io::write_file_atomic(dir / "sim.json", R"({"n_obstacles": 2, "classes": [0, 0]})");
  const auto sim = noetic_cli("sim --config sim.json --trace trace.json --out log.jsonl", dir);
  REQUIRE(sim.code == 0);
  CHECK(json::parse(sim.out)["accuracy"] == 0.5);
  CHECK(std::count(sim.out.begin(), sim.out.end(), '\n') > 0);
  const auto log = noetic::io::read_file(dir / "log.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);

  const auto fd = noetic_cli("filter-design --type lowpass --order 4 --cutoffs 30 --fs 256 --freqs 30", dir);
  REQUIRE(fd.code == 0);
  const auto spec = json::parse(fd.out);
  CHECK(spec["sections"].size() == 2);
  CHECK(spec["response"][0]["db"].get<double>() == doctest::Approx(-3.0103).epsilon(1e-4));
  CHECK(noetic_cli("filter-design --type lowpass --cutoffs 200 --fs 256", dir).code == 1);
}
