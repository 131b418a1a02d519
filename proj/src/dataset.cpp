#include "uivnav/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "uivnav/common.hpp"
#include "uivnav/image.hpp"
#include "uivnav/json_fields.hpp"
#include "uivnav/policy.hpp"

namespace uivnav
{

namespace fs = std::filesystem;
using nlohmann::json;

std::string provenance_name(Provenance p)
{
  return p == Provenance::Human ? "human" : "expert";
}

Provenance parse_provenance(const std::string & s)
{
  if (s == "expert") {
    return Provenance::Expert;
  }
  if (s == "human") {
    return Provenance::Human;
  }
  throw ParseError("dataset: unknown provenance '" + s + "'");
}

json to_json(const DatasetSummary & s)
{
  return {{"count", s.count}, {"yaw_histogram", s.yaw_histogram},
    {"pitch_histogram", s.pitch_histogram}};
}

DatasetSummary summarize(std::span<const LabeledSample> samples)
{
  DatasetSummary s;
  s.count = samples.size();
  for (const auto & x : samples) {
    ++s.yaw_histogram.at(x.c_yaw);
    ++s.pitch_histogram.at(x.c_pitch);
  }
  return s;
}

DatasetSummary save_dataset(
  const std::string & dir, std::span<const LabeledSample> samples, const json & provenance)
{
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "images", ec);
  if (ec) {
    throw IoError("dataset: cannot create " + dir + ": " + ec.message());
  }
  std::ostringstream manifest;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto & s = samples[i];
    if (!valid_class(s.c_yaw) || !valid_class(s.c_pitch)) {
      throw ParameterError("dataset: class label outside 0..6");
    }
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06zu.png", i);
    write_file((fs::path(dir) / name).string(), encode_png(s.image.image));
    json line = {
      {"file", name}, {"c_yaw", s.c_yaw}, {"c_pitch", s.c_pitch},
      {"provenance", provenance_name(s.provenance)}, {"scenario_id", s.scenario_id},
      {"step", s.step},
    };
    manifest << line.dump() << '\n';
  }
  write_file((fs::path(dir) / "manifest.jsonl").string(), manifest.str());
  const DatasetSummary summary = summarize(samples);
  json meta = provenance;
  meta["summary"] = to_json(summary);
  write_file((fs::path(dir) / "dataset.json").string(), meta.dump(2) + "\n");
  return summary;
}

std::vector<LabeledSample> load_dataset(const std::string & dir)
{
  const std::string text = read_file_text((fs::path(dir) / "manifest.jsonl").string());
  std::istringstream in(text);
  std::string line;
  std::vector<LabeledSample> out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::string ctx = "manifest line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &) {
      throw ParseError(ctx + ": malformed JSON");
    }
    JsonFields f(j, ctx);
    LabeledSample s;
    const auto file = f.require<std::string>("file");
    s.c_yaw = f.require<int>("c_yaw");
    s.c_pitch = f.require<int>("c_pitch");
    s.provenance = parse_provenance(f.require<std::string>("provenance"));
    s.scenario_id = f.require<std::string>("scenario_id");
    s.step = f.require<int>("step");
    f.finish();
    if (!valid_class(s.c_yaw) || !valid_class(s.c_pitch)) {
      throw ParseError(ctx + ": class label outside 0..6");
    }
    const auto bytes = read_file_bytes((fs::path(dir) / file).string());
    s.image.image = decode_png(bytes);
    if (s.image.image.channels != 3) {
      throw ParseError(ctx + ": image is not RGB");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace uivnav
