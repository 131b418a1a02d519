#ifndef UIVNAV__DATASET_HPP_
#define UIVNAV__DATASET_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uivnav/ir.hpp"

namespace uivnav
{

enum class Provenance
{
  Expert,
  Human,
};

std::string provenance_name(Provenance p);
Provenance parse_provenance(const std::string & s);

/// One training example: a downsampled composite and its two class labels.
struct LabeledSample
{
  SegDepthImage image;
  int c_yaw = 3;
  int c_pitch = 3;
  Provenance provenance = Provenance::Expert;
  std::string scenario_id;
  int step = 0;
};

struct DatasetSummary
{
  std::size_t count = 0;
  std::array<std::size_t, 7> yaw_histogram{};
  std::array<std::size_t, 7> pitch_histogram{};
};

nlohmann::json to_json(const DatasetSummary & s);
DatasetSummary summarize(std::span<const LabeledSample> samples);

/// Writes dir/images/NNNNNN.png, dir/manifest.jsonl (one line per sample:
/// file, c_yaw, c_pitch, provenance, scenario_id, step) and dir/dataset.json
/// holding `provenance` plus the class histograms.
DatasetSummary save_dataset(
  const std::string & dir, std::span<const LabeledSample> samples,
  const nlohmann::json & provenance = nlohmann::json::object());

/// Reads a dataset directory written by save_dataset (dataset.json optional).
std::vector<LabeledSample> load_dataset(const std::string & dir);

}  // namespace uivnav

#endif  // UIVNAV__DATASET_HPP_
