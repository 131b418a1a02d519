#include <filesystem>
#include <queue>

#include "doctest.h"
#include "uivnav/world.hpp"
#include "uivnav/common.hpp"
#include "uivnav/image.hpp"

using namespace uivnav;

namespace
{

// 4-connected OOI components, by flood fill.
int ooi_components(const WorldMap & m)
{
  std::vector<std::uint8_t> seen(m.cell_count(), 0);
  int count = 0;
  for (std::size_t i = 0; i < m.cell_count(); ++i) {
    if (!m.ooi()[i] || seen[i]) {
      continue;
    }
    ++count;
    std::queue<std::size_t> q;
    q.push(i);
    seen[i] = 1;
    while (!q.empty()) {
      const CellIndex c = m.unflat(q.front());
      q.pop();
      const int d[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto & o : d) {
        const int nc = c.col + o[0], nr = c.row + o[1];
        if (!m.in_grid(nc, nr)) {
          continue;
        }
        const std::size_t j = m.flat(nc, nr);
        if (m.ooi()[j] && !seen[j]) {
          seen[j] = 1;
          q.push(j);
        }
      }
    }
  }
  return count;
}

WorldMap flat_map(double w, double h, double cell = 0.25)
{
  const int cols = static_cast<int>(std::ceil(w / cell));
  const int rows = static_cast<int>(std::ceil(h / cell));
  return WorldMap(w, h, cell, std::vector<float>(cols * rows, 0.0f),
    std::vector<std::uint8_t>(cols * rows, 0), "oyster", {w / 2, h / 2, 5, 0, 0});
}

}  // namespace

TEST_CASE("query_cell uses half-open floor indexing") {
  const WorldMap m = flat_map(10, 10);
  CHECK(m.cell_of(0.1, 0.1) == CellIndex{0, 0});
  CHECK(m.cell_of(0.25, 0.0) == CellIndex{1, 0});
  CHECK_THROWS_AS(query_cell(m, 10.0, 5.0), OutOfBoundsError);
  CHECK_THROWS_AS(query_cell(m, 5.0, -1e-9), OutOfBoundsError);
  const auto [cx, cy] = m.cell_center(3, 7);
  CHECK(m.cell_of(cx, cy) == CellIndex{3, 7});
}

TEST_CASE("grid dimensions are ceil(extent / cell)") {
  const WorldMap m = flat_map(10.1, 3.0, 0.25);
  CHECK(m.cols() == 41);
  CHECK(m.rows() == 12);
}

TEST_CASE("constructor enforces invariants") {
  std::vector<float> h(16, 0.0f);
  std::vector<std::uint8_t> o(16, 0);
  h[5] = 6.0f;
  o[5] = 1;
  CHECK_THROWS_AS(WorldMap(1.0, 1.0, 0.25, h, o, "oyster", {0.5, 0.5, 5, 0, 0}), ParameterError);
  h[5] = -1.0f;
  o[5] = 0;
  CHECK_THROWS_AS(WorldMap(1.0, 1.0, 0.25, h, o, "oyster", {0.5, 0.5, 5, 0, 0}), ParameterError);
  h[5] = 0.0f;
  CHECK_THROWS_AS(WorldMap(1.0, 1.0, 0.25, std::vector<float>(15), o, "oyster", {0.5, 0.5, 5, 0, 0}),
    Error);
}

TEST_CASE("every scenario meets the generation contract") {
  for (ScenarioId id : {ScenarioId::GridWorld, ScenarioId::EShape, ScenarioId::DisconnectedPaths,
      ScenarioId::BranchingCorridor, ScenarioId::RockReef})
  {
    CAPTURE(scenario_name(id));
    const WorldMap m = generate_scenario({id, 0, {}});
    std::size_t free = 0;
    for (std::size_t i = 0; i < m.cell_count(); ++i) {
      free += !m.obstacle_flat(i);
      if (m.ooi()[i]) {
        CHECK_FALSE(m.obstacle_flat(i));
      }
    }
    const double frac = double(m.ooi_count()) / double(free);
    CHECK(frac >= 0.05);
    CHECK(frac <= 0.40);
    CHECK(m.obstacle_count() > 0);
    CHECK(m.ooi_kind() == (id == ScenarioId::RockReef ? "rock" : "oyster"));
    CHECK(m.bounds().contains(m.spawn_pose().x, m.spawn_pose().y));
  }
}

TEST_CASE("scenario topology") {
  CHECK(ooi_components(generate_scenario({ScenarioId::DisconnectedPaths, 1, {}})) == 2);
  ScenarioParams p;
  p.gap = 8.0;
  CHECK(ooi_components(generate_scenario({ScenarioId::DisconnectedPaths, 1, p})) == 2);
  CHECK(ooi_components(generate_scenario({ScenarioId::EShape, 0, {}})) == 1);
}

TEST_CASE("generation is a pure function of the spec") {
  const WorldMap a = generate_scenario({ScenarioId::BranchingCorridor, 3, {}});
  const WorldMap b = generate_scenario({ScenarioId::BranchingCorridor, 3, {}});
  CHECK(a == b);
  CHECK(a.digest() == b.digest());
  const WorldMap c = generate_scenario({ScenarioId::BranchingCorridor, 4, {}});
  CHECK_FALSE(a == c);
}

TEST_CASE("scenario parameters are range checked") {
  ScenarioParams p;
  p.cell_size = 0.0;
  CHECK_THROWS_AS(generate_scenario({ScenarioId::GridWorld, 0, p}), ParameterError);
  p = {};
  p.width_m = -5;
  CHECK_THROWS_AS(generate_scenario({ScenarioId::GridWorld, 0, p}), ParameterError);
  CHECK_FALSE(parse_scenario("atlantis").has_value());
  CHECK(parse_scenario("rock_reef") == ScenarioId::RockReef);
}

TEST_CASE("world file round trip and rejection") {
  const WorldMap m = generate_scenario({ScenarioId::EShape, 2, {}});
  const auto j = world_to_json(m);
  CHECK(world_from_json(j) == m);

  const auto dir = std::filesystem::temp_directory_path() / "uivnav_world_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "w.json").string();
  save_world(m, path);
  CHECK(load_world(path) == m);

  const std::string text = read_file_text(path);
  write_file(path, text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_world(path), ParseError);

  auto bad = j;
  bad["version"] = "9.0";
  CHECK_THROWS_AS(world_from_json(bad), ParseError);
  bad = j;
  bad.erase("ooi_grid");
  CHECK_THROWS_WITH_AS(world_from_json(bad), doctest::Contains("ooi_grid"), ParseError);
  bad = j;
  bad["extra"] = 1;
  CHECK_THROWS_AS(world_from_json(bad), ParseError);
}

TEST_CASE("file with an OOI flag on an obstacle cell is rejected") {
  const WorldMap m = generate_scenario({ScenarioId::GridWorld, 0, {}});
  std::size_t obstacle = 0;
  while (!m.obstacle_flat(obstacle)) {
    ++obstacle;
  }
  std::vector<std::uint8_t> ooi = m.ooi();
  ooi[obstacle] = 1;
  // Re-pack the bit grid by hand, LSB first, to forge the file.
  std::vector<std::uint8_t> packed((ooi.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < ooi.size(); ++i) {
    if (ooi[i]) {
      packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
  }
  auto j = world_to_json(m);
  const auto original = base64_decode(j["ooi_grid"].get<std::string>());
  REQUIRE(original.size() == packed.size());
  // Confirm the packing convention on the untouched grid first.
  std::vector<std::uint8_t> orig_packed(packed.size(), 0);
  for (std::size_t i = 0; i < m.ooi().size(); ++i) {
    if (m.ooi()[i]) {
      orig_packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
  }
  REQUIRE(orig_packed == original);
  j["ooi_grid"] = base64_encode(packed);
  CHECK_THROWS_AS(world_from_json(j), Error);
}
