#include <doctest.h>

#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "tmon/artifacts.hpp"
#include "tmon/corpus.hpp"
#include "tmon/dataset.hpp"
#include "tmon/error.hpp"

using namespace tmon;

namespace {

Frame annotated(std::vector<EntityAnnotation> annotations, bool collision = false) {
  Frame f;
  f.camera_id = "cam-a";
  f.scenario_id = "s01";
  f.tick = 300;
  f.annotations = std::move(annotations);
  f.collision_present = collision;
  return f;
}

EntityAnnotation vehicle(std::optional<std::string> alias, Direction d) {
  return {"v", EntityKind::kVehicle, {}, {}, std::move(alias), d, false};
}

std::vector<InstructionRecord> sample_records(int n) {
  std::vector<InstructionRecord> out;
  for (int i = 0; i < n; ++i) {
    InstructionRecord r;
    r.id = "s01-cam-a-" + std::to_string(i);
    r.scenario_id = i % 2 ? "s01" : "s02";
    r.image_path = "images/s01/cam-a/" + std::to_string(i) + ".ppm";
    r.camera_id = "cam-a";
    r.tick = 100u * i;
    r.query = "Explain the vehicular activity.";
    r.answer = "Vehicle 1 is on Section A moving \"upward\".\nNo collision is observed.";
    if (i % 3 == 0) r.tags = {"collision"};
    out.push_back(r);
  }
  return out;
}

void touch_images(const std::filesystem::path& root, const std::vector<InstructionRecord>& records) {
  for (const auto& r : records) write_file_atomic(root / r.image_path, "P6\n1 1\n255\n\0\0\0");
}

}  // namespace

TEST_CASE("tag derivation") {
  CHECK(derive_tags(annotated({})).empty());
  CHECK(derive_tags(annotated({}, true)) == std::vector<std::string>{"collision"});
  auto ped = vehicle("Section A", Direction::kUpward);
  ped.cls = EntityKind::kPedestrian;
  CHECK(derive_tags(annotated({ped})) == std::vector<std::string>{"pedestrian"});
  CHECK(derive_tags(annotated({vehicle("A", Direction::kUpward), vehicle("A", Direction::kUpward)})) ==
        std::vector<std::string>{"platooning"});
  CHECK(derive_tags(annotated({vehicle("A", Direction::kUpward), vehicle("B", Direction::kUpward)})).empty());
  CHECK(derive_tags(annotated({vehicle("A", Direction::kStationary), vehicle("A", Direction::kStationary)})).empty());
  CHECK(derive_tags(annotated({vehicle(std::nullopt, Direction::kUpward), vehicle(std::nullopt, Direction::kUpward)}))
            .empty());
  CHECK(derive_tags(annotated({vehicle("A", Direction::kUpward), vehicle("B", Direction::kLeftward),
                               vehicle("C", Direction::kUpward), vehicle("D", Direction::kDownward), ped},
                              true)) == std::vector<std::string>{"collision", "congestion", "pedestrian"});
}

TEST_CASE("record construction") {
  Frame f = annotated({vehicle("Section A", Direction::kUpward)});
  CHECK(record_id(f) == "s01-cam-a-00000300");
  CHECK(image_path_for(f) == "images/s01/cam-a/00000300.ppm");
  const InstructionRecord r = build_record(f, f, "q");
  CHECK(r.answer == "Vehicle 1 is on Section A moving upward. No collision is observed.");
  CHECK(r.query == "q");
  CHECK(r.tick == 300);
  Frame other = f;
  other.tick = 301;
  CHECK_THROWS_AS(build_record(f, other, "q"), ValidationError);
  other = f;
  other.camera_id = "cam-b";
  CHECK_THROWS_AS(build_record(f, other, "q"), ValidationError);
}

TEST_CASE("query pool pick is deterministic and covers the pool") {
  const auto& pool = default_query_pool();
  CHECK(pool.front() == "Explain the vehicular activity.");
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) {
    const std::string id = "s01-cam-nw-" + std::to_string(i);
    CHECK(pick_query(id, pool) == pick_query(id, pool));
    seen.insert(pick_query(id, pool));
  }
  CHECK(seen.size() == pool.size());
}

TEST_CASE("manifest counts") {
  const auto records = sample_records(7);
  const Manifest m = make_manifest(records, "2024-01-01T00:00:00Z");
  CHECK(m.count == 7);
  CHECK(m.collision_count == 3);  // 0, 3, 6
  CHECK(m.cameras == std::vector<std::string>{"cam-a"});
  CHECK(m.scenario_count == 2);
  CHECK(m.collision_scenario_count == 2);
}

TEST_CASE("export and import round trip") {
  const auto root = fixtures::temp_dir("dataset");
  const auto records = sample_records(9);
  touch_images(root, records);
  const Manifest m = export_dataset(records, root, "t");
  CHECK(m.count == 9);
  CHECK(import_dataset(root) == records);
  const auto manifest = nlohmann::json::parse(std::ifstream(root / "manifest.json"));
  CHECK(manifest["count"] == 9);
  CHECK(manifest["created_at"] == "t");

  std::ifstream in(root / "dataset.jsonl");
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind(R"({"id":"s01-cam-a-0","scenario_id":"s02","image_path":)", 0) == 0);
}

TEST_CASE("export refuses records whose image is missing") {
  const auto root = fixtures::temp_dir("dataset-missing");
  const auto records = sample_records(3);
  CHECK_THROWS_AS(export_dataset(records, root, "t"), NotFoundError);
  CHECK_FALSE(std::filesystem::exists(root / "dataset.jsonl"));
}

TEST_CASE("import reports malformed lines and missing images") {
  const auto root = fixtures::temp_dir("dataset-bad");
  const auto records = sample_records(3);
  touch_images(root, records);
  std::string text = dataset_jsonl(records);
  SUBCASE("malformed JSON on line 2") {
    const auto nl = text.find('\n');
    text.insert(nl + 1, "{oops}\n");
    write_file_atomic(root / "dataset.jsonl", text);
    try {
      import_dataset(root);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("schema mismatch on line 4") {
    text += R"({"id": "x", "tick": "late"})" "\n";
    write_file_atomic(root / "dataset.jsonl", text);
    try {
      import_dataset(root);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("missing image") {
    write_file_atomic(root / "dataset.jsonl", text);
    std::filesystem::remove(root / records[1].image_path);
    CHECK_THROWS_AS(import_dataset(root), NotFoundError);
  }
  SUBCASE("missing dataset file") { CHECK_THROWS_AS(import_dataset(root / "nope"), NotFoundError); }
}

TEST_CASE("split is a seeded partition") {
  const auto records = sample_records(50);
  const auto [a, b] = split_records(records, 0.8, 3);
  CHECK(a.size() == 40);
  CHECK(b.size() == 10);
  std::set<std::string> ids;
  for (const auto& r : a) ids.insert(r.id);
  for (const auto& r : b) ids.insert(r.id);
  CHECK(ids.size() == 50);
  CHECK(split_records(records, 0.8, 3).first == a);
  CHECK(split_records(records, 0.8, 4).first != a);
  CHECK(split_records(records, 0.0, 1).first.empty());
  CHECK(split_records(records, 1.0, 1).second.empty());
}

TEST_CASE("build_timestamp honors SOURCE_DATE_EPOCH") {
  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  CHECK(build_timestamp() == "1970-01-02T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
  CHECK(build_timestamp().size() == 20);
}

TEST_CASE("small corpus build writes images, records and manifest") {
  auto cam = fixtures::small_camera(50);
  auto cfg = fixtures::scenario("sx", 100, {fixtures::vehicle_spec("v", {{0.5, 2}, {3.5, 2}}, 1.0),
                                            fixtures::pedestrian_spec("p", {{3, 0.5}, {3, 3.5}}, 0.5)});
  CorpusOptions options;
  options.created_at = "t";
  DigestSink sink;
  const CorpusResult result = build_corpus({cfg}, {cam}, options, sink);
  CHECK(result.frames == 3);
  REQUIRE(result.records.size() == 3);
  CHECK(result.manifest.count == 3);
  CHECK(sink.files().contains("dataset.jsonl"));
  CHECK(sink.files().contains("manifest.json"));
  for (const auto& r : result.records) {
    CHECK(sink.files().contains(r.image_path));
    CHECK(r.tags == std::vector<std::string>{"pedestrian"});
    CHECK(r.query == pick_query(r.id, default_query_pool()));
  }
  DigestSink again;
  build_corpus({cfg}, {cam}, options, again);
  CHECK(again.tree_digest() == sink.tree_digest());

  const auto root = fixtures::temp_dir("corpus");
  DirectorySink dir(root);
  build_corpus({cfg}, {cam}, options, dir);
  CHECK(directory_digest(root) == sink.tree_digest());
  CHECK(import_dataset(root) == result.records);
}
