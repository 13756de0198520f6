#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lens/dataset_io.hpp"
#include "lens/prompt.hpp"
#include "lens/rng.hpp"
#include "lens/types.hpp"
#include "test_util.hpp"

using namespace lens;
using testutil::TempDir;
using testutil::write_file;

namespace {

Dataset tiny_dataset() {
  std::vector<Example> rows = {
      {0, "great movie", 1},
      {1, "bad film", 0},
      {2, "fine enough", 1},
  };
  return Dataset(std::move(rows), {"neg", "pos"}, "tiny");
}

PromptTemplate sst_template() {
  PromptTemplate t;
  t.pattern = "[INPUT] It was [VERBALIZER].";
  t.verbalizers = {"terrible", "great"};
  t.separator = "\n";
  return t;
}

}  // namespace

TEST_CASE("jsonl ingestion assigns dense ids in record order") {
  TempDir dir("lens-domain");
  write_file(dir.file("d.jsonl"),
             "{\"text\":\"a\",\"label\":\"pos\"}\n"
             "{\"text\":\"b\",\"label\":\"neg\"}\n"
             "{\"text\":\"c\",\"label\":\"pos\"}\n");
  Dataset d = ingest_dataset(dir.file("d.jsonl"), DatasetFormat::kJsonl,
                             {"pos", "neg"});
  REQUIRE(d.size() == 3);
  CHECK(d.examples()[0].id == 0);
  CHECK(d.examples()[1].id == 1);
  CHECK(d.examples()[2].id == 2);
  CHECK(d.examples()[0].label == 0);
  CHECK(d.examples()[1].label == 1);
}

TEST_CASE("empty dataset file is an error") {
  TempDir dir("lens-domain");
  write_file(dir.file("empty.jsonl"), "");
  CHECK_THROWS_WITH_AS(
      ingest_dataset(dir.file("empty.jsonl"), DatasetFormat::kJsonl, {"pos"}),
      doctest::Contains("empty dataset"), IngestError);
}

TEST_CASE("unknown label names the offending record and value") {
  TempDir dir("lens-domain");
  write_file(dir.file("bad.jsonl"), "{\"text\":\"a\",\"label\":\"maybe\"}\n");
  try {
    ingest_dataset(dir.file("bad.jsonl"), DatasetFormat::kJsonl, {"pos", "neg"});
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    std::string msg = e.what();
    CHECK(msg.find("record 0") != std::string::npos);
    CHECK(msg.find("maybe") != std::string::npos);
  }
}

TEST_CASE("missing field names the record index") {
  TempDir dir("lens-domain");
  write_file(dir.file("bad.jsonl"),
             "{\"text\":\"a\",\"label\":\"pos\"}\n{\"text\":\"b\"}\n");
  try {
    ingest_dataset(dir.file("bad.jsonl"), DatasetFormat::kJsonl, {"pos"});
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    std::string msg = e.what();
    CHECK(msg.find("record 1") != std::string::npos);
    CHECK(msg.find("label") != std::string::npos);
  }
}

TEST_CASE("csv ingestion handles quoted fields") {
  TempDir dir("lens-domain");
  write_file(dir.file("d.csv"),
             "text,label\n\"hello, world\",pos\n\"with \"\"quotes\"\"\",neg\n");
  Dataset d =
      ingest_dataset(dir.file("d.csv"), DatasetFormat::kCsv, {"pos", "neg"});
  REQUIRE(d.size() == 2);
  CHECK(d.examples()[0].text == "hello, world");
  CHECK(d.examples()[1].text == "with \"quotes\"");
}

TEST_CASE("csv requires the text,label header") {
  TempDir dir("lens-domain");
  write_file(dir.file("d.csv"), "body,tag\na,pos\n");
  CHECK_THROWS_AS(
      ingest_dataset(dir.file("d.csv"), DatasetFormat::kCsv, {"pos"}),
      IngestError);
}

TEST_CASE("rendering matches the worked example") {
  Dataset d = tiny_dataset();
  PromptTemplate t = sst_template();
  t.validate(d.label_count());

  const int demos[] = {0};
  std::string prompt = render_context(t, d, demos, std::string("bad film"));
  CHECK(prompt == "great movie It was great.\nbad film It was");
  CHECK(t.completion_for(1) == " great");
  CHECK(t.completion_for(0) == " terrible");
}

TEST_CASE("zero demos renders only the test input") {
  Dataset d = tiny_dataset();
  PromptTemplate t = sst_template();
  std::string prompt = render_context(t, d, {}, std::string("bad film"));
  CHECK(prompt == "bad film It was");
}

TEST_CASE("demo order changes the rendered context") {
  Dataset d = tiny_dataset();
  PromptTemplate t = sst_template();
  const int ab[] = {0, 1};
  const int ba[] = {1, 0};
  CHECK(render_context(t, d, ab, std::nullopt) !=
        render_context(t, d, ba, std::nullopt));
}

TEST_CASE("rendering is deterministic") {
  Dataset d = tiny_dataset();
  PromptTemplate t = sst_template();
  const int demos[] = {0, 1, 2};
  CHECK(render_context(t, d, demos, std::string("x")) ==
        render_context(t, d, demos, std::string("x")));
}

TEST_CASE("unresolvable demo id raises a lookup error") {
  Dataset d = tiny_dataset();
  PromptTemplate t = sst_template();
  const int demos[] = {99};
  CHECK_THROWS_AS(render_context(t, d, demos, std::nullopt), LookupError);
}

TEST_CASE("template placeholder counts are validated") {
  PromptTemplate t;
  t.verbalizers = {"a", "b"};
  t.pattern = "[INPUT] no slot";
  CHECK_THROWS_AS(t.validate(2), ConfigError);
  t.pattern = "[INPUT] [VERBALIZER] [VERBALIZER]";
  CHECK_THROWS_AS(t.validate(2), ConfigError);
  t.pattern = "[INPUT] ok [VERBALIZER]";
  CHECK_NOTHROW(t.validate(2));
  CHECK_THROWS_AS(t.validate(3), ConfigError);
}

TEST_CASE("template json loader orders verbalizers by label space") {
  std::string doc = R"({"pattern":"[INPUT] -> [VERBALIZER]",
                        "verbalizers":{"pos":"great","neg":"terrible"},
                        "separator":"\n\n"})";
  PromptTemplate t = template_from_json_text(doc, {"neg", "pos"});
  CHECK(t.verbalizers == std::vector<std::string>{"terrible", "great"});
  CHECK(t.separator == "\n\n");
}

TEST_CASE("permutation round-trips through its serialization") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Permutation p;
    size_t n = 1 + rng.below(12);
    for (size_t i = 0; i < n; ++i)
      p.example_ids.push_back(static_cast<int>(rng.below(10000)));
    CHECK(Permutation::parse(p.serialize()) == p);
  }
  CHECK(Permutation::parse("") == Permutation{});
}

TEST_CASE("permutation validation rejects duplicates and broken quotas") {
  Dataset d = tiny_dataset();
  Permutation dup{{0, 0}};
  CHECK_THROWS_AS(dup.validate(d), LensError);

  Permutation unbalanced{{0, 2}};  // both pos
  CHECK_NOTHROW(unbalanced.validate(d));
  CHECK_THROWS_AS(unbalanced.validate(d, true), LensError);

  Permutation balanced{{0, 1}};
  CHECK_NOTHROW(balanced.validate(d, true));
}

TEST_CASE("dataset rejects out-of-range labels and duplicate ids") {
  CHECK_THROWS_AS(Dataset({{0, "a", 2}}, {"x", "y"}, "bad"), IngestError);
  CHECK_THROWS_AS(Dataset({{0, "a", 0}, {0, "b", 1}}, {"x", "y"}, "bad"),
                  IngestError);
}
