#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "simplerec/synthetic.hpp"
#include "test_util.hpp"

using namespace simplerec;

namespace {

int block_of(const std::string& key, int n_blocks) {
  return std::stoi(key.substr(1)) % n_blocks;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("synthetic") {

TEST_CASE("items link only to entities of their own block") {
  const auto data = generate_synthetic(20, 10, 6, 2, 1);
  for (const auto& t : data.triples)
    CHECK(block_of(t.head, 2) == block_of(t.tail, 2));
  CHECK(!data.triples.empty());
}

TEST_CASE("exactly two relation types connect items and entities") {
  const auto data = generate_synthetic(20, 10, 6, 2, 1);
  std::set<std::string> rels;
  for (const auto& t : data.triples) rels.insert(t.relation);
  CHECK(rels.size() == 2);
}

TEST_CASE("same seed twice gives byte-identical files") {
  test::TempDir a("synth_a"), b("synth_b");
  generate_synthetic(20, 10, 6, 2, 77).write(a.path().string());
  generate_synthetic(20, 10, 6, 2, 77).write(b.path().string());
  for (const char* name : {"ratings.tsv", "triples.tsv", "features.tsv"})
    CHECK(slurp((a.path() / name).string()) == slurp((b.path() / name).string()));
  // and a different seed differs
  test::TempDir c("synth_c");
  generate_synthetic(20, 10, 6, 2, 78).write(c.path().string());
  CHECK(slurp((a.path() / "ratings.tsv").string()) != slurp((c.path() / "ratings.tsv").string()));
}

TEST_CASE("in-block interaction fraction is at least 0.8") {
  const auto data = generate_synthetic(40, 20, 8, 4, 3);
  int in_block = 0;
  for (const auto& r : data.interactions)
    if (block_of(r.user, 4) == block_of(r.item, 4)) ++in_block;
  const double fraction = static_cast<double>(in_block) / data.interactions.size();
  CHECK(fraction >= 0.8);
}

TEST_CASE("block counts need not divide evenly") {
  const auto data = generate_synthetic(10, 10, 6, 4, 5);
  CHECK(!data.interactions.empty());
}

TEST_CASE("too many blocks is an error") {
  CHECK_THROWS_AS(generate_synthetic(20, 10, 2, 3, 1), ConfigError);
}

TEST_CASE("features cover every item and entity") {
  const auto data = generate_synthetic(20, 10, 6, 2, 9);
  CHECK(data.features.size() == 10 + 6);
  const std::size_t dim = data.features.front().second.size();
  for (const auto& [key, vec] : data.features) CHECK(vec.size() == dim);
}

}  // TEST_SUITE
