#include <doctest.h>

#include <limits>
#include <random>

#include "oracles.hpp"
#include "topoforge/cubical_ph.hpp"
#include "topoforge/error.hpp"

using namespace topoforge;

namespace {

Grid2D<double> from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  // rows are listed along a (first index), values along b
  const int R = static_cast<int>(rows.size()), C = static_cast<int>(rows.begin()->size());
  Grid2D<double> g(R, C);
  int a = 0;
  for (const auto& r : rows) {
    int b = 0;
    for (double x : r) g(a, b++) = x;
    ++a;
  }
  return g;
}

BinaryImage bits_from(const std::vector<std::string>& rows) {
  const int R = static_cast<int>(rows.size()), C = static_cast<int>(rows[0].size());
  BinaryImage img{Grid2D<std::uint8_t>(R, C, 0), Grid2D<std::uint8_t>(R, C, 1)};
  for (int a = 0; a < R; ++a)
    for (int b = 0; b < C; ++b) img.bits(a, b) = rows[a][b] == '#';
  return img;
}

int alive_at(const std::vector<PersistencePair>& pairs, double level) {
  int n = 0;
  for (const auto& p : pairs) n += p.birth <= level && level < p.death;
  return n;
}

}  // namespace

TEST_CASE("persistence of tiny images") {
  const auto c = sublevel_persistence_0d(FilteredImage(Grid2D<double>(4, 5, 0.3)), Adjacency::Eight);
  REQUIRE(c.size() == 1);
  CHECK(c[0].birth == 0.3);
  CHECK(c[0].essential());
  CHECK(c[0].death == std::numeric_limits<double>::infinity());

  const auto line = sublevel_persistence_0d(FilteredImage(from_rows({{0, 2, 1}})), Adjacency::Four);
  REQUIRE(line.size() == 2);
  CHECK(line[0].birth == 0);
  CHECK(line[0].essential());
  CHECK(line[1].birth == 1);
  CHECK(line[1].death == 2);
  CHECK(line[1].birth_cell == Cell{0, 2});
  CHECK(*line[1].death_cell == Cell{0, 1});

  CHECK(sublevel_persistence_0d(FilteredImage(), Adjacency::Four).empty());
}

TEST_CASE("elder rule and tie breaking") {
  // two minima with equal value: the lexicographically larger birth cell dies
  const auto tie = sublevel_persistence_0d(FilteredImage(from_rows({{0.2, 0.9, 0.2}})), Adjacency::Four);
  REQUIRE(tie.size() == 2);
  CHECK(tie[0].birth_cell == Cell{0, 0});
  CHECK(tie[0].essential());
  CHECK(tie[1].birth_cell == Cell{0, 2});
  CHECK(tie[1].death == 0.9);

  // diagonal neighbours merge immediately under eight-adjacency only
  const auto diag = from_rows({{0.0, 5.0}, {5.0, 1.0}});
  CHECK(sublevel_persistence_0d(FilteredImage(diag), Adjacency::Eight).size() == 1);
  const auto four = sublevel_persistence_0d(FilteredImage(diag), Adjacency::Four);
  REQUIRE(four.size() == 2);
  CHECK(four[1].birth_cell == Cell{1, 1});
  CHECK(four[1].death == 5.0);
}

TEST_CASE("masked cells never enter the filtration") {
  auto f = from_rows({{0.0, 0.5, 0.1}});
  Grid2D<std::uint8_t> m(1, 3, 1);
  m(0, 1) = 0;
  const auto pairs = sublevel_persistence_0d(FilteredImage(f, m), Adjacency::Eight);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].essential());
  CHECK(pairs[1].essential());
}

TEST_CASE("alive pairs match flood-fill component counts") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    // graded values on a coarse lattice so ties occur
    Grid2D<double> f(12, 9);
    std::uniform_int_distribution<int> L(0, 9);
    for (double& x : f.data()) x = L(rng) / 10.0;
    Grid2D<std::uint8_t> mask(12, 9, 1);
    if (trial % 3 == 0)
      for (int a = 6; a < 12; ++a)
        for (int b = 5; b < 9; ++b) mask(a, b) = 0;
    for (Adjacency adj : {Adjacency::Four, Adjacency::Eight}) {
      const auto pairs = sublevel_persistence_0d(FilteredImage(f, mask), adj);
      for (int k = 0; k <= 10; ++k) {
        const double level = k / 10.0;
        CHECK(alive_at(pairs, level) == oracle::flood_fill_count(f, mask, level, adj == Adjacency::Eight));
      }
      for (const auto& p : pairs) {
        CHECK(p.birth <= p.death);
        CHECK(p.birth == f[p.birth_cell]);
        if (p.death_cell) CHECK(p.death == f[*p.death_cell]);
      }
      // deterministic
      CHECK(pairs.size() == sublevel_persistence_0d(FilteredImage(f, mask), adj).size());
    }
  }
}

TEST_CASE("connected components") {
  const auto two = bits_from({"##...", "##...", ".....", "...##"});
  CHECK(connected_components(two, Adjacency::Four).count == 2);
  const auto full = bits_from({"###", "###"});
  CHECK(connected_components(full, Adjacency::Eight).count == 1);
  const auto diag = bits_from({"#.", ".#"});
  CHECK(connected_components(diag, Adjacency::Four).count == 2);
  CHECK(connected_components(diag, Adjacency::Eight).count == 1);
  const auto lab = connected_components(two, Adjacency::Four);
  CHECK(lab.labels(0, 0) == 0);
  CHECK(lab.labels(3, 4) == 1);
  CHECK(lab.labels(2, 2) == -1);
}

TEST_CASE("boundary contact") {
  // void (.) components of a solid frame
  const auto img = bits_from({"#####", "#..##", "#####", "....#"});
  Grid2D<std::uint8_t> voids(4, 5);
  for (std::size_t k = 0; k < voids.size(); ++k) voids.data()[k] = !img.bits.data()[k];
  const auto lab = connected_components(voids, img.mask, Adjacency::Four);
  REQUIRE(lab.count == 2);
  CHECK_FALSE(touches_boundary(lab, lab.labels(1, 1)));
  CHECK(touches_boundary(lab, lab.labels(3, 0)));
  CHECK_THROWS_AS(touches_boundary(lab, 7), Error);

  // a masked-out cell next to an interior void counts as the domain boundary
  Grid2D<std::uint8_t> mask(4, 5, 1);
  mask(0, 2) = 0;
  const auto lab2 = connected_components(voids, mask, Adjacency::Four);
  CHECK(touches_boundary(lab2, lab2.labels(1, 1)));
}

TEST_CASE("betti numbers") {
  CHECK(betti_numbers(bits_from({".....", ".###.", ".###.", ".....",})).b0 == 1);
  const auto ring = betti_numbers(bits_from({"#####", "#...#", "#...#", "#####"}));
  CHECK(ring.b0 == 1);
  CHECK(ring.b1 == 1);
  const auto frame = bits_from({"#######", "#..#..#", "#..#..#", "#######"});
  const auto two = betti_numbers(frame);
  CHECK(two.b0 == 1);
  CHECK(two.b1 == 2);
  CHECK(two.b1 == two.b0 - oracle::euler_characteristic(frame.bits));
  // void pinched at a corner by solid diagonal is two holes under the 8/4 duality
  const auto pinch = bits_from({"#####", "#.###", "##.##", "#####"});
  CHECK(betti_numbers(pinch).b1 == 2);
  CHECK(betti_numbers(pinch).b1 == 1 - oracle::euler_characteristic(pinch.bits));
}
