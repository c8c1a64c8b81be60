#include "topoforge/cubical_ph.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

#include "topoforge/error.hpp"

namespace topoforge {
namespace {

constexpr int kOffsets8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};
constexpr int kOffsets4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};

template <typename F>
void for_each_neighbor(int a, int b, int rows, int cols, Adjacency adj, F&& f) {
  auto visit = [&](const int (*offs)[2], int n) {
    for (int k = 0; k < n; ++k) {
      const int na = a + offs[k][0], nb = b + offs[k][1];
      if (na >= 0 && nb >= 0 && na < rows && nb < cols) f(na, nb);
    }
  };
  if (adj == Adjacency::Eight)
    visit(kOffsets8, 8);
  else
    visit(kOffsets4, 4);
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void attach(std::size_t child_root, std::size_t parent_root) { parent_[child_root] = parent_root; }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<PersistencePair> sublevel_persistence_0d(const FilteredImage& img, Adjacency adjacency) {
  const auto& f = img.values;
  const int rows = f.rows(), cols = f.cols();
  if (img.mask.rows() != rows || img.mask.cols() != cols)
    fail(ErrorCode::InvalidArgument, "filtered image: mask shape mismatch");

  std::vector<std::size_t> order;
  order.reserve(f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    if (img.mask.data()[k]) order.push_back(k);
  // Flat index order is lexicographic (a, b) order.
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double fx = f.data()[x], fy = f.data()[y];
    return fx < fy || (fx == fy && x < y);
  });

  constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> rank(f.size(), kAbsent);
  UnionFind uf(f.size());
  std::vector<PersistencePair> pairs;

  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t c = order[pos];
    const Cell cell = f.cell(c);
    std::size_t root = kAbsent;
    for_each_neighbor(cell.a, cell.b, rows, cols, adjacency, [&](int na, int nb) {
      const std::size_t n = f.index(na, nb);
      if (rank[n] == kAbsent) return;
      const std::size_t r = uf.find(n);
      if (root == kAbsent) {
        root = r;
        return;
      }
      if (r == root) return;
      // Elder rule: roots are component minima; the one that entered later dies here.
      const std::size_t elder = rank[r] < rank[root] ? r : root;
      const std::size_t younger = elder == r ? root : r;
      pairs.push_back({0, f.data()[younger], f.data()[c], f.cell(younger), cell});
      uf.attach(younger, elder);
      root = elder;
    });
    rank[c] = pos;
    if (root != kAbsent) uf.attach(c, root);
  }

  for (std::size_t c : order) {
    if (uf.find(c) == c)
      pairs.push_back({0, f.data()[c], std::numeric_limits<double>::infinity(), f.cell(c), std::nullopt});
  }

  std::sort(pairs.begin(), pairs.end(), [](const PersistencePair& x, const PersistencePair& y) {
    if (x.birth != y.birth) return x.birth < y.birth;
    return x.birth_cell < y.birth_cell;
  });
  return pairs;
}

ComponentLabels connected_components(const Grid2D<std::uint8_t>& members, const Grid2D<std::uint8_t>& mask,
                                     Adjacency adjacency) {
  const int rows = members.rows(), cols = members.cols();
  if (mask.rows() != rows || mask.cols() != cols) fail(ErrorCode::InvalidArgument, "component labeling: mask shape mismatch");
  ComponentLabels out{Grid2D<int>(rows, cols, -1), mask, 0};
  std::deque<Cell> queue;
  for (int a = 0; a < rows; ++a) {
    for (int b = 0; b < cols; ++b) {
      if (!members(a, b) || !mask(a, b) || out.labels(a, b) >= 0) continue;
      const int label = out.count++;
      out.labels(a, b) = label;
      queue.push_back({a, b});
      while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        for_each_neighbor(c.a, c.b, rows, cols, adjacency, [&](int na, int nb) {
          if (members(na, nb) && mask(na, nb) && out.labels(na, nb) < 0) {
            out.labels(na, nb) = label;
            queue.push_back({na, nb});
          }
        });
      }
    }
  }
  return out;
}

ComponentLabels connected_components(const BinaryImage& bits, Adjacency adjacency) {
  return connected_components(bits.bits, bits.mask, adjacency);
}

std::vector<std::uint8_t> boundary_flags(const ComponentLabels& cl) {
  std::vector<std::uint8_t> flags(cl.count, 0);
  const int rows = cl.labels.rows(), cols = cl.labels.cols();
  for (int a = 0; a < rows; ++a) {
    for (int b = 0; b < cols; ++b) {
      const int l = cl.labels(a, b);
      if (l < 0 || flags[l]) continue;
      if (a == 0 || b == 0 || a == rows - 1 || b == cols - 1) {
        flags[l] = 1;
        continue;
      }
      for_each_neighbor(a, b, rows, cols, Adjacency::Four, [&](int na, int nb) {
        if (!cl.mask(na, nb)) flags[l] = 1;
      });
    }
  }
  return flags;
}

bool touches_boundary(const ComponentLabels& labels, int label) {
  if (label < 0 || label >= labels.count) fail(ErrorCode::InvalidArgument, "touches_boundary: unknown label");
  return boundary_flags(labels)[label] != 0;
}

BettiNumbers betti_numbers(const BinaryImage& img) {
  BettiNumbers betti;
  betti.b0 = connected_components(img.bits, img.mask, Adjacency::Eight).count;
  Grid2D<std::uint8_t> voids(img.bits.rows(), img.bits.cols(), 0);
  for (std::size_t k = 0; k < voids.size(); ++k) voids.data()[k] = img.bits.data()[k] ? 0 : 1;
  const ComponentLabels vl = connected_components(voids, img.mask, Adjacency::Four);
  for (std::uint8_t f : boundary_flags(vl))
    if (!f) ++betti.b1;
  return betti;
}

}  // namespace topoforge
