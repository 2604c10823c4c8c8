#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "langvec/error.hpp"

namespace langvec {

enum class Metric { kCosine, kEuclidean };
enum class Linkage { kAverage, kComplete, kSingle };

/// Cosine distance is 1 - cos; a zero vector is at distance 1 from everything.
double vector_distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Binary merge tree. Children precede their parent and the root is last;
/// each internal node records the linkage distance at which its children merged.
class DendrogramTree {
 public:
  static constexpr std::size_t kNoChild = static_cast<std::size_t>(-1);

  struct Node {
    std::string name;  // leaves only
    double height = 0.0;
    std::size_t left = kNoChild;
    std::size_t right = kNoChild;
    bool is_leaf() const { return left == kNoChild; }
  };

  DendrogramTree() = default;
  explicit DendrogramTree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t root() const { return nodes_.size() - 1; }
  std::size_t num_leaves() const { return (nodes_.size() + 1) / 2; }
  /// Leaf names in left-to-right order.
  std::vector<std::string> leaf_names() const;
  /// Heights of internal nodes in merge order.
  std::vector<double> merge_heights() const;

  /// Leaves sit at depth 0 and an internal node at half its merge height;
  /// each branch is the difference of the two depths.
  std::string to_newick() const;
  /// Nested `{"name", "height"}` / `{"children", "height"}` objects.
  std::string to_json() const;
  static DendrogramTree from_json(std::string_view json);
  /// Reads topology and optional branch lengths. Without lengths the merge
  /// height of a node is twice its level above the leaves.
  static DendrogramTree from_newick(std::string_view newick);

  /// Same shape, child order, names and heights.
  friend bool operator==(const DendrogramTree& a, const DendrogramTree& b);

 private:
  std::vector<Node> nodes_;
};

/// Agglomerative clustering of the labelled vectors. Ties on distance go to
/// the pair whose smallest member codes are lexicographically smallest, and
/// the input order does not matter. Throws ContractError for fewer than two
/// vectors, duplicate labels or mismatched dimensions.
DendrogramTree cluster(std::vector<std::pair<std::string, std::vector<double>>> vectors, Metric metric = Metric::kCosine,
                       Linkage linkage = Linkage::kAverage);

/// Number of non-trivial bipartitions of the leaf set present in exactly one
/// of the two trees (rooting ignored). Throws ContractError if the leaf sets differ.
std::size_t robinson_foulds(const DendrogramTree& a, const DendrogramTree& b);

Metric parse_metric(std::string_view name);
Linkage parse_linkage(std::string_view name);

}  // namespace langvec
