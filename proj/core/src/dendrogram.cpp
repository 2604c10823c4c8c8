#include "langvec/dendrogram.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "langvec/error.hpp"
#include "langvec/format.hpp"

namespace langvec {

double vector_distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) throw DimensionError("vector_distance: dimensions differ");
  if (metric == Metric::kEuclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

DendrogramTree::DendrogramTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty() || nodes_.size() % 2 == 0) throw ContractError("dendrogram: a binary tree has an odd node count");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.is_leaf() != (n.right == kNoChild)) throw ContractError("dendrogram: node with a single child");
    if (!n.is_leaf() && (n.left >= i || n.right >= i)) throw ContractError("dendrogram: child after its parent");
  }
}

std::vector<std::string> DendrogramTree::leaf_names() const {
  std::vector<std::string> out;
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    const Node& n = nodes_[i];
    if (n.is_leaf()) {
      out.push_back(n.name);
      return;
    }
    walk(n.left);
    walk(n.right);
  };
  if (!nodes_.empty()) walk(root());
  return out;
}

std::vector<double> DendrogramTree::merge_heights() const {
  std::vector<double> out;
  for (const Node& n : nodes_) {
    if (!n.is_leaf()) out.push_back(n.height);
  }
  return out;
}

std::string DendrogramTree::to_newick() const {
  auto depth = [&](std::size_t i) { return nodes_[i].is_leaf() ? 0.0 : nodes_[i].height / 2.0; };
  std::function<std::string(std::size_t)> walk = [&](std::size_t i) {
    const Node& n = nodes_[i];
    if (n.is_leaf()) return n.name;
    return "(" + walk(n.left) + ":" + format_number(depth(i) - depth(n.left)) + "," + walk(n.right) + ":" +
           format_number(depth(i) - depth(n.right)) + ")";
  };
  return walk(root()) + ";";
}

std::string DendrogramTree::to_json() const {
  std::function<nlohmann::json(std::size_t)> walk = [&](std::size_t i) {
    const Node& n = nodes_[i];
    nlohmann::json j;
    if (n.is_leaf()) {
      j["name"] = n.name;
    } else {
      j["children"] = nlohmann::json::array({walk(n.left), walk(n.right)});
    }
    j["height"] = n.height;
    return j;
  };
  return walk(root()).dump();
}

DendrogramTree DendrogramTree::from_json(std::string_view text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tree JSON: ") + e.what());
  }
  std::vector<Node> nodes;
  std::function<std::size_t(const nlohmann::json&)> walk = [&](const nlohmann::json& j) -> std::size_t {
    if (!j.is_object() || !j.contains("height") || !j["height"].is_number()) {
      throw ParseError("tree JSON: every node needs a numeric height");
    }
    Node n;
    n.height = j["height"].get<double>();
    if (j.contains("children")) {
      const auto& c = j["children"];
      if (!c.is_array() || c.size() != 2) throw ParseError("tree JSON: internal nodes need exactly two children");
      n.left = walk(c[0]);
      n.right = walk(c[1]);
    } else {
      if (!j.contains("name") || !j["name"].is_string()) throw ParseError("tree JSON: leaves need a name");
      n.name = j["name"].get<std::string>();
    }
    nodes.push_back(std::move(n));
    return nodes.size() - 1;
  };
  walk(root);
  return DendrogramTree(std::move(nodes));
}

namespace {

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : text_(text) {}

  DendrogramTree parse() {
    node();
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ';') fail("expected ';'");
    ++pos_;
    skip_space();
    if (pos_ != text_.size()) fail("trailing text");
    // the root alone may go without a branch length
    const bool lengths = missing_lengths_ == 0 || (missing_lengths_ == 1 && !root_has_length_);
    std::vector<double> depth(nodes_.size(), 0.0);
    std::vector<int> level(nodes_.size(), 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto& n = nodes_[i];
      if (n.is_leaf()) continue;
      level[i] = 1 + std::max(level[n.left], level[n.right]);
      depth[i] = std::max(depth[n.left] + lengths_[n.left], depth[n.right] + lengths_[n.right]);
      n.height = lengths ? 2.0 * depth[i] : 2.0 * level[i];
    }
    return DendrogramTree(std::move(nodes_));
  }

 private:
  std::size_t node() {
    skip_space();
    DendrogramTree::Node n;
    if (peek() == '(') {
      ++pos_;
      n.left = node();
      expect(',');
      n.right = node();
      skip_space();
      if (peek() == ',') fail("only binary trees are supported");
      expect(')');
      label();  // internal labels are ignored
    } else {
      n.name = label();
      if (n.name.empty()) fail("leaf without a name");
    }
    double length = 0.0;
    bool has_length = false;
    skip_space();
    if (peek() == ':') {
      ++pos_;
      has_length = true;
      const std::string num = token();
      try {
        std::size_t used = 0;
        length = std::stod(num, &used);
        if (used != num.size()) fail("bad branch length '" + num + "'");
      } catch (const std::logic_error&) {
        fail("bad branch length '" + num + "'");
      }
    } else {
      ++missing_lengths_;
    }
    root_has_length_ = has_length;
    nodes_.push_back(std::move(n));
    lengths_.push_back(length);
    return nodes_.size() - 1;
  }

  std::string label() { return token(); }

  std::string token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::string_view("(),:;").find(text_[pos_]) == std::string_view::npos &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("Newick: " + what + " at offset " + std::to_string(pos_));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<DendrogramTree::Node> nodes_;
  std::vector<double> lengths_;
  std::size_t missing_lengths_ = 0;
  bool root_has_length_ = false;  // of the node parsed last, which ends up the root
};

bool equal_subtrees(const DendrogramTree& a, std::size_t i, const DendrogramTree& b, std::size_t j) {
  const auto& x = a.nodes()[i];
  const auto& y = b.nodes()[j];
  if (x.is_leaf() != y.is_leaf() || x.height != y.height) return false;
  if (x.is_leaf()) return x.name == y.name;
  return equal_subtrees(a, x.left, b, y.left) && equal_subtrees(a, x.right, b, y.right);
}

}  // namespace

DendrogramTree DendrogramTree::from_newick(std::string_view newick) { return NewickParser(newick).parse(); }

bool operator==(const DendrogramTree& a, const DendrogramTree& b) {
  if (a.nodes_.size() != b.nodes_.size()) return false;
  if (a.nodes_.empty()) return true;
  return equal_subtrees(a, a.root(), b, b.root());
}

DendrogramTree cluster(std::vector<std::pair<std::string, std::vector<double>>> vectors, Metric metric,
                       Linkage linkage) {
  if (vectors.size() < 2) throw ContractError("cluster: need at least two vectors, got " + std::to_string(vectors.size()));
  std::sort(vectors.begin(), vectors.end());
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    if (vectors[i].first == vectors[i - 1].first) throw ContractError("cluster: duplicate label " + vectors[i].first);
    if (vectors[i].second.size() != vectors[0].second.size()) throw ContractError("cluster: vector dimensions differ");
  }
  const std::size_t n = vectors.size();
  const std::size_t total = 2 * n - 1;
  std::vector<std::vector<double>> dist(total, std::vector<double>(total, 0.0));
  std::vector<DendrogramTree::Node> nodes;
  std::vector<std::size_t> size(total, 1);
  // Codes are sorted, so the smallest member code of a cluster is the one of its smallest leaf.
  std::vector<std::size_t> min_leaf(total);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    DendrogramTree::Node leaf;
    leaf.name = vectors[i].first;
    nodes.push_back(leaf);
    min_leaf[i] = i;
    active.push_back(i);
    for (std::size_t j = 0; j < i; ++j) {
      dist[i][j] = dist[j][i] = vector_distance(vectors[i].second, vectors[j].second, metric);
    }
  }
  while (active.size() > 1) {
    std::size_t bi = 0, bj = 0;
    auto best = std::make_tuple(std::numeric_limits<double>::infinity(), n, n);
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const std::size_t i = active[x], j = active[y];
        const auto key = std::make_tuple(dist[i][j], std::min(min_leaf[i], min_leaf[j]), std::max(min_leaf[i], min_leaf[j]));
        if (key < best) {
          best = key;
          bi = i;
          bj = j;
        }
      }
    }
    if (min_leaf[bj] < min_leaf[bi]) std::swap(bi, bj);
    const std::size_t k = nodes.size();
    DendrogramTree::Node merged;
    merged.height = std::get<0>(best);
    merged.left = bi;
    merged.right = bj;
    nodes.push_back(merged);
    size[k] = size[bi] + size[bj];
    min_leaf[k] = min_leaf[bi];
    std::erase(active, bi);
    std::erase(active, bj);
    for (std::size_t m : active) {
      const double a = dist[m][bi], b = dist[m][bj];
      double d = 0.0;
      switch (linkage) {
        case Linkage::kAverage:
          d = (static_cast<double>(size[bi]) * a + static_cast<double>(size[bj]) * b) / static_cast<double>(size[k]);
          break;
        case Linkage::kComplete:
          d = std::max(a, b);
          break;
        case Linkage::kSingle:
          d = std::min(a, b);
          break;
      }
      dist[m][k] = dist[k][m] = d;
    }
    active.push_back(k);
  }
  return DendrogramTree(std::move(nodes));
}

std::size_t robinson_foulds(const DendrogramTree& a, const DendrogramTree& b) {
  auto names = a.leaf_names();
  std::sort(names.begin(), names.end());
  auto other = b.leaf_names();
  std::sort(other.begin(), other.end());
  if (names != other) throw ContractError("robinson_foulds: trees have different leaf sets");
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw ContractError("robinson_foulds: duplicate leaf names");
  }
  const std::size_t n = names.size();
  auto splits = [&](const DendrogramTree& t) {
    std::vector<std::vector<bool>> below(t.nodes().size(), std::vector<bool>(n, false));
    std::set<std::vector<bool>> out;
    for (std::size_t i = 0; i < t.nodes().size(); ++i) {
      const auto& node = t.nodes()[i];
      if (node.is_leaf()) {
        const auto it = std::lower_bound(names.begin(), names.end(), node.name);
        below[i][static_cast<std::size_t>(it - names.begin())] = true;
        continue;
      }
      for (std::size_t l = 0; l < n; ++l) below[i][l] = below[node.left][l] || below[node.right][l];
      auto side = below[i];
      if (side[0]) side.flip();
      const auto count = static_cast<std::size_t>(std::count(side.begin(), side.end(), true));
      if (count >= 2 && count + 2 <= n) out.insert(side);
    }
    return out;
  };
  const auto sa = splits(a), sb = splits(b);
  std::size_t diff = 0;
  for (const auto& s : sa) diff += sb.count(s) == 0;
  for (const auto& s : sb) diff += sa.count(s) == 0;
  return diff;
}

Metric parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "euclidean") return Metric::kEuclidean;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected cosine or euclidean)");
}

Linkage parse_linkage(std::string_view name) {
  if (name == "average") return Linkage::kAverage;
  if (name == "complete") return Linkage::kComplete;
  if (name == "single") return Linkage::kSingle;
  throw ConfigError("unknown linkage '" + std::string(name) + "' (expected average, complete or single)");
}

}  // namespace langvec
