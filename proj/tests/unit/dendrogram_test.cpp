#include <gtest/gtest.h>

#include <random>

#include "cluster_oracle.hpp"
#include "langvec/dendrogram.hpp"

namespace langvec {
namespace {

using Points = std::vector<std::pair<std::string, std::vector<double>>>;

// d(A,B) = 1, d(A,C) = d(B,C) = 4 on a line-free layout.
Points three_points() {
  const double h = std::sqrt(16.0 - 0.25);
  return {{"A", {0.0, 0.0}}, {"B", {1.0, 0.0}}, {"C", {0.5, h}}};
}

TEST(Cluster, HandRunUpgma) {
  const auto tree = cluster(three_points(), Metric::kEuclidean, Linkage::kAverage);
  const auto h = tree.merge_heights();
  ASSERT_EQ(h.size(), 2u);
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  EXPECT_NEAR(h[1], 4.0, 1e-12);
  EXPECT_EQ(tree.leaf_names(), (std::vector<std::string>{"A", "B", "C"}));
  const auto& root = tree.nodes()[tree.root()];
  EXPECT_FALSE(tree.nodes()[root.left].is_leaf());
  EXPECT_EQ(tree.nodes()[root.right].name, "C");
}

TEST(Cluster, TwoLanguagesMergeOnceAtTheirDistance) {
  const auto tree = cluster({{"x", {0.0, 3.0}}, {"y", {4.0, 0.0}}}, Metric::kEuclidean);
  EXPECT_EQ(tree.merge_heights(), std::vector<double>{5.0});
}

TEST(Cluster, FewerThanTwoVectorsIsAnError) {
  EXPECT_THROW(cluster({{"x", {1.0}}}), ContractError);
  EXPECT_THROW(cluster({}), ContractError);
  EXPECT_THROW(cluster({{"x", {1.0}}, {"x", {2.0}}}), ContractError);
  EXPECT_THROW(cluster({{"x", {1.0}}, {"y", {2.0, 1.0}}}), ContractError);
}

TEST(Cluster, CosineIgnoresScale) {
  EXPECT_NEAR(vector_distance(std::vector<double>{1, 0}, std::vector<double>{5, 0}, Metric::kCosine), 0.0, 1e-15);
  EXPECT_NEAR(vector_distance(std::vector<double>{1, 0}, std::vector<double>{0, 2}, Metric::kCosine), 1.0, 1e-15);
  EXPECT_NEAR(vector_distance(std::vector<double>{1, 0}, std::vector<double>{-1, 0}, Metric::kCosine), 2.0, 1e-15);
}

TEST(Cluster, MatchesBruteForceOracle) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Points pts;
    for (int i = 0; i < 10; ++i) {
      std::vector<double> v(6);
      for (auto& x : v) x = n(rng);
      pts.push_back({"L" + std::to_string(i), v});
    }
    for (Metric m : {Metric::kCosine, Metric::kEuclidean}) {
      for (Linkage l : {Linkage::kAverage, Linkage::kComplete, Linkage::kSingle}) {
        std::string why;
        EXPECT_TRUE(testing::merges_match(testing::tree_merges(cluster(pts, m, l)), testing::oracle_cluster(pts, m, l),
                                          1e-9, &why))
            << why;
      }
    }
  }
}

TEST(Cluster, TiesBreakByMemberCodes) {
  // A square: all four sides tie.
  const Points pts = {{"d", {1, 1}}, {"b", {1, 0}}, {"a", {0, 0}}, {"c", {0, 1}}};
  for (Linkage l : {Linkage::kAverage, Linkage::kComplete, Linkage::kSingle}) {
    std::string why;
    EXPECT_TRUE(testing::merges_match(testing::tree_merges(cluster(pts, Metric::kEuclidean, l)),
                                      testing::oracle_cluster(pts, Metric::kEuclidean, l), 0.0, &why))
        << why;
    const auto first = testing::tree_merges(cluster(pts, Metric::kEuclidean, l)).front();
    EXPECT_EQ(first.left, std::set<std::string>{"a"});
    EXPECT_EQ(first.right, std::set<std::string>{"b"});
  }
}

TEST(Cluster, PermutationInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Points pts;
  for (int i = 0; i < 9; ++i) pts.push_back({std::string(1, char('a' + i)), {n(rng), n(rng), n(rng)}});
  const auto reference = cluster(pts);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(pts.begin(), pts.end(), rng);
    EXPECT_EQ(cluster(pts), reference);
  }
}

TEST(Cluster, AverageLinkageHeightsAreNonDecreasing) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Points pts;
    for (int i = 0; i < 12; ++i) pts.push_back({"p" + std::to_string(i), {n(rng), n(rng), n(rng), n(rng)}});
    for (Metric m : {Metric::kCosine, Metric::kEuclidean}) {
      const auto h = cluster(pts, m).merge_heights();
      EXPECT_TRUE(std::is_sorted(h.begin(), h.end()));
    }
  }
}

TEST(Newick, UpgmaThreePoints) {
  EXPECT_EQ(cluster(three_points(), Metric::kEuclidean).to_newick(), "((A:0.5,B:0.5):1.5,C:2.0);");
}

TEST(Newick, SingleMerge) {
  EXPECT_EQ(cluster({{"A", {0.0}}, {"B", {2.0}}}, Metric::kEuclidean).to_newick(), "(A:1.0,B:1.0);");
}

TEST(Newick, ParseRoundTripsHeights) {
  const auto tree = cluster(three_points(), Metric::kEuclidean);
  const auto back = DendrogramTree::from_newick(tree.to_newick());
  EXPECT_EQ(back.leaf_names(), tree.leaf_names());
  const auto a = back.merge_heights(), b = tree.merge_heights();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Newick, TopologyOnlyAndErrors) {
  const auto t = DendrogramTree::from_newick("((a,b),(c, d));");
  EXPECT_EQ(t.leaf_names(), (std::vector<std::string>{"a", "b", "c", "d"}));
  EXPECT_EQ(t.merge_heights(), (std::vector<double>{2, 2, 4}));
  EXPECT_THROW(DendrogramTree::from_newick("((a,b),c)"), ParseError);
  EXPECT_THROW(DendrogramTree::from_newick("(a,b,c);"), ParseError);
  EXPECT_THROW(DendrogramTree::from_newick("(a,b):x;"), ParseError);
}

TEST(Json, RoundTripsToAnEqualTree) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  Points pts;
  for (int i = 0; i < 7; ++i) pts.push_back({"x" + std::to_string(i), {n(rng), n(rng)}});
  const auto tree = cluster(pts);
  const auto json = tree.to_json();
  EXPECT_EQ(DendrogramTree::from_json(json), tree);
  EXPECT_NE(json.find("\"children\""), std::string::npos);
  EXPECT_THROW(DendrogramTree::from_json("{\"name\":\"a\"}"), ParseError);
  EXPECT_THROW(DendrogramTree::from_json("not json"), ParseError);
}

TEST(RobinsonFoulds, IdenticalAndRerootedTopologiesAreZero) {
  const auto a = DendrogramTree::from_newick("(((a,b),(c,d)),((e,f),(g,h)));");
  const auto b = DendrogramTree::from_newick("(((h,g),(f,e)),((d,c),(b,a)));");
  EXPECT_EQ(robinson_foulds(a, b), 0u);
  const auto c = DendrogramTree::from_newick("((a,b),((c,d),((e,f),(g,h))));");
  EXPECT_EQ(robinson_foulds(a, c), 0u);
}

TEST(RobinsonFoulds, CountsDifferingSplits) {
  const auto a = DendrogramTree::from_newick("((a,b),(c,(d,e)));");
  const auto b = DendrogramTree::from_newick("((a,c),(b,(d,e)));");
  // a: {a,b}|{c,d,e}, {d,e}|rest ; b: {a,c}|..., {d,e}|rest
  EXPECT_EQ(robinson_foulds(a, b), 2u);
  EXPECT_THROW(robinson_foulds(a, DendrogramTree::from_newick("((a,b),(c,(d,x)));")), ContractError);
}

}  // namespace
}  // namespace langvec
