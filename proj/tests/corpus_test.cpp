#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "ggcn/corpus.hpp"

using namespace ggcn;

namespace {

std::vector<Sentence> parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

}  // namespace

TEST_CASE("parse_corpus") {
  SECTION("empty input gives an empty corpus") {
    CHECK(parse_text("").empty());
    CHECK(parse_text("\n\n# only a comment\n").empty());
  }
  SECTION("two-token block with an O alias") {
    auto corpus = parse_text("1\tHi\t2\tdep\tO\n2\tgo\t0\troot\tAttack\n");
    REQUIRE(corpus.size() == 1);
    const Sentence& s = corpus[0];
    CHECK(s.size() == 2);
    CHECK(s.tokens == std::vector<std::string>{"Hi", "go"});
    CHECK(s.heads == std::vector<int>{2, 0});
    CHECK(s.gold_labels == std::vector<std::string>{"None", "Attack"});
  }
  SECTION("space-separated columns are accepted") {
    auto corpus = parse_text("1 Hi 2 dep O\n2 go 0 root Attack\n");
    REQUIRE(corpus.size() == 1);
    CHECK(corpus[0].gold_labels[1] == "Attack");
  }
  SECTION("two roots are rejected with the line number") {
    CHECK_THROWS_WITH(parse_text("1\ta\t0\troot\tO\n2\tb\t0\troot\tO\n"),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("root"));
  }
  SECTION("head cycles are rejected") {
    CHECK_THROWS_WITH(parse_text("1\ta\t2\tdep\tO\n2\tb\t1\tdep\tO\n3\tc\t0\troot\tO\n"),
                      Catch::Matchers::ContainsSubstring("cycle"));
  }
  SECTION("column-count mismatch names the line") {
    CHECK_THROWS_WITH(parse_text("1\ta\t0\troot\tO\n\n1\tb\t0\troot\n"),
                      Catch::Matchers::ContainsSubstring("line 3"));
  }
  SECTION("non-integer head names the line") {
    CHECK_THROWS_WITH(parse_text("1\ta\tx\troot\tO\n"),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("head"));
  }
  SECTION("head index out of range is rejected") {
    CHECK_THROWS(parse_text("1\ta\t5\tdep\tO\n2\tb\t0\troot\tO\n"));
  }
  SECTION("comments and blank lines between sentences") {
    auto corpus = parse_text("# doc 1\n1\ta\t0\troot\tO\n\n\n# doc 2\n1\tb\t0\troot\tMove\n");
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[1].gold_labels[0] == "Move");
  }
}

TEST_CASE("corpus round-trip") {
  std::string text =
      "1\tthe\t2\tdet\tO\n2\tstorm\t3\tnsubj\tO\n3\thit\t0\troot\tAttack\n"
      "\n1\tcalm\t0\troot\tNone\n";
  auto first = parse_text(text);
  auto second = parse_text(serialize_corpus(first));
  CHECK(first == second);

  Rng rng(5);
  std::vector<Sentence> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(fixtures::random_tree(1 + rng.index(10), rng));
  CHECK(parse_text(serialize_corpus(corpus)) == corpus);
}

TEST_CASE("build_graph") {
  SECTION("single token keeps only its self-loop") {
    Sentence s;
    s.tokens = {"x"};
    s.heads = {0};
    s.deprels = {"root"};
    s.gold_labels = {"None"};
    auto g = build_graph(s);
    CHECK(g.neighbors[0] == std::vector<int>{0});
  }
  SECTION("two-token chain has edge, reverse, and loops") {
    Sentence s;
    s.tokens = {"a", "b"};
    s.heads = {2, 0};
    s.deprels = {"dep", "root"};
    s.gold_labels = {"None", "None"};
    auto g = build_graph(s);
    CHECK(g.neighbors[0] == std::vector<int>{0, 1});
    CHECK(g.neighbors[1] == std::vector<int>{0, 1});
  }
  SECTION("known parse: root of the first fixture sentence") {
    auto g = build_graph(fixtures::deployed_sentence());
    CHECK(g.neighbors[2] == std::vector<int>{0, 1, 2, 5, 7, 8});
  }
  SECTION("symmetric with self-loops on random trees") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
      Sentence s = fixtures::random_tree(1 + rng.index(12), rng);
      auto g = build_graph(s);
      std::size_t undirected_edges = 0;
      for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(std::find(g.neighbors[i].begin(), g.neighbors[i].end(), static_cast<int>(i)) !=
              g.neighbors[i].end());
        for (int j : g.neighbors[i]) {
          CHECK(std::find(g.neighbors[j].begin(), g.neighbors[j].end(), static_cast<int>(i)) !=
                g.neighbors[j].end());
          if (j != static_cast<int>(i)) {
            ++undirected_edges;
            // Dropping loops and reverses must recover the head relation.
            bool is_dep_edge = s.parent(i) == j || s.parent(j) == static_cast<int>(i);
            CHECK(is_dep_edge);
          }
        }
      }
      CHECK(undirected_edges == 2 * (g.n - 1));
    }
  }
}

TEST_CASE("graph_distances") {
  SECTION("known parses reproduce the expected distance rows") {
    auto s1 = fixtures::deployed_sentence();
    CHECK(graph_distances(s1, 2).distances == std::vector<int>{1, 1, 0, 2, 2, 1, 2, 1, 1});
    auto s2 = fixtures::brawl_sentence();
    CHECK(graph_distances(s2, 9).distances ==
          std::vector<int>{4, 3, 2, 4, 3, 2, 1, 2, 1, 0, 3});
  }
  SECTION("single token") {
    Sentence s;
    s.tokens = {"x"};
    s.heads = {0};
    s.deprels = {"root"};
    s.gold_labels = {"None"};
    auto scores = graph_distances(s, 0);
    CHECK(scores.distances == std::vector<int>{0});
    CHECK(scores.probs == std::vector<double>{1.0});
  }
  SECTION("trigger has the strictly largest probability") {
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
      std::size_t n = 2 + rng.index(10);
      Sentence s = fixtures::random_tree(n, rng);
      std::size_t t = rng.index(n);
      auto scores = graph_distances(s, t);
      CHECK(scores.distances[t] == 0);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum += scores.probs[i];
        if (i != t) {
          CHECK(scores.distances[i] >= 1);
          CHECK(scores.probs[i] < scores.probs[t]);
        }
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
  }
  SECTION("matches a cubic all-pairs oracle on random trees") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      std::size_t n = 1 + rng.index(12);
      Sentence s = fixtures::random_tree(n, rng);
      // Floyd-Warshall over the undirected head relation.
      const int inf = 1 << 20;
      std::vector<std::vector<int>> dist(n, std::vector<int>(n, inf));
      for (std::size_t i = 0; i < n; ++i) dist[i][i] = 0;
      for (std::size_t i = 0; i < n; ++i) {
        int p = s.parent(i);
        if (p >= 0) dist[i][p] = dist[p][i] = 1;
      }
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);

      std::size_t t = rng.index(n);
      auto scores = graph_distances(s, t);
      for (std::size_t i = 0; i < n; ++i) CHECK(scores.distances[i] == dist[i][t]);
    }
  }
}

TEST_CASE("make_candidates") {
  Sentence s;
  s.tokens = {"a", "b", "c"};
  s.heads = {2, 0, 2};
  s.deprels = {"dep", "root", "dep"};
  s.gold_labels = {"None", "Attack", "None"};
  auto cands = make_candidates(s, 4);
  REQUIRE(cands.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cands[i].sentence == 4);
    CHECK(cands[i].trigger == i);
    CHECK(cands[i].gold == s.gold_labels[i]);
  }
  std::size_t non_none = 0;
  for (const auto& c : cands) non_none += c.gold != kNoneLabel;
  CHECK(non_none == 1);
}
