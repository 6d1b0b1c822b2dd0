#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ggcn/consistency.hpp"
#include "ggcn/gradcheck.hpp"
#include "ggcn/rng.hpp"

using namespace ggcn;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, bool rg = false) {
  Tensor t = Tensor::zeros({r, c}, rg);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

Tensor random_distribution(std::size_t n, Rng& rng) {
  Tensor t = Tensor::zeros({n});
  double sum = 0.0;
  for (double& v : t.values()) {
    v = rng.uniform(0.05, 1.0);
    sum += v;
  }
  for (double& v : t.values()) v /= sum;
  return t;
}

}  // namespace

TEST_CASE("model_scores") {
  Rng rng(67);
  SECTION("zero weights give a uniform distribution") {
    std::size_t n = 4, score_dim = 8;
    ConsistencyParams params = ConsistencyParams::init(5, 3, score_dim, rng);
    std::fill(params.feature_weight.values().begin(), params.feature_weight.values().end(), 0.0);
    std::fill(params.token_weight.values().begin(), params.token_weight.values().end(), 0.0);
    auto scores = model_scores(Tensor::full({5}, 2.0), random_matrix(n, 3, rng), params);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(scores.raw.value(i) == Catch::Approx(0.25 * score_dim));
      CHECK(scores.probs.value(i) == Catch::Approx(1.0 / n));
    }
  }
  SECTION("single token gets probability one") {
    ConsistencyParams params = ConsistencyParams::init(5, 3, 4, rng);
    auto scores = model_scores(random_matrix(1, 5, rng).requires_grad()
                                   ? Tensor::zeros({5})
                                   : select_row(random_matrix(1, 5, rng), 0),
                               random_matrix(1, 3, rng), params);
    CHECK(scores.probs.values() == std::vector<double>{1.0});
  }
  SECTION("matches a double-loop oracle") {
    Rng local(71);
    for (int trial = 0; trial < 20; ++trial) {
      std::size_t n = 1 + local.index(5), fd = 1 + local.index(4), td = 1 + local.index(4),
                  sd = 1 + local.index(5);
      ConsistencyParams params = ConsistencyParams::init(fd, td, sd, local);
      Tensor feature = select_row(random_matrix(1, fd, local), 0);
      Tensor rows = random_matrix(n, td, local);
      auto scores = model_scores(feature, rows, params);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < sd; ++s) {
          double a = 0.0, b = 0.0;
          for (std::size_t j = 0; j < fd; ++j) a += feature.value(j) * params.feature_weight.at(j, s);
          for (std::size_t j = 0; j < td; ++j) b += rows.at(i, j) * params.token_weight.at(j, s);
          acc += (1.0 / (1.0 + std::exp(-a))) * (1.0 / (1.0 + std::exp(-b)));
        }
        CHECK(scores.raw.value(i) == Catch::Approx(acc).margin(1e-12));
      }
    }
  }
  SECTION("raw scores stay strictly inside (0, score_dim)") {
    Rng local(73);
    for (int trial = 0; trial < 50; ++trial) {
      std::size_t n = 1 + local.index(6), sd = 1 + local.index(6);
      ConsistencyParams params = ConsistencyParams::init(3, 3, sd, local);
      for (double& v : params.feature_weight.values()) v = local.uniform(-40, 40);
      for (double& v : params.token_weight.values()) v = local.uniform(-40, 40);
      auto scores = model_scores(select_row(random_matrix(1, 3, local), 0),
                                 random_matrix(n, 3, local), params);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(scores.raw.value(i) > 0.0);
        CHECK(scores.raw.value(i) < static_cast<double>(sd));
      }
    }
  }
}

TEST_CASE("isc_loss") {
  SECTION("kl of identical distributions is zero") {
    Tensor p = Tensor::vector({0.3, 0.2, 0.5});
    CHECK(isc_loss(p, p, IscForm::Kl).value() == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("kl of a point mass against uniform is log 2") {
    Tensor p = Tensor::vector({1, 0});
    Tensor q = Tensor::vector({0.5, 0.5});
    CHECK(isc_loss(p, q, IscForm::Kl).value() ==
          Catch::Approx(0.693147180559945309).epsilon(1e-12));
  }
  SECTION("literal form of identical distributions is minus one") {
    Tensor p = Tensor::vector({0.25, 0.25, 0.5});
    CHECK(isc_loss(p, p, IscForm::Literal).value() == Catch::Approx(-1.0).margin(1e-12));
  }
  SECTION("length mismatch and non-normalized inputs are rejected") {
    CHECK_THROWS(isc_loss(Tensor::vector({1, 0}), Tensor::vector({1, 0, 0}), IscForm::Kl));
    CHECK_THROWS(isc_loss(Tensor::vector({0.7, 0.7}), Tensor::vector({0.5, 0.5}), IscForm::Kl));
    CHECK_THROWS(isc_loss(Tensor::vector({0.5, 0.5}), Tensor::vector({1.0, 0.0}), IscForm::Kl));
  }
  SECTION("kl is non-negative and vanishes only at equality") {
    Rng rng(79);
    for (int trial = 0; trial < 300; ++trial) {
      std::size_t n = 2 + rng.index(7);
      Tensor p = random_distribution(n, rng);
      Tensor q = random_distribution(n, rng);
      double kl = isc_loss(p, q, IscForm::Kl).value();
      CHECK(kl >= 0.0);
      double gap = 0.0;
      for (std::size_t i = 0; i < n; ++i) gap = std::max(gap, std::abs(p.value(i) - q.value(i)));
      if (kl < 1e-9) CHECK(gap < 1e-4);
      CHECK(isc_loss(p, p, IscForm::Kl).value() < 1e-9);
    }
  }
}

TEST_CASE("score and consistency gradients match central differences") {
  Rng rng(83);
  std::size_t n = 4, fd = 5, td = 3, sd = 4;
  ConsistencyParams params = ConsistencyParams::init(fd, td, sd, rng);
  Tensor feature = select_row(random_matrix(1, fd, rng), 0);
  feature.set_requires_grad(true);
  Tensor rows = random_matrix(n, td, rng, true);
  Tensor graph_probs = random_distribution(n, rng);

  std::vector<std::pair<std::string, Tensor>> param_list;
  params.collect("score", param_list);
  param_list.emplace_back("feature", feature);
  param_list.emplace_back("rows", rows);

  for (IscForm form : {IscForm::Kl, IscForm::Literal}) {
    auto f = [&]() {
      auto scores = model_scores(feature, rows, params);
      return isc_loss(graph_probs, scores.probs, form);
    };
    auto result = grad_check(f, param_list);
    INFO("form " << isc_form_name(form) << " worst " << result.worst_param);
    CHECK(result.max_rel_error < 1e-4);
  }
}
