// Copyright 2026 The Soundmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "soundmix/csv.hpp"
#include "soundmix/metrics.hpp"
#include "soundmix/rng.hpp"

using namespace soundmix;

TEST_CASE("thresholding is inclusive at the boundary") {
  const std::vector<double> probs = {0.0, 0.4999, 0.5, 0.51, 1.0};
  const auto at_half = threshold_predictions(probs, 0.5);
  CHECK(at_half == std::vector<std::uint8_t>{0, 0, 1, 1, 1});
  const auto at_zero = threshold_predictions(probs, 0.0);
  CHECK(at_zero == std::vector<std::uint8_t>{1, 1, 1, 1, 1});
  const auto above_max = threshold_predictions(probs, 1.0000001);
  CHECK(above_max == std::vector<std::uint8_t>{0, 0, 0, 0, 0});
}

TEST_CASE("element-wise accuracy counts matching cells") {
  const std::vector<std::uint8_t> a = {1, 0, 1, 0, 1, 1};
  const std::vector<std::uint8_t> b = {1, 0, 1, 0, 1, 0};
  CHECK(elementwise_accuracy(a, a) == 100.0);
  std::vector<std::uint8_t> complement(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) complement[i] = a[i] ? 0 : 1;
  CHECK(elementwise_accuracy(a, complement) == 0.0);
  CHECK(elementwise_accuracy(a, b) == Catch::Approx(100.0 * 5.0 / 6.0));
  CHECK(elementwise_accuracy(a, b) == elementwise_accuracy(b, a));
  CHECK_THROWS_MATCHES(elementwise_accuracy(a, std::vector<std::uint8_t>{1, 0}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::ShapeMismatch;
                       }));
}

TEST_CASE("perfect predictions score 1.0 everywhere") {
  std::mt19937_64 rng(2);
  std::vector<std::uint8_t> truth(5 * 4);
  for (auto& t : truth) t = uniform_index(rng, 2) ? 1 : 0;
  truth[0] = 1;  // ensure every class has at least one positive somewhere
  truth[1] = 1;
  truth[2] = 1;
  truth[3] = 1;
  const EvalReport r = macro_prf(truth, truth, 5, 4);
  CHECK(r.macro_precision == 1.0);
  CHECK(r.macro_recall == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.elementwise_accuracy == 100.0);
  CHECK(r.subset_accuracy == 100.0);
  for (const ClassStats& s : r.per_class) {
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
}

TEST_CASE("a class never predicted and never true gets zeros by convention") {
  // class 1 is silent on both sides
  const std::vector<std::uint8_t> pred = {1, 0, 0, 1, 0, 1};
  const std::vector<std::uint8_t> truth = {1, 0, 1, 1, 0, 0};
  const EvalReport r = macro_prf(pred, truth, 2, 3);
  CHECK(r.per_class[1].tp == 0);
  CHECK(r.per_class[1].fp == 0);
  CHECK(r.per_class[1].fn == 0);
  CHECK(r.per_class[1].tn == 2);
  CHECK(r.per_class[1].precision == 0.0);
  CHECK(r.per_class[1].recall == 0.0);
  CHECK(r.per_class[1].f1 == 0.0);
}

TEST_CASE("the hand-built 4-sample 3-class case matches manual counts") {
  // sample x class:
  //   pred:  (1,0,0) (1,1,0) (0,0,1) (0,1,1)
  //   truth: (1,0,1) (0,1,0) (0,0,1) (1,1,0)
  const std::vector<std::uint8_t> pred = {1, 0, 0, 1, 1, 0, 0, 0, 1, 0, 1, 1};
  const std::vector<std::uint8_t> truth = {1, 0, 1, 0, 1, 0, 0, 0, 1, 1, 1, 0};
  const EvalReport r = macro_prf(pred, truth, 4, 3);

  // class 0: tp=1 (s0), fp=1 (s1), fn=1 (s3), tn=1 (s2)
  CHECK(r.per_class[0].tp == 1);
  CHECK(r.per_class[0].fp == 1);
  CHECK(r.per_class[0].fn == 1);
  CHECK(r.per_class[0].tn == 1);
  CHECK(r.per_class[0].precision == Catch::Approx(0.5));
  CHECK(r.per_class[0].recall == Catch::Approx(0.5));
  CHECK(r.per_class[0].f1 == Catch::Approx(0.5));
  // class 1: tp=2 (s1,s3), fp=0, fn=0, tn=2
  CHECK(r.per_class[1].tp == 2);
  CHECK(r.per_class[1].fp == 0);
  CHECK(r.per_class[1].fn == 0);
  CHECK(r.per_class[1].precision == 1.0);
  CHECK(r.per_class[1].recall == 1.0);
  // class 2: tp=1 (s2), fp=1 (s3), fn=1 (s0), tn=1
  CHECK(r.per_class[2].tp == 1);
  CHECK(r.per_class[2].fp == 1);
  CHECK(r.per_class[2].fn == 1);
  CHECK(r.macro_precision == Catch::Approx((0.5 + 1.0 + 0.5) / 3.0));
  CHECK(r.macro_recall == Catch::Approx((0.5 + 1.0 + 0.5) / 3.0));
  // 12 cells, 4 mismatches (s0c2, s1c0, s3c0, s3c2)
  CHECK(r.elementwise_accuracy == Catch::Approx(100.0 * 8.0 / 12.0));
  CHECK(r.subset_accuracy == Catch::Approx(100.0 * 1.0 / 4.0));
}

TEST_CASE("metrics equal the brute-force recount exactly on random matrices") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t batch = 1 + uniform_index(rng, 50);
    const std::size_t classes = 1 + uniform_index(rng, 8);
    std::vector<std::uint8_t> pred(batch * classes), truth(batch * classes);
    for (auto& p : pred) p = uniform_index(rng, 2) ? 1 : 0;
    for (auto& t : truth) t = uniform_index(rng, 2) ? 1 : 0;

    const EvalReport got = macro_prf(pred, truth, batch, classes);
    const oracles::BruteMetrics want =
        oracles::brute_force_metrics(pred, truth, batch, classes);
    for (std::size_t c = 0; c < classes; ++c) {
      REQUIRE(got.per_class[c].tp == want.tp[c]);
      REQUIRE(got.per_class[c].fp == want.fp[c]);
      REQUIRE(got.per_class[c].fn == want.fn[c]);
      REQUIRE(got.per_class[c].tn == want.tn[c]);
      REQUIRE(got.per_class[c].precision == want.precision[c]);
      REQUIRE(got.per_class[c].recall == want.recall[c]);
      REQUIRE(got.per_class[c].f1 == want.f1[c]);
    }
    REQUIRE(got.macro_precision == want.macro_p);
    REQUIRE(got.macro_recall == want.macro_r);
    REQUIRE(got.macro_f1 == want.macro_f1);
    REQUIRE(got.elementwise_accuracy == want.accuracy_percent);
  }
}

TEST_CASE("permuting the class axis permutes rows and fixes the aggregates") {
  std::mt19937_64 rng(44);
  const std::size_t batch = 20, classes = 5;
  std::vector<std::uint8_t> pred(batch * classes), truth(batch * classes);
  for (auto& p : pred) p = uniform_index(rng, 2) ? 1 : 0;
  for (auto& t : truth) t = uniform_index(rng, 2) ? 1 : 0;
  const EvalReport base = macro_prf(pred, truth, batch, classes);

  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  std::vector<std::uint8_t> pred_p(batch * classes), truth_p(batch * classes);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < classes; ++c) {
      pred_p[b * classes + c] = pred[b * classes + perm[c]];
      truth_p[b * classes + c] = truth[b * classes + perm[c]];
    }
  const EvalReport permuted = macro_prf(pred_p, truth_p, batch, classes);
  for (std::size_t c = 0; c < classes; ++c) {
    CHECK(permuted.per_class[c].tp == base.per_class[perm[c]].tp);
    CHECK(permuted.per_class[c].f1 == base.per_class[perm[c]].f1);
  }
  CHECK(permuted.macro_precision == Catch::Approx(base.macro_precision).margin(1e-15));
  CHECK(permuted.macro_recall == Catch::Approx(base.macro_recall).margin(1e-15));
  CHECK(permuted.macro_f1 == Catch::Approx(base.macro_f1).margin(1e-15));
  CHECK(permuted.elementwise_accuracy == base.elementwise_accuracy);
}

TEST_CASE("f1 sits between precision and recall when both are positive") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::uint8_t> pred(40), truth(40);
    for (auto& p : pred) p = uniform_index(rng, 2) ? 1 : 0;
    for (auto& t : truth) t = uniform_index(rng, 2) ? 1 : 0;
    const EvalReport r = macro_prf(pred, truth, 10, 4);
    for (const ClassStats& s : r.per_class)
      if (s.precision > 0.0 && s.recall > 0.0) {
        CHECK(s.f1 >= std::min(s.precision, s.recall) - 1e-15);
        CHECK(s.f1 <= std::max(s.precision, s.recall) + 1e-15);
      }
  }
}

TEST_CASE("csv and text report renderings carry identical numbers") {
  std::mt19937_64 rng(66);
  const std::size_t classes = 21;
  std::vector<std::uint8_t> pred(30 * classes), truth(30 * classes);
  for (auto& p : pred) p = uniform_index(rng, 2) ? 1 : 0;
  for (auto& t : truth) t = uniform_index(rng, 2) ? 1 : 0;
  EvalReport r = macro_prf(pred, truth, 30, classes);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < classes; ++i) names.push_back("class_" + std::to_string(i));

  const std::string csv = report_to_csv(r, names);
  const std::string text = report_to_text(r, names);

  // 21 data rows + header + macro summary
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 23);

  // every per-class f1 printed in the CSV appears verbatim in the text
  std::istringstream csv_in(csv);
  std::string line;
  std::getline(csv_in, line);  // header
  for (std::size_t c = 0; c < classes; ++c) {
    std::getline(csv_in, line);
    const auto fields = split_csv_row(line);
    REQUIRE(fields.size() == 9);
    CHECK(text.find(fields[6]) != std::string::npos);
    CHECK(text.find(fields[7]) != std::string::npos);
    CHECK(text.find(fields[8]) != std::string::npos);
  }

  CHECK_THROWS_MATCHES(report_to_csv(r, {"just_one"}), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::NameCountMismatch;
                       }));
  EvalReport empty = r;
  empty.n_samples = 0;
  CHECK_THROWS_AS(report_to_text(empty, names), Error);
}
