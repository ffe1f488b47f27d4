#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "owf/distances.hpp"
#include "owf/rng.hpp"
#include "owf/synth.hpp"

using namespace owf;

namespace {

PacketSequence make(const std::vector<double>& times, const std::vector<int>& dirs) {
  PacketSequence seq;
  for (size_t i = 0; i < times.size(); ++i)
    seq.cells.push_back(Cell{times[i], static_cast<int8_t>(dirs[i])});
  return seq;
}

PacketSequence random_trace(Rng& rng, size_t n) {
  PacketSequence seq;
  double t = 0.0;
  for (size_t i = 0; i < n; ++i) {
    t += rng.uniform(0.001, 0.02);
    seq.cells.push_back(Cell{t, rng.bernoulli(0.5) ? int8_t{1} : int8_t{-1}});
  }
  return seq;
}

}  // namespace

TEST_CASE("cross correlation basics") {
  std::vector<double> a = {1, 2, 3};
  CHECK(cross_correlation(a, a) == doctest::Approx(1.0));
  std::vector<double> neg = {-1, -2, -3};
  CHECK(cross_correlation(a, neg) == doctest::Approx(-1.0));

  // Truncated sum with full-list moments: X((1,2,3,4), (1,2)) = 1/sqrt(5).
  std::vector<double> long_list = {1, 2, 3, 4};
  std::vector<double> short_list = {1, 2};
  CHECK(cross_correlation(long_list, short_list) ==
        doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));

  bool degenerate = false;
  std::vector<double> flat = {2, 2, 2};
  CHECK(cross_correlation(flat, a, &degenerate) == 0.0);
  CHECK(degenerate);
}

TEST_CASE("dist_xcorr identity, range, and constructed pair") {
  Rng rng(1);
  PacketSequence p = random_trace(rng, 60);
  XCorrRepr rp = repr_xcorr(p);
  CHECK(dist_xcorr(rp, rp) == doctest::Approx(0.0).epsilon(1e-12));

  // Same timing, reversed direction pattern: X_t = 1, so d = 1 - X_l.
  PacketSequence q = p;
  std::reverse(q.cells.begin(), q.cells.end());
  for (size_t i = 0; i < q.size(); ++i) q.cells[i].time = p.cells[i].time;
  XCorrRepr rq = repr_xcorr(q);
  CHECK(cross_correlation(rp.times, rq.times) == doctest::Approx(1.0).epsilon(1e-12));
  double xl = cross_correlation(rp.lengths, rq.lengths);
  CHECK(dist_xcorr(rp, rq) == doctest::Approx(1.0 - xl).epsilon(1e-9));

  // Unrelated random pairs: expectation near 2.
  double sum = 0.0;
  int n = 200;
  for (int i = 0; i < n; ++i) {
    XCorrRepr a = repr_xcorr(random_trace(rng, 80));
    XCorrRepr b = repr_xcorr(random_trace(rng, 80));
    double d = dist_xcorr(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= 4.0);
    sum += d;
  }
  CHECK(sum / n == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("rbf distance algebra") {
  FeatureVector a, b;
  a.values = {1, 2, 3};
  b.values = {1, 2, 3};
  CHECK(dist_rbf(a, b, 0x1p-25) == doctest::Approx(0.0));

  double gamma = 0.125;
  double delta2 = std::log(2.0) / gamma;
  b.values = {1 + std::sqrt(delta2), 2, 3};
  CHECK(dist_rbf(a, b, gamma) == doctest::Approx(0.5).epsilon(1e-9));

  double g25 = 0x1p-25;
  b.values = {1 + std::sqrt(std::pow(2.0, 25.0)), 2, 3};
  CHECK(dist_rbf(a, b, g25) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-9));

  b.values = {1, 2};
  CHECK_THROWS(dist_rbf(a, b, gamma));

  // Monotone in the squared distance.
  FeatureVector c;
  double prev = -1.0;
  for (double step : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    c.values = {1 + step, 2, 3};
    double d = dist_rbf(a, c, gamma);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("osa known values") {
  CHECK(osa("", "") == 0);
  CHECK(osa("OIO", "OIO") == 0);
  CHECK(osa("OI", "IO") == 1);   // one adjacent transposition
  CHECK(osa("O", "") == 1);
  CHECK(osa("", "III") == 3);
  CHECK(osa("OO", "II") == 2);
  // Insert then transpose is legal (the edits touch disjoint substrings):
  // IO -> OIO -> OOI. Brute-force script search agrees.
  CHECK(osa("IO", "OOI") == 2);
  CHECK(oracles::osa_bruteforce("IO", "OOI") == 2);
}

TEST_CASE("osa equals brute-force edit script search on short strings") {
  Rng rng(404);
  auto random_string = [&](size_t len) {
    std::string s(len, 'O');
    for (auto& c : s) c = rng.bernoulli(0.5) ? 'O' : 'I';
    return s;
  };
  for (int trial = 0; trial < 3000; ++trial) {
    std::string a = random_string(rng.index(7));
    std::string b = random_string(rng.index(7));
    CHECK(osa(a, b) == oracles::osa_bruteforce(a, b));
  }
}

TEST_CASE("dist_osad closed forms") {
  CHECK(dist_osad("OIOI", "OIOI") == doctest::Approx(0.0));
  // OSA=1, min length 2: 1 - e^{-2*1/2} = 1 - e^{-1}.
  CHECK(dist_osad("OI", "IO") == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  // Totally different strings of length 10: 1 - e^{-20}.
  std::string o10(10, 'O'), i10(10, 'I');
  CHECK(dist_osad(o10, i10) == doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-12));
  CHECK(dist_osad(o10, i10) > 0.99999);
}

TEST_CASE("weighted L1 arithmetic and linearity") {
  FeatureVector a, b;
  a.values = {1, 2};
  b.values = {3, 1};
  std::vector<double> w = {1, 1};
  CHECK(dist_weighted_l1(a, b, w) == doctest::Approx(3.0));
  CHECK(dist_weighted_l1(a, a, w) == 0.0);
  std::vector<double> w2 = {2, 2};
  CHECK(dist_weighted_l1(a, b, w2) == doctest::Approx(6.0));
  std::vector<double> bad = {1};
  CHECK_THROWS(dist_weighted_l1(a, b, bad));
}

TEST_CASE("pairwise distances are symmetric, nonnegative, zero at identity") {
  Rng rng(8);
  std::vector<PacketSequence> traces;
  for (int i = 0; i < 6; ++i) traces.push_back(random_trace(rng, 40 + rng.index(40)));
  std::vector<const PacketSequence*> ptrs;
  for (const auto& t : traces) ptrs.push_back(&t);

  std::vector<DistanceKind> kinds = {
      DistanceKind::xcorr(), DistanceKind::pa_svm_rbf(1e-4), DistanceKind::cumul_rbf(1e-4),
      DistanceKind::osad(),
      DistanceKind::wknn_l1(std::vector<double>(catalog_length(FeatureCatalog::WA_KNN), 1.0))};
  for (const auto& kind : kinds) {
    DistanceEvaluator eval(kind, ptrs);
    for (size_t i = 0; i < ptrs.size(); ++i) {
      for (size_t j = 0; j < ptrs.size(); ++j) {
        double d = eval.between(i, j);
        CHECK(d >= -1e-12);
        CHECK(d == doctest::Approx(eval.between(j, i)).epsilon(1e-12));
      }
      if (kind.id != DistanceKindId::XCORR)  // xcorr needs non-degenerate lists
        CHECK(eval.between(i, i) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("class distance variants") {
  // |C| = 1: variants that need 5/25 members are undefined.
  CHECK(aggregate_class_distance({0.7}, ClassDistanceVariant::MEAN_ALL) == doctest::Approx(0.7));
  CHECK(aggregate_class_distance({0.7}, ClassDistanceVariant::NEAREST) == doctest::Approx(0.7));
  CHECK_THROWS(aggregate_class_distance({0.7}, ClassDistanceVariant::TOP5_OVER_C));
  CHECK_THROWS(aggregate_class_distance({0.7}, ClassDistanceVariant::FIFTH_NEAREST));

  std::vector<double> d30;
  Rng rng(12);
  for (int i = 0; i < 30; ++i) d30.push_back(rng.uniform(0.0, 1.0));
  double v4 = aggregate_class_distance(d30, ClassDistanceVariant::NEAREST);
  double v5 = aggregate_class_distance(d30, ClassDistanceVariant::FIFTH_NEAREST);
  double v6 = aggregate_class_distance(d30, ClassDistanceVariant::TWENTYFIFTH_NEAREST);
  CHECK(v4 <= v5);
  CHECK(v5 <= v6);

  // Variants 2-3 divide the top-k sum by |C|, not by the top-k count.
  std::vector<double> sorted = d30;
  std::sort(sorted.begin(), sorted.end());
  double top5 = 0.0;
  for (int i = 0; i < 5; ++i) top5 += sorted[static_cast<size_t>(i)];
  CHECK(aggregate_class_distance(d30, ClassDistanceVariant::TOP5_OVER_C) ==
        doctest::Approx(top5 / 30.0));

  // Mean over {self + far points} strictly exceeds the nearest distance.
  std::vector<double> mix = {0.0, 0.9, 0.8};
  CHECK(aggregate_class_distance(mix, ClassDistanceVariant::MEAN_ALL) >
        aggregate_class_distance(mix, ClassDistanceVariant::NEAREST));
}

TEST_CASE("dist_to_class end to end") {
  Dataset data = synth_dataset(parse_spec("2x6+0"), 3);
  std::vector<const PacketSequence*> cls;
  for (const auto& t : data.monitored.at(0)) cls.push_back(&t);
  PacketSequence probe = data.monitored.at(1)[0];
  double mean_all = dist_to_class(probe, cls, DistanceKind::xcorr(),
                                  ClassDistanceVariant::MEAN_ALL);
  double nearest = dist_to_class(probe, cls, DistanceKind::xcorr(),
                                 ClassDistanceVariant::NEAREST);
  CHECK(nearest <= mean_all);
  CHECK(nearest >= 0.0);
}

TEST_CASE("distance matrix container round-trips") {
  namespace fs = std::filesystem;
  DistanceMatrix m;
  m.kind = DistanceKindId::WKNN_L1;
  m.params_digest = 0xabcdef;
  m.rows = 3;
  m.cols = 2;
  m.values = {1.f, 2.f, 3.f, 4.5f, 5.f, 6.25f};
  fs::path path = fs::temp_directory_path() / "owf_test_matrix.bin";
  save_distance_matrix(m, path.string());
  DistanceMatrix back = load_distance_matrix(path.string());
  CHECK(back.kind == m.kind);
  CHECK(back.params_digest == m.params_digest);
  CHECK(back.rows == 3);
  CHECK(back.cols == 2);
  CHECK(back.values == m.values);
  CHECK(back.at(1, 1) == 4.5f);
  fs::remove(path);
}

TEST_CASE("distance kind validation") {
  CHECK_THROWS(DistanceKind::pa_svm_rbf(0.0).validate());
  CHECK_THROWS(DistanceKind::wknn_l1({}).validate());
  CHECK_THROWS(DistanceKind::wknn_l1({0.0, 0.0}).validate());
  CHECK_THROWS(DistanceKind::wknn_l1({1.0, -0.5}).validate());
  CHECK_NOTHROW(DistanceKind::xcorr().validate());
}
