#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cqpv/quantum_state.hpp"

using namespace cqpv;

namespace {

JointState two_qubit(const std::string& a, const std::string& b,
                     std::vector<Amp> amps) {
  SystemLayout lay;
  lay.slots = {{a, SlotKind::Qubit}, {b, SlotKind::Qubit}};
  AmpMap m;
  m[BasisVector{{0, 0}}] = amps[0];
  m[BasisVector{{0, 1}}] = amps[1];
  m[BasisVector{{1, 0}}] = amps[2];
  m[BasisVector{{1, 1}}] = amps[3];
  return inject_photon_pair_state(lay, m);
}

// Independent partial-trace oracle: sum over the traced-out basis directly
// from a dense statevector, without going through the grouped implementation.
Eigen::MatrixXcd partial_trace_oracle(const JointState& s,
                                      const std::vector<std::string>& keep) {
  std::vector<int> kidx, rest;
  for (const auto& k : keep) kidx.push_back(s.layout.index_of(k));
  for (int i = 0; i < s.layout.size(); ++i)
    if (std::find(kidx.begin(), kidx.end(), i) == kidx.end()) rest.push_back(i);
  long dk = 1;
  for (int i : kidx) dk *= s.layout.local_dim(i);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dk, dk);
  auto kpart = [&](const BasisVector& bv) {
    long x = 0;
    for (int i : kidx) x = x * s.layout.local_dim(i) + bv.values[i];
    return x;
  };
  for (const auto& [bv1, a1] : s.amplitudes)
    for (const auto& [bv2, a2] : s.amplitudes) {
      bool same_rest = true;
      for (int i : rest)
        if (bv1.values[i] != bv2.values[i]) same_rest = false;
      if (same_rest) rho(kpart(bv1), kpart(bv2)) += a1 * std::conj(a2);
    }
  return rho;
}

std::mt19937 rng(12345);

JointState random_state(const SystemLayout& lay) {
  std::normal_distribution<double> g;
  long dim = 1;
  for (int i = 0; i < lay.size(); ++i) dim *= lay.local_dim(i);
  // enumerate full basis
  AmpMap m;
  std::vector<int> v(lay.size(), 0);
  double n2 = 0;
  for (long x = 0; x < dim; ++x) {
    long t = x;
    bool ok = true;
    int photons = 0;
    for (int i = lay.size() - 1; i >= 0; --i) {
      v[i] = t % lay.local_dim(i);
      t /= lay.local_dim(i);
      if (lay.slots[i].kind == SlotKind::Mode) photons += v[i];
    }
    if (photons > lay.photon_budget) ok = false;
    if (!ok) continue;
    Amp a(g(rng), g(rng));
    m[BasisVector{v}] = a;
    n2 += std::norm(a);
  }
  for (auto& [bv, a] : m) a /= std::sqrt(n2);
  JointState s;
  s.layout = lay;
  s.amplitudes = m;
  return s;
}

}  // namespace

TEST_CASE("allocate qubit and mode") {
  auto s = allocate_qubit(JointState::empty(), "q");
  CHECK(s.layout.size() == 1);
  CHECK(s.amplitudes.at(BasisVector{{0}}) == Amp(1, 0));

  auto s2 = apply_unitary(s, {"q"}, [] {
    Eigen::MatrixXcd x(2, 2);
    x << 0, 1, 1, 0;
    return x;
  }());
  auto s3 = allocate_qubit(s2, "q1");
  CHECK(s3.amplitudes.at(BasisVector{{1, 0}}) == Amp(1, 0));
  CHECK_THROWS_AS(allocate_qubit(s3, "q"), DuplicateName);

  auto m = allocate_mode(JointState::empty(), "x1");
  CHECK(m.amplitudes.at(BasisVector{{0}}) == Amp(1, 0));
  CHECK(m.layout.photon_budget == 0);
  CHECK_THROWS_AS(allocate_mode(m, "x1"), DuplicateName);
}

TEST_CASE("inject_photon_pair_state sets the budget and checks the norm") {
  SystemLayout lay;
  lay.slots = {{"c1", SlotKind::Mode}, {"c2", SlotKind::Mode},
               {"t1", SlotKind::Mode}, {"t2", SlotKind::Mode}};
  AmpMap m;
  m[BasisVector{{1, 0, 1, 0}}] = 1.0;
  auto s = inject_photon_pair_state(lay, m);
  CHECK(s.layout.photon_budget == 2);

  AmpMap bad;
  bad[BasisVector{{1, 0, 1, 0}}] = 0.5;
  bad[BasisVector{{0, 1, 0, 1}}] = 0.5;
  CHECK_THROWS_AS(inject_photon_pair_state(lay, bad), NotNormalized);

  AmpMap sup;
  sup[BasisVector{{1, 0, 1, 0}}] = 1 / std::sqrt(2.0);
  sup[BasisVector{{0, 1, 0, 1}}] = 1 / std::sqrt(2.0);
  auto s2 = inject_photon_pair_state(lay, sup);
  CHECK(s2.layout.photon_budget == 2);
  CHECK(s2.norm2() == doctest::Approx(1.0));
}

TEST_CASE("apply_unitary basics") {
  auto q = allocate_qubit(JointState::empty(), "q");
  Eigen::MatrixXcd h(2, 2);
  double r = 1 / std::sqrt(2.0);
  h << r, r, r, -r;
  auto plus = apply_unitary(q, {"q"}, h);
  CHECK(std::abs(plus.amplitudes.at(BasisVector{{0}}) - r) < 1e-12);
  CHECK(std::abs(plus.amplitudes.at(BasisVector{{1}}) - r) < 1e-12);

  // identity leaves a state unchanged
  auto same = apply_unitary(plus, {"q"}, Eigen::MatrixXcd::Identity(2, 2));
  CHECK(std::abs(same.amplitudes.at(BasisVector{{1}}) - r) < 1e-12);

  Eigen::MatrixXcd notu(2, 2);
  notu << 1, 1, 0, 1;
  CHECK_THROWS_AS(apply_unitary(q, {"q"}, notu), NotUnitary);
  CHECK_THROWS_AS(apply_unitary(q, {"zz"}, h), UnknownName);

  // X-equivalent swap on a dual-rail pair |10> -> |01>
  SystemLayout lay;
  lay.slots = {{"a", SlotKind::Mode}, {"b", SlotKind::Mode}};
  AmpMap m;
  m[BasisVector{{1, 0}}] = 1.0;
  auto dr = inject_photon_pair_state(lay, m);
  int d = dr.layout.photon_budget + 1;
  Eigen::MatrixXcd swap = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) swap(j * d + i, i * d + j) = 1.0;
  auto flipped = apply_unitary(dr, {"a", "b"}, swap);
  CHECK(std::abs(flipped.amplitudes.at(BasisVector{{0, 1}}) - 1.0) < 1e-12);
}

TEST_CASE("reduced density matrices") {
  double r = 1 / std::sqrt(2.0);
  auto bell = two_qubit("q0", "q1", {r, 0, 0, r});
  auto rho = reduced_density_matrix(bell, {"q0"});
  CHECK(rho.trace() == doctest::Approx(1.0));
  CHECK(std::abs(rho.entries(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(rho.entries(1, 1) - 0.5) < 1e-12);
  CHECK(std::abs(rho.entries(0, 1)) < 1e-12);

  // product state |1> (x) |10>: keeping the modes gives a rank-1 projector
  SystemLayout lay;
  lay.slots = {{"q", SlotKind::Qubit}, {"a", SlotKind::Mode}, {"b", SlotKind::Mode}};
  AmpMap m;
  m[BasisVector{{1, 1, 0}}] = 1.0;
  auto prod = inject_photon_pair_state(lay, m);
  auto rho2 = reduced_density_matrix(prod, {"a", "b"});
  CHECK(rho2.trace() == doctest::Approx(1.0));
  CHECK(std::abs((rho2.entries * rho2.entries - rho2.entries).cwiseAbs().maxCoeff()) < 1e-9);

  // alpha|0>|10> + beta|1>|01>, keep qubit -> diag(|alpha|^2, |beta|^2)
  double al = 0.6, be = 0.8;
  AmpMap m3;
  m3[BasisVector{{0, 1, 0}}] = al;
  m3[BasisVector{{1, 0, 1}}] = be;
  auto ent = inject_photon_pair_state(lay, m3);
  auto rho3 = reduced_density_matrix(ent, {"q"});
  auto oracle = partial_trace_oracle(ent, {"q"});
  CHECK((rho3.entries - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(rho3.entries(0, 0) - al * al) < 1e-12);
  CHECK(std::abs(rho3.entries(1, 1) - be * be) < 1e-12);
  CHECK(std::abs(rho3.entries(0, 1)) < 1e-12);
}

TEST_CASE("mixture_density_matrix") {
  auto zero = allocate_qubit(JointState::empty(), "q");
  Eigen::MatrixXcd x(2, 2);
  x << 0, 1, 1, 0;
  auto one = apply_unitary(zero, {"q"}, x);

  auto single = mixture_density_matrix({{1.0, zero}}, {"q"});
  CHECK(DensityMatrix::approx_equal(single, reduced_density_matrix(zero, {"q"}), 1e-12));

  auto coin = mixture_density_matrix({{0.5, zero}, {0.5, one}}, {"q"});
  CHECK(std::abs(coin.entries(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(coin.entries(1, 1) - 0.5) < 1e-12);

  SystemLayout lay;
  lay.slots = {{"a", SlotKind::Mode}, {"b", SlotKind::Mode}};
  AmpMap m10, m01;
  m10[BasisVector{{1, 0}}] = 1.0;
  m01[BasisVector{{0, 1}}] = 1.0;
  auto s10 = inject_photon_pair_state(lay, m10);
  auto s01 = inject_photon_pair_state(lay, m01);
  // weighted-sum oracle
  auto mix = mixture_density_matrix({{1.0 / 3, s10}, {2.0 / 3, s01}}, {"a", "b"});
  Eigen::MatrixXcd expect = (partial_trace_oracle(s10, {"a", "b"}) / 3.0) +
                            (partial_trace_oracle(s01, {"a", "b"}) * 2.0 / 3.0);
  CHECK((mix.entries - expect).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(mixture_density_matrix({{0.5, s10}}, {"a"}), WeightMismatch);
  JointState other = allocate_mode(s10, "c");
  CHECK_THROWS_AS(mixture_density_matrix({{0.5, s10}, {0.5, other}}, {"a"}),
                  LayoutMismatch);
}

TEST_CASE("permute_subsystems") {
  SystemLayout lay;
  lay.slots = {{"a", SlotKind::Mode}, {"b", SlotKind::Mode}};
  AmpMap m;
  m[BasisVector{{1, 0}}] = 1.0;
  auto s = inject_photon_pair_state(lay, m);

  auto id = permute_subsystems(s, {0, 1});
  CHECK(id.amplitudes == s.amplitudes);
  auto sw = permute_subsystems(s, {1, 0});
  CHECK(sw.amplitudes.at(BasisVector{{0, 1}}) == Amp(1, 0));
  CHECK(sw.layout.slots[0].name == "b");
  auto back = permute_subsystems(sw, {1, 0});
  CHECK(back.amplitudes == s.amplitudes);
  CHECK_THROWS_AS(permute_subsystems(s, {0, 0}), InvalidPermutation);
}

TEST_CASE("property: unitarity preserves the norm") {
  SystemLayout lay;
  lay.slots = {{"q", SlotKind::Qubit}, {"a", SlotKind::Mode}, {"b", SlotKind::Mode}};
  lay.photon_budget = 2;
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 50; ++rep) {
    auto s = random_state(lay);
    // random 2x2 unitary on the qubit via QR of a random complex matrix
    Eigen::MatrixXcd a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = Amp(g(rng), g(rng));
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    Eigen::MatrixXcd u = qr.householderQ();
    auto s2 = apply_unitary(s, {"q"}, u);
    CHECK(std::abs(s2.norm2() - 1.0) <= 1e-12);
  }
}

TEST_CASE("property: reduction composes") {
  SystemLayout lay;
  lay.slots = {{"q", SlotKind::Qubit}, {"a", SlotKind::Mode}, {"b", SlotKind::Mode}};
  lay.photon_budget = 1;
  for (int rep = 0; rep < 25; ++rep) {
    auto s = random_state(lay);
    auto rho_q = reduced_density_matrix(s, {"q"});
    CHECK(rho_q.trace() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rho_q.is_hermitian());
    CHECK(rho_q.min_eigenvalue() >= -1e-9);
    // tracing out "a" from rho over {q,a} must equal rho over {q}
    auto rho_qa = reduced_density_matrix(s, {"q", "a"});
    int da = 2;  // mode dim = budget+1
    Eigen::MatrixXcd traced = Eigen::MatrixXcd::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < da; ++k)
          traced(i, j) += rho_qa.entries(i * da + k, j * da + k);
    CHECK((traced - rho_q.entries).cwiseAbs().maxCoeff() < 1e-9);
    // and it must agree with the independent oracle
    CHECK((rho_q.entries - partial_trace_oracle(s, {"q"})).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("phase canonicalization fixes the ray representative") {
  auto q = allocate_qubit(JointState::empty(), "q");
  Eigen::MatrixXcd h(2, 2);
  double r = 1 / std::sqrt(2.0);
  h << r, r, r, -r;
  auto plus = apply_unitary(q, {"q"}, h);
  JointState rotated = plus;
  Amp phase = std::polar(1.0, 1.234);
  for (auto& [bv, a] : rotated.amplitudes) a *= phase;
  auto c1 = plus.phase_canonical();
  auto c2 = rotated.phase_canonical();
  for (const auto& [bv, a] : c1.amplitudes)
    CHECK(std::abs(a - c2.amplitudes.at(bv)) < 1e-12);
}
