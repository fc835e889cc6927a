#pragma once

// Linear-optical gate set and measurement primitives: beam splitter,
// polarisation-to-dual-rail conversion, dual-rail H/CZ, the 1/9-biased qubit
// rotation, photon counting and post-selective measurement.

#include <cmath>
#include <string>
#include <vector>

#include "cqpv/quantum_state.hpp"

namespace cqpv {

struct BeamSplitterParams {
  double eta;    // reflectivity, in [0,1]
  double theta;  // arccos(sqrt(eta)); phi is fixed to 0

  explicit BeamSplitterParams(double eta_) : eta(eta_) {
    if (eta < 0.0 || eta > 1.0) throw DomainError("reflectivity out of [0,1]");
    theta = std::acos(std::sqrt(eta));
  }
};

struct MeasurementOutcome {
  std::vector<int> values;
  double weight;
  JointState post_state;
};

namespace detail {

inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

// Two-mode beam splitter matrix on the (budget+1)^2 local basis, built from
// the creation-operator transformation
//   a+ -> cos(theta) a+ + sin(theta) b+,  b+ -> sin(theta) a+ - cos(theta) b+.
// Photon-number blocks with total > budget are truncated by the mode
// dimension; those basis states are mapped to themselves so the full matrix
// stays unitary (they never occur in a state respecting the budget).
inline Eigen::MatrixXcd beam_splitter_matrix(double eta, int budget) {
  BeamSplitterParams p(eta);
  double c = std::cos(p.theta), s = std::sin(p.theta);
  int d = budget + 1;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d * d, d * d);
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      int col = m * d + n;
      if (m + n > budget) {
        u(col, col) = 1.0;
        continue;
      }
      // Expand (c a+ + s b+)^m (s a+ - c b+)^n.
      for (int i = 0; i <= m; ++i) {
        for (int l = 0; l <= n; ++l) {
          int j = i + l;           // photons ending in mode a
          int k = m + n - j;       // photons ending in mode b
          double coef = binom(m, i) * std::pow(c, i) * std::pow(s, m - i) *
                        binom(n, l) * std::pow(s, l) * std::pow(-c, n - l);
          u(j * d + k, col) += coef * std::sqrt(factorial(j) * factorial(k) /
                                                (factorial(m) * factorial(n)));
        }
      }
    }
  }
  return u;
}

inline void require_mode(const JointState& state, const std::string& name) {
  int i = state.layout.index_of(name);
  if (state.layout.slots[i].kind != SlotKind::Mode) throw NotAMode(name);
}

inline void require_qubit(const JointState& state, const std::string& name) {
  int i = state.layout.index_of(name);
  if (state.layout.slots[i].kind != SlotKind::Qubit) throw NotAQubit(name);
}

// Every support vector must carry exactly one photon across the pair.
inline void require_single_photon_pair(const JointState& state,
                                       const std::string& a,
                                       const std::string& b,
                                       const char* op) {
  int ia = state.layout.index_of(a), ib = state.layout.index_of(b);
  for (const auto& [bv, amp] : state.amplitudes)
    if (bv.values[ia] + bv.values[ib] != 1)
      throw DomainError(std::string(op) + ": pair (" + a + "," + b +
                        ") is not single-photon on the support");
}

}  // namespace detail

inline JointState beam_splitter(const JointState& state, const std::string& modeA,
                                const std::string& modeB, double eta) {
  if (modeA == modeB) throw DomainError("beam splitter needs two distinct modes");
  detail::require_mode(state, modeA);
  detail::require_mode(state, modeB);
  auto u = detail::beam_splitter_matrix(eta, state.layout.photon_budget);
  return apply_unitary(state, {modeA, modeB}, u);
}

// Convert a polarisation qubit into a dual-rail pair: the qubit slot is
// removed, two fresh mode slots are appended, |..0..> -> |..>|10> and
// |..1..> -> |..>|01>. The photon budget grows by one.
inline JointState ps_convert(const JointState& state, const std::string& qubit,
                             const std::string& modeA, const std::string& modeB) {
  detail::require_qubit(state, qubit);
  if (state.layout.has(modeA)) throw DuplicateName(modeA);
  if (state.layout.has(modeB) || modeA == modeB) throw DuplicateName(modeB);
  int qi = state.layout.index_of(qubit);

  JointState out;
  out.layout.photon_budget = state.layout.photon_budget + 1;
  for (int i = 0; i < state.layout.size(); ++i)
    if (i != qi) out.layout.slots.push_back(state.layout.slots[i]);
  out.layout.slots.push_back(Slot{modeA, SlotKind::Mode});
  out.layout.slots.push_back(Slot{modeB, SlotKind::Mode});

  for (const auto& [bv, a] : state.amplitudes) {
    BasisVector nb;
    for (int i = 0; i < state.layout.size(); ++i)
      if (i != qi) nb.values.push_back(bv.values[i]);
    nb.values.push_back(bv.values[qi] == 0 ? 1 : 0);
    nb.values.push_back(bv.values[qi] == 0 ? 0 : 1);
    out.amplitudes[nb] = a;
  }
  return out;
}

// The eta = 1/2 beam splitter restricted to the single-photon subspace:
// |10> -> (|10>+|01>)/sqrt(2), |01> -> (|10>-|01>)/sqrt(2).
inline JointState dual_rail_hadamard(const JointState& state,
                                     const std::string& modeA,
                                     const std::string& modeB) {
  detail::require_single_photon_pair(state, modeA, modeB, "H");
  return beam_splitter(state, modeA, modeB, 0.5);
}

inline JointState dual_rail_cz(const JointState& state,
                               const std::pair<std::string, std::string>& control_pair,
                               const std::pair<std::string, std::string>& target_pair) {
  detail::require_single_photon_pair(state, control_pair.first,
                                     control_pair.second, "CZ");
  detail::require_single_photon_pair(state, target_pair.first,
                                     target_pair.second, "CZ");
  int c2 = state.layout.index_of(control_pair.second);
  int t2 = state.layout.index_of(target_pair.second);
  JointState out = state;
  for (auto& [bv, a] : out.amplitudes)
    if (bv.values[c2] == 1 && bv.values[t2] == 1) a = -a;
  return out;
}

// U_{1/9}: real rotation with |<1|U|0>|^2 = 1/9.
inline JointState biased_coin_unitary(const JointState& state,
                                      const std::string& qubit) {
  detail::require_qubit(state, qubit);
  double c = std::sqrt(8.0 / 9.0), s = std::sqrt(1.0 / 9.0);
  Eigen::MatrixXcd u(2, 2);
  u << c, -s, s, c;
  return apply_unitary(state, {qubit}, u);
}

// Photon-count measurement of a list of mode slots. One outcome per distinct
// occupation tuple in the support, sorted ascending.
inline std::vector<MeasurementOutcome> measure_modes_list(
    const JointState& state, const std::vector<std::string>& modes) {
  std::vector<int> idx;
  for (const auto& m : modes) {
    detail::require_mode(state, m);
    idx.push_back(state.layout.index_of(m));
  }
  std::map<std::vector<int>, MeasurementOutcome> by_value;
  for (const auto& [bv, a] : state.amplitudes) {
    std::vector<int> v;
    for (int i : idx) v.push_back(bv.values[i]);
    auto& o = by_value[v];
    o.values = v;
    o.weight += std::norm(a);
    o.post_state.layout = state.layout;
    o.post_state.amplitudes[bv] = a;
  }
  std::vector<MeasurementOutcome> out;
  for (auto& [v, o] : by_value) {
    double n = std::sqrt(o.weight);
    for (auto& [bv, a] : o.post_state.amplitudes) a /= n;
    out.push_back(std::move(o));
  }
  return out;
}

inline std::vector<MeasurementOutcome> measure_modes(const JointState& state,
                                                     const std::string& modeA,
                                                     const std::string& modeB) {
  return measure_modes_list(state, {modeA, modeB});
}

// Post-selective pair measurement: outcomes restricted to occupations
// (0,1)/(1,0), weights renormalized over the retained subspace, classical
// value = occupation of the second mode.
inline std::vector<MeasurementOutcome> ps_measure_modes(const JointState& state,
                                                        const std::string& modeA,
                                                        const std::string& modeB) {
  auto all = measure_modes(state, modeA, modeB);
  std::vector<MeasurementOutcome> kept;
  double retained = 0;
  for (auto& o : all) {
    if ((o.values[0] == 0 && o.values[1] == 1) ||
        (o.values[0] == 1 && o.values[1] == 0)) {
      retained += o.weight;
      kept.push_back(std::move(o));
    }
  }
  if (retained < kPruneTol) throw PostSelectionEmpty();
  for (auto& o : kept) {
    o.weight /= retained;
    o.values = {o.values[1]};  // the single bit l
  }
  return kept;
}

// Qubit measurement in the standard basis; outcome value is the observed
// bit pattern m (first name most significant), one outcome per pattern.
inline std::vector<MeasurementOutcome> measure_qubits(
    const JointState& state, const std::vector<std::string>& qubits) {
  std::vector<int> idx;
  for (const auto& q : qubits) {
    detail::require_qubit(state, q);
    idx.push_back(state.layout.index_of(q));
  }
  std::map<int, MeasurementOutcome> by_value;
  for (const auto& [bv, a] : state.amplitudes) {
    int m = 0;
    for (int i : idx) m = m * 2 + bv.values[i];
    auto& o = by_value[m];
    o.values = {m};
    o.weight += std::norm(a);
    o.post_state.layout = state.layout;
    o.post_state.amplitudes[bv] = a;
  }
  std::vector<MeasurementOutcome> out;
  for (auto& [m, o] : by_value) {
    double n = std::sqrt(o.weight);
    for (auto& [bv, a] : o.post_state.amplitudes) a /= n;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace cqpv
