#pragma once

// Joint pure states over named qubits and Fock modes, with unitary
// application, partial traces and subsystem permutation. Modes are truncated
// at the photon budget of the state, which is exact as long as every applied
// unitary conserves total photon number.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cqpv/errors.hpp"

namespace cqpv {

using Amp = std::complex<double>;

inline constexpr double kAmpTol = 1e-9;
inline constexpr double kPruneTol = 1e-12;
inline constexpr double kRhoTol = 1e-6;

enum class SlotKind { Qubit, Mode };

struct Slot {
  std::string name;
  SlotKind kind;
  friend bool operator==(const Slot& a, const Slot& b) {
    return a.name == b.name && a.kind == b.kind;
  }
};

struct SystemLayout {
  std::vector<Slot> slots;
  int photon_budget = 0;

  int size() const { return static_cast<int>(slots.size()); }

  int index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (slots[i].name == name) return i;
    throw UnknownName(name);
  }

  bool has(const std::string& name) const {
    for (const auto& s : slots)
      if (s.name == name) return true;
    return false;
  }

  // Local dimension of one slot: 2 for qubits, budget+1 for modes.
  int local_dim(int i) const {
    return slots[i].kind == SlotKind::Qubit ? 2 : photon_budget + 1;
  }

  friend bool operator==(const SystemLayout& a, const SystemLayout& b) {
    return a.slots == b.slots && a.photon_budget == b.photon_budget;
  }
};

// Occupation/bit labels aligned with the owning layout's slots.
struct BasisVector {
  std::vector<int> values;

  friend bool operator<(const BasisVector& a, const BasisVector& b) {
    return a.values < b.values;
  }
  friend bool operator==(const BasisVector& a, const BasisVector& b) {
    return a.values == b.values;
  }
};

using AmpMap = std::map<BasisVector, Amp>;

struct JointState {
  SystemLayout layout;
  AmpMap amplitudes;

  // Empty system: single empty basis vector with amplitude 1.
  static JointState empty() {
    JointState s;
    s.amplitudes[BasisVector{}] = Amp(1.0, 0.0);
    return s;
  }

  double norm2() const {
    double n = 0;
    for (const auto& [bv, a] : amplitudes) n += std::norm(a);
    return n;
  }

  void prune() {
    for (auto it = amplitudes.begin(); it != amplitudes.end();) {
      if (std::abs(it->second) < kPruneTol)
        it = amplitudes.erase(it);
      else
        ++it;
    }
  }

  // Rescale so the first nonzero amplitude in lexicographic basis order is
  // real positive. States are rays; this fixes a representative for hashing.
  JointState phase_canonical() const {
    JointState out = *this;
    out.prune();
    for (const auto& [bv, a] : out.amplitudes) {
      if (std::abs(a) >= kPruneTol) {
        Amp phase = a / std::abs(a);
        for (auto& [bv2, a2] : out.amplitudes) a2 /= phase;
        break;
      }
    }
    return out;
  }
};

struct DensityMatrix {
  SystemLayout sub_layout;
  Eigen::MatrixXcd entries;

  double trace() const { return entries.trace().real(); }

  bool is_hermitian(double tol = kAmpTol) const {
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff() <= tol;
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries);
    return es.eigenvalues().minCoeff();
  }

  static bool approx_equal(const DensityMatrix& a, const DensityMatrix& b,
                           double tol = kRhoTol) {
    if (a.entries.rows() != b.entries.rows()) return false;
    return (a.entries - b.entries).cwiseAbs().maxCoeff() <= tol;
  }
};

inline JointState allocate_qubit(const JointState& state, const std::string& name) {
  if (state.layout.has(name)) throw DuplicateName(name);
  JointState out;
  out.layout = state.layout;
  out.layout.slots.push_back(Slot{name, SlotKind::Qubit});
  for (const auto& [bv, a] : state.amplitudes) {
    BasisVector nb = bv;
    nb.values.push_back(0);
    out.amplitudes[nb] = a;
  }
  return out;
}

inline JointState allocate_mode(const JointState& state, const std::string& name) {
  if (state.layout.has(name)) throw DuplicateName(name);
  JointState out;
  out.layout = state.layout;
  out.layout.slots.push_back(Slot{name, SlotKind::Mode});
  for (const auto& [bv, a] : state.amplitudes) {
    BasisVector nb = bv;
    nb.values.push_back(0);
    out.amplitudes[nb] = a;
  }
  return out;
}

// Environment preparation: a state with exactly the given amplitude map.
// The photon budget is set to the maximum total occupation in the support.
inline JointState inject_photon_pair_state(const SystemLayout& layout,
                                           const AmpMap& amplitudes) {
  double n2 = 0;
  for (const auto& [bv, a] : amplitudes) n2 += std::norm(a);
  if (std::abs(n2 - 1.0) > kAmpTol) throw NotNormalized(n2);
  JointState out;
  out.layout = layout;
  out.layout.photon_budget = 0;
  for (const auto& [bv, a] : amplitudes) {
    if (static_cast<int>(bv.values.size()) != layout.size())
      throw Error("basis vector length does not match layout");
    int total = 0;
    for (int i = 0; i < layout.size(); ++i) {
      if (layout.slots[i].kind == SlotKind::Mode)
        total += bv.values[i];
      else if (bv.values[i] != 0 && bv.values[i] != 1)
        throw Error("qubit slot value must be 0 or 1");
    }
    out.layout.photon_budget = std::max(out.layout.photon_budget, total);
    out.amplitudes[bv] = a;
  }
  out.prune();
  return out;
}

namespace detail {

// Row-major index of the target sub-basis (first target most significant).
inline int local_index(const BasisVector& bv, const std::vector<int>& targets,
                       const SystemLayout& layout) {
  int idx = 0;
  for (int t : targets) idx = idx * layout.local_dim(t) + bv.values[t];
  return idx;
}

inline void set_local(BasisVector& bv, const std::vector<int>& targets,
                      const SystemLayout& layout, int idx) {
  for (int k = static_cast<int>(targets.size()) - 1; k >= 0; --k) {
    int d = layout.local_dim(targets[k]);
    bv.values[targets[k]] = idx % d;
    idx /= d;
  }
}

inline bool is_unitary(const Eigen::MatrixXcd& u, double tol = kAmpTol) {
  Eigen::MatrixXcd prod = u.adjoint() * u;
  return (prod - Eigen::MatrixXcd::Identity(u.rows(), u.cols()))
             .cwiseAbs()
             .maxCoeff() <= tol;
}

}  // namespace detail

inline JointState apply_unitary(const JointState& state,
                                const std::vector<std::string>& targets,
                                const Eigen::MatrixXcd& matrix) {
  std::vector<int> idx;
  long dim = 1;
  for (const auto& t : targets) {
    int i = state.layout.index_of(t);
    idx.push_back(i);
    dim *= state.layout.local_dim(i);
  }
  if (matrix.rows() != dim || matrix.cols() != dim)
    throw Error("unitary dimension " + std::to_string(matrix.rows()) +
                " does not match local basis dimension " + std::to_string(dim));
  if (!detail::is_unitary(matrix)) throw NotUnitary();

  JointState out;
  out.layout = state.layout;
  for (const auto& [bv, a] : state.amplitudes) {
    int col = detail::local_index(bv, idx, state.layout);
    for (int row = 0; row < dim; ++row) {
      Amp c = matrix(row, col);
      if (std::abs(c) < kPruneTol) continue;
      BasisVector nb = bv;
      detail::set_local(nb, idx, state.layout, row);
      out.amplitudes[nb] += c * a;
    }
  }
  out.prune();
  return out;
}

inline DensityMatrix reduced_density_matrix(const JointState& state,
                                            const std::vector<std::string>& keep) {
  std::vector<int> kidx;
  for (const auto& k : keep) kidx.push_back(state.layout.index_of(k));

  DensityMatrix rho;
  rho.sub_layout.photon_budget = state.layout.photon_budget;
  long dim = 1;
  for (int i : kidx) {
    rho.sub_layout.slots.push_back(state.layout.slots[i]);
    dim *= state.layout.local_dim(i);
  }

  // Group the support by traced-out part; each group contributes an outer
  // product of its kept-part amplitude vector.
  std::vector<int> rest;
  for (int i = 0; i < state.layout.size(); ++i)
    if (std::find(kidx.begin(), kidx.end(), i) == kidx.end()) rest.push_back(i);

  std::map<std::vector<int>, std::vector<std::pair<int, Amp>>> groups;
  for (const auto& [bv, a] : state.amplitudes) {
    std::vector<int> r;
    for (int i : rest) r.push_back(bv.values[i]);
    groups[r].emplace_back(detail::local_index(bv, kidx, state.layout), a);
  }

  rho.entries = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& [r, entries] : groups)
    for (const auto& [i, ai] : entries)
      for (const auto& [j, aj] : entries)
        rho.entries(i, j) += ai * std::conj(aj);
  return rho;
}

inline DensityMatrix mixture_density_matrix(
    const std::vector<std::pair<double, JointState>>& components,
    const std::vector<std::string>& keep) {
  if (components.empty()) throw WeightMismatch("empty mixture");
  double total = 0;
  for (const auto& [w, s] : components) {
    if (w < 0) throw WeightMismatch("negative weight");
    total += w;
    if (!(s.layout == components.front().second.layout)) throw LayoutMismatch();
  }
  if (std::abs(total - 1.0) > kAmpTol)
    throw WeightMismatch("weights sum to " + std::to_string(total));
  DensityMatrix rho = reduced_density_matrix(components.front().second, keep);
  rho.entries *= components.front().first;
  for (size_t i = 1; i < components.size(); ++i) {
    DensityMatrix r = reduced_density_matrix(components[i].second, keep);
    rho.entries += components[i].first * r.entries;
  }
  return rho;
}

// Reorder slots: new slot i is old slot pi[i]. Amplitudes are relabelled.
inline JointState permute_subsystems(const JointState& state,
                                     const std::vector<int>& pi) {
  int n = state.layout.size();
  if (static_cast<int>(pi.size()) != n) throw InvalidPermutation();
  std::vector<bool> seen(n, false);
  for (int p : pi) {
    if (p < 0 || p >= n || seen[p]) throw InvalidPermutation();
    seen[p] = true;
  }
  JointState out;
  out.layout.photon_budget = state.layout.photon_budget;
  for (int i = 0; i < n; ++i) out.layout.slots.push_back(state.layout.slots[pi[i]]);
  for (const auto& [bv, a] : state.amplitudes) {
    BasisVector nb;
    nb.values.resize(n);
    for (int i = 0; i < n; ++i) nb.values[i] = bv.values[pi[i]];
    out.amplitudes[nb] = a;
  }
  return out;
}

// Reorder by slot names; convenience wrapper over permute_subsystems.
inline JointState reorder_to(const JointState& state,
                             const std::vector<std::string>& names) {
  std::vector<int> pi;
  for (const auto& n : names) pi.push_back(state.layout.index_of(n));
  if (static_cast<int>(pi.size()) != state.layout.size())
    throw InvalidPermutation();
  return permute_subsystems(state, pi);
}

}  // namespace cqpv
