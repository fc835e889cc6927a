#pragma once

// Probabilistic branching bisimilarity checker.
//
// Both terms are explored into finite transition graphs under the same
// environment schedule, then a signature-based partition refinement runs
// over the union of the two node sets.  Internal moves are treated as
// inert while they stay inside an equivalence class; distributions
// reached by outputs are compared branch by branch: the value groups,
// their probabilities, and the reduced state visible to the environment
// must all agree within tolerance.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cqpv/quantum_state.hpp"
#include "cqpv/semantics.hpp"

namespace cqpv {

struct EquivOptions {
  double tol = 1e-6;
  ExploreLimits limits;
};

struct Verdict {
  bool equivalent = true;
  std::string reason;                  // human-readable mismatch description
  std::vector<std::string> trace;      // labels leading to the mismatch
  int nodes_left = 0, nodes_right = 0;
};

class EquivalenceChecker {
 public:
  explicit EquivalenceChecker(EquivOptions opts = {}) : opts_(opts) {}

  Verdict check(const ProcessPtr& left, const ProcessPtr& right,
                const EnvironmentSchedule& env) const {
    Semantics sem(env);
    LTSGraph ga = explore(left, sem, opts_.limits);
    LTSGraph gb = explore(right, sem, opts_.limits);
    return compare(ga, gb);
  }

  Verdict compare(const LTSGraph& ga, const LTSGraph& gb) const {
    Workspace w;
    build(w, ga, 0);
    int offset = static_cast<int>(w.nodes.size());
    build(w, gb, offset);
    refine(w);

    Verdict v;
    v.nodes_left = static_cast<int>(ga.nodes.size());
    v.nodes_right = static_cast<int>(gb.nodes.size());
    int ia = ga.initial, ib = offset + gb.initial;
    if (w.cls[ia] == w.cls[ib]) return v;
    v.equivalent = false;
    explain(w, ia, ib, v);
    return v;
  }

 private:
  struct Entry {                    // one observable move in a signature
    std::string key;                // label text (channel, values)
    int cls;                        // class of the target node
    std::optional<DensityMatrix> dm;  // transmitted-name reduced state
  };

  struct Branch {                   // one branch of a distribution node
    std::string values;
    double prob;
    int to;
    DensityMatrix rho_env;
  };

  struct RegularEdge {
    Label label;
    int to;
    std::optional<DensityMatrix> sent;  // reduced state of transmitted names
  };

  struct Node {
    bool probabilistic = false;
    std::vector<RegularEdge> edges;  // regular nodes
    std::vector<Branch> branches;    // distribution nodes
    DensityMatrix rho_env;
  };

  struct Workspace {
    std::vector<Node> nodes;
    std::vector<int> cls;
  };

  EquivOptions opts_;

  static std::string values_str(const std::vector<Value>& vs) {
    std::string s;
    for (size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + vs[i].str();
    return s;
  }

  static std::string label_key(const Label& l) {
    switch (l.kind) {
      case Label::Kind::Tau: return "tau";
      case Label::Kind::In: return "in " + l.chan + "?(" + values_str(l.values) + ")";
      case Label::Kind::Out: {
        std::string s = "out " + l.chan + "!{";
        for (size_t j = 0; j < l.value_set.size(); ++j)
          s += (j ? "|" : "") + values_str(l.value_set[j]);
        return s + "}";
      }
      case Label::Kind::Prob: return "prob";
    }
    return "?";
  }

  static DensityMatrix env_density(const MixedConfig& mc,
                                   const std::vector<std::string>& keep) {
    std::vector<std::pair<double, JointState>> comps;
    double total = mc.total_weight();
    for (const auto& c : mc.components)
      comps.emplace_back(c.weight / total, c.sigma);
    return mixture_density_matrix(comps, keep);
  }

  static DensityMatrix rho_env_of(const MixedConfig& mc) {
    if (mc.components.empty()) {
      DensityMatrix unit;
      unit.entries = Eigen::MatrixXcd::Ones(1, 1);
      return unit;
    }
    const SystemLayout& lay = mc.components.front().sigma.layout;
    std::vector<std::string> env_names;
    for (const auto& s : lay.slots)
      if (std::find(mc.omega.begin(), mc.omega.end(), s.name) == mc.omega.end())
        env_names.push_back(s.name);
    std::sort(env_names.begin(), env_names.end());
    return env_density(mc, env_names);
  }

  void build(Workspace& w, const LTSGraph& g, int offset) const {
    for (const auto& gn : g.nodes) {
      Node n;
      n.probabilistic = gn.probabilistic;
      if (n.probabilistic) {
        const auto& pc = std::get<ProbConfig>(gn.config);
        for (const auto& br : pc.branches) {
          Branch b;
          b.values = values_str(br.values);
          b.prob = br.prob;
          b.rho_env = rho_env_of(br.config);
          b.to = -1;  // filled from the edges below
          n.branches.push_back(std::move(b));
        }
      } else {
        n.rho_env = rho_env_of(std::get<MixedConfig>(gn.config));
      }
      w.nodes.push_back(std::move(n));
    }
    for (size_t id = 0; id < g.nodes.size(); ++id) {
      for (int eid : g.out_edges[id]) {
        const auto& e = g.edges[eid];
        if (e.label.kind == Label::Kind::Prob) {
          // attach the branch target; branches and edges share the order
          // produced by the semantics, match them by probability and values
          auto& branches = w.nodes[offset + id].branches;
          const auto& pc = std::get<ProbConfig>(g.nodes[id].config);
          for (size_t j = 0; j < pc.branches.size(); ++j) {
            if (branches[j].to >= 0) continue;
            if (std::abs(pc.branches[j].prob - e.label.prob) < 1e-12 &&
                canonical_key(Config(pc.branches[j].config)) ==
                    g.nodes[e.to].key) {
              branches[j].to = offset + e.to;
              break;
            }
          }
        } else {
          RegularEdge re{e.label, offset + e.to, std::nullopt};
          if (e.label.kind == Label::Kind::Out && !e.label.qnames.empty())
            re.sent = env_density(std::get<MixedConfig>(g.nodes[id].config),
                                  e.label.qnames);
          w.nodes[offset + id].edges.push_back(std::move(re));
        }
      }
    }
    for (auto& n : w.nodes)
      for (auto& b : n.branches)
        if (n.probabilistic && b.to < 0)
          throw Error("distribution branch without a target node");
  }

  // Signature of a regular node: the observable moves reachable through
  // inert internal steps (steps that stay inside the node's own class).
  std::vector<Entry> signature(const Workspace& w, int n) const {
    std::vector<Entry> out;
    std::set<int> seen;
    std::vector<int> stack = {n};
    seen.insert(n);
    while (!stack.empty()) {
      int m = stack.back();
      stack.pop_back();
      for (const auto& edge : w.nodes[m].edges) {
        if (edge.label.kind == Label::Kind::Tau && w.cls[edge.to] == w.cls[n]) {
          if (seen.insert(edge.to).second) stack.push_back(edge.to);
          continue;
        }
        Entry e;
        e.key = label_key(edge.label);
        e.cls = w.cls[edge.to];
        e.dm = edge.sent;
        out.push_back(std::move(e));
      }
    }
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
      return std::tie(a.key, a.cls) < std::tie(b.key, b.cls);
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Entry& a, const Entry& b) {
                            return a.key == b.key && a.cls == b.cls;
                          }),
              out.end());
    return out;
  }

  bool same_signature(const std::vector<Entry>& a,
                      const std::vector<Entry>& b) const {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i].key != b[i].key || a[i].cls != b[i].cls) return false;
      if (a[i].dm.has_value() != b[i].dm.has_value()) return false;
      if (a[i].dm &&
          !DensityMatrix::approx_equal(*a[i].dm, *b[i].dm, opts_.tol))
        return false;
    }
    return true;
  }

  // Distribution signature: value group -> (probability, class, env state).
  struct ProbSig {
    std::vector<std::tuple<std::string, double, int>> branches;
    std::vector<const DensityMatrix*> rho;
  };

  ProbSig prob_signature(const Workspace& w, int n) const {
    ProbSig s;
    std::vector<size_t> order(w.nodes[n].branches.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
      return w.nodes[n].branches[i].values < w.nodes[n].branches[j].values;
    });
    for (size_t i : order) {
      const auto& b = w.nodes[n].branches[i];
      s.branches.emplace_back(b.values, b.prob, w.cls[b.to]);
      s.rho.push_back(&b.rho_env);
    }
    return s;
  }

  bool same_prob_signature(const ProbSig& a, const ProbSig& b) const {
    if (a.branches.size() != b.branches.size()) return false;
    for (size_t i = 0; i < a.branches.size(); ++i) {
      if (std::get<0>(a.branches[i]) != std::get<0>(b.branches[i])) return false;
      if (std::abs(std::get<1>(a.branches[i]) - std::get<1>(b.branches[i])) >
          opts_.tol)
        return false;
      if (std::get<2>(a.branches[i]) != std::get<2>(b.branches[i])) return false;
      if (!DensityMatrix::approx_equal(*a.rho[i], *b.rho[i], opts_.tol))
        return false;
    }
    return true;
  }

  void refine(Workspace& w) const {
    size_t n = w.nodes.size();
    w.cls.assign(n, 0);
    for (size_t i = 0; i < n; ++i)
      if (w.nodes[i].probabilistic) w.cls[i] = 1;

    bool changed = true;
    while (changed) {
      changed = false;
      // group nodes by current class
      std::map<int, std::vector<int>> blocks;
      for (size_t i = 0; i < n; ++i) blocks[w.cls[i]].push_back((int)i);

      std::vector<int> next(n, -1);
      int next_id = 0;
      for (auto& [cls, members] : blocks) {
        // cluster members of the block by signature equality
        std::vector<int> reps;
        std::vector<std::vector<Entry>> rep_sigs;
        std::vector<ProbSig> rep_psigs;
        for (int m : members) {
          bool is_prob = w.nodes[m].probabilistic;
          std::vector<Entry> sig;
          ProbSig psig;
          if (is_prob)
            psig = prob_signature(w, m);
          else
            sig = signature(w, m);
          int found = -1;
          for (size_t r = 0; r < reps.size(); ++r) {
            if (w.nodes[reps[r]].probabilistic != is_prob) continue;
            bool same = is_prob ? same_prob_signature(psig, rep_psigs[r])
                                : same_signature(sig, rep_sigs[r]);
            if (same) {
              found = static_cast<int>(r);
              break;
            }
          }
          if (found < 0) {
            found = static_cast<int>(reps.size());
            reps.push_back(m);
            rep_sigs.push_back(std::move(sig));
            rep_psigs.push_back(std::move(psig));
            next[m] = next_id + found;
          } else {
            next[m] = next_id + found;
          }
        }
        if (reps.size() > 1) changed = true;
        next_id += static_cast<int>(reps.size());
      }
      w.cls = std::move(next);
    }
  }

  // Build a human-readable mismatch description by descending through the
  // first differing move.
  void explain(const Workspace& w, int a, int b, Verdict& v, int depth = 0) const {
    if (depth > 64) {
      v.reason = "classes differ (descent limit reached)";
      return;
    }
    const Node& na = w.nodes[a];
    const Node& nb = w.nodes[b];
    if (na.probabilistic != nb.probabilistic) {
      v.reason = "one side reaches an output distribution, the other does not";
      return;
    }
    if (na.probabilistic) {
      auto sa = prob_signature(w, a);
      auto sb = prob_signature(w, b);
      if (sa.branches.size() != sb.branches.size()) {
        v.reason = "output value groups differ in number";
        return;
      }
      for (size_t i = 0; i < sa.branches.size(); ++i) {
        auto [va, pa, ca] = sa.branches[i];
        auto [vb, pb, cb] = sb.branches[i];
        if (va != vb) {
          v.reason = "output values differ: " + va + " vs " + vb;
          return;
        }
        if (std::abs(pa - pb) > opts_.tol) {
          std::ostringstream os;
          os << "branch " << va << " has probability " << pa << " vs " << pb;
          v.reason = os.str();
          return;
        }
        if (!DensityMatrix::approx_equal(*sa.rho[i], *sb.rho[i], opts_.tol)) {
          v.reason = "branch " + va + " leaves different environment states";
          return;
        }
        if (ca != cb) {
          v.trace.push_back("branch " + va);
          int ta = -1, tb = -1;
          for (const auto& br : na.branches)
            if (br.values == va) ta = br.to;
          for (const auto& br : nb.branches)
            if (br.values == va) tb = br.to;
          explain(w, ta, tb, v, depth + 1);
          return;
        }
      }
      v.reason = "distribution nodes differ";
      return;
    }
    auto sa = signature(w, a);
    auto sb = signature(w, b);
    auto find = [](const std::vector<Entry>& s, const std::string& key,
                   int cls) {
      for (const auto& e : s)
        if (e.key == key && e.cls == cls) return true;
      return false;
    };
    auto has_key = [](const std::vector<Entry>& s, const std::string& key) {
      for (const auto& e : s)
        if (e.key == key) return true;
      return false;
    };
    const std::pair<const std::vector<Entry>*, const std::vector<Entry>*>
        dirs[2] = {{&sa, &sb}, {&sb, &sa}};
    for (const auto& pair : dirs) {
      bool swapped = pair.first == &sb;
      for (const auto& e : *pair.first) {
        if (find(*pair.second, e.key, e.cls)) continue;
        if (!has_key(*pair.second, e.key)) {
          v.reason = std::string(swapped ? "right" : "left") + " side offers " +
                     e.key + ", the other side cannot match it";
          v.trace.push_back(e.key);
          return;
        }
        // same label, different continuation class: descend
        int ta = -1, tb = -1;
        descend_target(w, swapped ? b : a, e.key, e.cls, ta);
        descend_any(w, swapped ? a : b, e.key, tb);
        if (ta >= 0 && tb >= 0) {
          v.trace.push_back(e.key);
          if (swapped) std::swap(ta, tb);
          explain(w, ta, tb, v, depth + 1);
          return;
        }
      }
    }
    v.reason = "internal branching structure differs";
  }

  // Find a target of class `cls` reachable from n via an edge labelled `key`
  // after inert internal steps.
  void descend_target(const Workspace& w, int n, const std::string& key,
                      int cls, int& out) const {
    std::set<int> seen{n};
    std::vector<int> stack{n};
    while (!stack.empty()) {
      int m = stack.back();
      stack.pop_back();
      for (const auto& edge : w.nodes[m].edges) {
        if (edge.label.kind == Label::Kind::Tau && w.cls[edge.to] == w.cls[n]) {
          if (seen.insert(edge.to).second) stack.push_back(edge.to);
          continue;
        }
        if (label_key(edge.label) == key && w.cls[edge.to] == cls) {
          out = edge.to;
          return;
        }
      }
    }
  }

  void descend_any(const Workspace& w, int n, const std::string& key,
                   int& out) const {
    std::set<int> seen{n};
    std::vector<int> stack{n};
    while (!stack.empty()) {
      int m = stack.back();
      stack.pop_back();
      for (const auto& edge : w.nodes[m].edges) {
        if (edge.label.kind == Label::Kind::Tau && w.cls[edge.to] == w.cls[n]) {
          if (seen.insert(edge.to).second) stack.push_back(edge.to);
          continue;
        }
        if (label_key(edge.label) == key) {
          out = edge.to;
          return;
        }
      }
    }
  }
};

}  // namespace cqpv
