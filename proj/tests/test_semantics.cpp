#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cqpv/parser.hpp"
#include "cqpv/semantics.hpp"

using namespace cqpv;

namespace {

ProcessPtr proc(const std::string& src) { return parse_process_text(src); }

const MixedConfig& mixed(const Config& c) { return std::get<MixedConfig>(c); }
const ProbConfig& probc(const Config& c) { return std::get<ProbConfig>(c); }

// environment that sends one qubit |psi> = a0|0> + a1|1> on channel `chan`
EnvironmentSchedule qubit_env(const std::string& chan, const std::string& qname,
                              Amp a0, Amp a1) {
  SystemLayout lay;
  lay.slots = {{qname, SlotKind::Qubit}};
  AmpMap m;
  if (std::abs(a0) > 0) m[BasisVector{{0}}] = a0;
  if (std::abs(a1) > 0) m[BasisVector{{1}}] = a1;
  Injection inj;
  inj.qnames = {qname};
  inj.fragment = inject_photon_pair_state(lay, m);
  inj.fragment_tag = "frag-" + qname;
  EnvironmentSchedule env;
  env.inputs[chan] = {inj};
  return env;
}

double weight_sum(const MixedConfig& mc) { return mc.total_weight(); }

}  // namespace

TEST_CASE("nil process gives a single terminal node") {
  auto g = explore(proc("0"), Semantics{});
  CHECK(g.nodes.size() == 1);
  CHECK(g.edges.empty());
  CHECK(g.nodes[0].terminal_n);
  CHECK_FALSE(g.nodes[0].deadlock);
}

TEST_CASE("restriction blocks visible transitions") {
  auto g = explore(proc("(new c:^[Int])c![1].0"), Semantics{});
  CHECK(g.nodes.size() == 1);
  CHECK(g.edges.empty());
  CHECK(g.nodes[0].deadlock);
}

TEST_CASE("qubit declaration allocates in the vacuum state") {
  Semantics sem;
  auto steps = sem.step(Config(Semantics::initial(proc("(qbit x){x *= H}.0"))));
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.kind == Label::Kind::Tau);
  const auto& mc = mixed(steps[0].second);
  REQUIRE(mc.components.size() == 1);
  CHECK(mc.components[0].sigma.layout.slots[0].name == "x");
  CHECK(mc.components[0].sigma.amplitudes.at(BasisVector{{0}}) == Amp(1, 0));
  CHECK(mc.omega == std::vector<std::string>{"x"});
}

TEST_CASE("measurement output groups into a probabilistic configuration") {
  // H then measure: outcome set {0,1} with equal weights
  auto term = proc("(qbit q){q *= H}.c![measure q].0");
  auto g = explore(term, Semantics{});
  // nodes: initial, post-alloc, post-H, prob node, two branches
  int prob_nodes = 0;
  for (const auto& n : g.nodes) prob_nodes += n.probabilistic;
  CHECK(prob_nodes == 1);
  bool saw_out = false;
  for (const auto& e : g.edges) {
    if (e.label.kind == Label::Kind::Out) {
      saw_out = true;
      CHECK(e.label.chan == "c");
      REQUIRE(e.label.value_set.size() == 2);
      CHECK(e.label.value_set[0][0].i == 0);
      CHECK(e.label.value_set[1][0].i == 1);
      const auto& pc = probc(g.nodes[e.to].config);
      REQUIRE(pc.branches.size() == 2);
      CHECK(pc.branches[0].prob == doctest::Approx(0.5));
      CHECK(pc.branches[1].prob == doctest::Approx(0.5));
    }
    if (e.label.kind == Label::Kind::Prob)
      CHECK((e.label.prob == doctest::Approx(0.5)));
  }
  CHECK(saw_out);
}

TEST_CASE("internal communication keeps the mixture unresolved") {
  // the receiver learns the measured bit, but no probabilistic split happens
  auto term = proc(
      "(new u:^[Int])((qbit q){q *= H}.u![measure q].0 | u?[x:Int].out![x].0)");
  Semantics sem;
  MixedConfig c = Semantics::initial(term);
  // alloc, H, then the only step should be the internal communication
  for (int i = 0; i < 3; ++i) {
    auto steps = sem.step(Config(c));
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].first.kind == Label::Kind::Tau);
    c = mixed(steps[0].second);
  }
  // mixture now has two components carrying different values for x
  REQUIRE(c.components.size() == 2);
  CHECK(weight_sum(c) == doctest::Approx(1.0));
  REQUIRE(c.bound_vars.size() == 1);
  CHECK(c.components[0].values[0].i + c.components[1].values[0].i == 1);

  // the final output resolves it probabilistically
  auto steps = sem.step(Config(c));
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.kind == Label::Kind::Out);
  const auto& pc = probc(steps[0].second);
  REQUIRE(pc.branches.size() == 2);
  CHECK(pc.branches[0].prob == doctest::Approx(0.5));
}

TEST_CASE("environment injection binds quantum names") {
  auto term = proc("a?[p:Qbit].{p *= H}.out![measure p].0");
  double r = 1 / std::sqrt(2.0);
  Semantics sem(qubit_env("a", "q1", r, r));
  auto steps = sem.step(Config(Semantics::initial(term)));
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.kind == Label::Kind::In);
  CHECK(steps[0].first.chan == "a");
  CHECK(steps[0].first.qnames == std::vector<std::string>{"q1"});
  const auto& mc = mixed(steps[0].second);
  CHECK(mc.omega == std::vector<std::string>{"q1"});
  CHECK(mc.components[0].sigma.layout.has("q1"));

  // H on |+> gives |0>, so the measurement output is deterministic
  auto outcomes = run_deterministic(term, sem);
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].prob == doctest::Approx(1.0));
  CHECK(outcomes[0].outputs[0].second[0].i == 0);
}

TEST_CASE("injection is only available once") {
  auto term = proc("a?[p:Qbit].a?[s:Qbit].0");
  Semantics sem(qubit_env("a", "q1", 1, 0));
  auto g = explore(term, sem);
  // after the single injection the second input has no supplier
  int in_edges = 0;
  for (const auto& e : g.edges) in_edges += e.label.kind == Label::Kind::In;
  CHECK(in_edges == 1);
  bool saw_stuck = false;
  for (const auto& n : g.nodes) saw_stuck |= n.deadlock;
  CHECK(saw_stuck);
}

TEST_CASE("entangled fragment enters sigma once, names stay with the environment") {
  // two entangled qubits; only qa is handed over on channel a
  SystemLayout lay;
  lay.slots = {{"qa", SlotKind::Qubit}, {"qb", SlotKind::Qubit}};
  AmpMap m;
  double r = 1 / std::sqrt(2.0);
  m[BasisVector{{0, 0}}] = r;
  m[BasisVector{{1, 1}}] = r;
  Injection inj;
  inj.qnames = {"qa"};
  inj.fragment = inject_photon_pair_state(lay, m);
  inj.fragment_tag = "bell";
  EnvironmentSchedule env;
  env.inputs["a"] = {inj};

  auto term = proc("a?[p:Qbit].{p *= H}.c![measure p].0");
  Semantics sem(env);
  auto g = explore(term, sem);

  // every tau step must leave the environment's reduced state untouched
  int checked = 0;
  for (const auto& e : g.edges) {
    if (e.label.kind != Label::Kind::Tau) continue;
    const auto& before = mixed(g.nodes[e.from].config);
    const auto& after = mixed(g.nodes[e.to].config);
    std::vector<std::string> outside;
    for (const auto& s : before.components[0].sigma.layout.slots)
      if (std::find(before.omega.begin(), before.omega.end(), s.name) ==
          before.omega.end())
        outside.push_back(s.name);
    if (outside.empty()) continue;
    std::vector<std::pair<double, JointState>> cb, ca;
    for (const auto& c : before.components) cb.emplace_back(c.weight, c.sigma);
    for (const auto& c : after.components) ca.emplace_back(c.weight, c.sigma);
    auto rb = mixture_density_matrix(cb, outside);
    auto ra = mixture_density_matrix(ca, outside);
    CHECK(DensityMatrix::approx_equal(rb, ra, kRhoTol));
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("PS conversion rewrites the qubit into a dual-rail pair") {
  auto term = proc("a?[q0:Qbit].{s0:NS, s1:NS *= PS(q0)}.c![s0].d![s1].0");
  double a0 = 0.6, a1 = 0.8;
  Semantics sem(qubit_env("a", "q1", a0, a1));
  MixedConfig c = Semantics::initial(term);
  c = mixed(sem.step(Config(c))[0].second);  // injection
  auto steps = sem.step(Config(c));
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].first.kind == Label::Kind::Tau);
  const auto& mc = mixed(steps[0].second);
  const auto& sigma = mc.components[0].sigma;
  CHECK_FALSE(sigma.layout.has("q1"));
  REQUIRE(sigma.layout.has("q1a"));
  REQUIRE(sigma.layout.has("q1b"));
  CHECK(std::abs(sigma.amplitudes.at(BasisVector{{1, 0}}) - a0) < 1e-12);
  CHECK(std::abs(sigma.amplitudes.at(BasisVector{{0, 1}}) - a1) < 1e-12);
  CHECK(mc.omega == std::vector<std::string>{"q1a", "q1b"});

  // sending the rails drops them from omega
  auto s2 = sem.step(Config(mc));
  REQUIRE(s2.size() == 1);
  const auto& pc = probc(s2[0].second);
  REQUIRE(pc.branches.size() == 1);
  CHECK(pc.branches[0].prob == doctest::Approx(1.0));
  CHECK(pc.branches[0].config.omega == std::vector<std::string>{"q1b"});
}

TEST_CASE("post-selective measurement renormalizes over the mixture") {
  // inject a dual-rail pair in a state with a photon-bunching part:
  // 1/3|10> + sqrt(2)/3|01> + sqrt(6)/3|20>
  SystemLayout lay;
  lay.slots = {{"m0", SlotKind::Mode}, {"m1", SlotKind::Mode}};
  AmpMap m;
  m[BasisVector{{1, 0}}] = 1.0 / 3;
  m[BasisVector{{0, 1}}] = std::sqrt(2.0) / 3;
  m[BasisVector{{2, 0}}] = std::sqrt(6.0) / 3;
  Injection inj;
  inj.qnames = {"m0", "m1"};
  inj.fragment = inject_photon_pair_state(lay, m);
  inj.fragment_tag = "pair";
  EnvironmentSchedule env;
  env.inputs["a"] = {inj};

  auto term = proc("a?[s0:NS, s1:NS].u![psmeasure s0, s1].0");
  Semantics sem(env);
  auto outcomes = run_deterministic(term, sem);
  REQUIRE(outcomes.size() == 2);
  std::map<long, double> dist;
  for (const auto& o : outcomes) dist[o.outputs[0].second[0].i] += o.prob;
  CHECK(dist[0] == doctest::Approx(1.0 / 3));
  CHECK(dist[1] == doctest::Approx(2.0 / 3));
}

TEST_CASE("choice resolves when one branch moves") {
  auto term = proc("(qbit x){x *= H}.0 + c![1].0");
  Semantics sem;
  auto steps = sem.step(Config(Semantics::initial(term)));
  REQUIRE(steps.size() == 2);
  // tau branch discards the output alternative
  const auto& mc = mixed(steps[0].second);
  CHECK(print_process(mc.term) == "{x *= H}.0");
  // output branch discards the tau alternative
  CHECK(steps[1].first.kind == Label::Kind::Out);
}

TEST_CASE("weight and probability conservation across a whole graph") {
  auto term = proc(
      "(new u:^[Int])((qbit q){q *= H}.(qbit p){q *= U19}.u![measure q].0 "
      "| u?[x:Int].out![x + 1].0)");
  auto g = explore(term, Semantics{});
  for (const auto& n : g.nodes) {
    if (std::holds_alternative<MixedConfig>(n.config)) {
      CHECK(weight_sum(mixed(n.config)) == doctest::Approx(1.0).epsilon(1e-9));
    } else {
      double p = 0;
      for (const auto& br : probc(n.config).branches) p += br.prob;
      CHECK(p == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("interleaving order does not change the terminal distribution") {
  auto term = proc(
      "(new u, v:^[Int])"
      "((qbit q){q *= H}.u![measure q].0 | (qbit p){p *= H}.v![measure p].0 "
      "| u?[x:Int].v?[y:Int].out![x + y].0)");
  Semantics sem;
  auto first = terminal_distribution(run_deterministic(term, sem));
  RunHooks last_hooks;
  last_hooks.choose = [](const std::vector<detail::Offer>& os) {
    return os.size() - 1;
  };
  auto last = terminal_distribution(run_deterministic(term, sem, last_hooks));
  REQUIRE(first.size() == last.size());
  for (const auto& [k, p] : first) {
    REQUIRE(last.count(k));
    CHECK(last[k] == doctest::Approx(p));
  }
  CHECK(first.at("out=1;") == doctest::Approx(0.5));
  CHECK(first.at("out=0;") == doctest::Approx(0.25));
  CHECK(first.at("out=2;") == doctest::Approx(0.25));
}

TEST_CASE("expression actions evaluate classical redexes") {
  auto term = proc("{2 + 3}.{if 5 = 5 then 1 else 0}.0");
  auto g = explore(term, Semantics{});
  CHECK(g.nodes.size() == 3);
  CHECK(g.edges.size() == 2);
  for (const auto& e : g.edges) CHECK(e.label.kind == Label::Kind::Tau);
}

TEST_CASE("stuck expressions raise") {
  auto term = proc("{1 + true}.0");
  Semantics sem;
  CHECK_THROWS_AS(sem.step(Config(Semantics::initial(term))), StuckExpression);
}

TEST_CASE("node limit is enforced") {
  auto term = proc(
      "(qbit a)(qbit b)((new u:^[Int])(u![1].0 | u?[x:Int].0) | {a *= H}.{b *= H}.0)");
  ExploreLimits limits;
  limits.max_nodes = 2;
  CHECK_THROWS_AS(explore(term, Semantics{}, limits), LimitExceeded);
}
