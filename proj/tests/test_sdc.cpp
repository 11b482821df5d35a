#include <doctest.h>

#include <cmath>
#include <sstream>

#include "endqt/sdc.hpp"

using namespace endqt;
using namespace endqt::sdc;

namespace {

ChainConfig worked_config() {
  ChainConfig cfg;
  cfg.num_layers = 4;
  cfg.last_layer_count = 5;
  cfg.group_size = 30;
  cfg.step_duration = 0.6;
  cfg.seed = 42;
  return cfg;
}

ChainConfig tiny_config(int layers, std::int64_t last, int g) {
  ChainConfig cfg;
  cfg.num_layers = layers;
  cfg.last_layer_count = last;
  cfg.group_size = g;
  cfg.step_duration = 0.5;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("layer sizes expand by the group size") {
  auto cfg = worked_config();
  CHECK(layer_size(cfg, 3) == 5);
  CHECK(layer_size(cfg, 2) == 150);
  CHECK(layer_size(cfg, 1) == 4500);
  CHECK(layer_size(cfg, 0) == 135000);
  CHECK_THROWS(layer_size(cfg, 4));
  CHECK_THROWS(layer_size(cfg, -1));

  auto small = tiny_config(2, 1, 1);
  CHECK(layer_size(small, 0) == 1);
  CHECK(layer_size(small, 1) == 1);
}

TEST_CASE("event count reproduces the worked total") {
  CHECK(count_events(worked_config()) == 139655);
  CHECK(count_events(tiny_config(2, 1, 1)) == 2);
  // direct summation: 2 * (1 + 3 + 9)
  CHECK(count_events(tiny_config(3, 2, 3)) == 26);
}

TEST_CASE("edge and interaction counts expose the other readings") {
  auto cfg = worked_config();
  CHECK(edge_count(cfg) == 139650);
  CHECK(interaction_count(cfg) == 4655);
}

TEST_CASE("node cap rejects oversized configurations") {
  auto cfg = worked_config();
  cfg.num_layers = 8;
  CHECK_THROWS(count_events(cfg));
  CHECK_THROWS(build_graph(cfg));
}

TEST_CASE("small graph structure") {
  auto cfg = tiny_config(2, 1, 2);
  auto g = build_graph(cfg);
  CHECK(g.nodes.size() == 3);
  CHECK(g.edges.size() == 2);
  CHECK(g.nodes[0].is_initiator);
  CHECK(g.nodes[1].is_initiator);
  CHECK_FALSE(g.nodes[2].is_initiator);
  CHECK(g.nodes[0].has_dc_for == g.node_id(1, 1));
  CHECK(validate_cdc(g).empty());
}

TEST_CASE("worked graph has the published node count and validates") {
  auto g = build_graph(worked_config());
  CHECK(g.nodes.size() == 139655);
  CHECK(g.edges.size() == 139650);
  CHECK(validate_cdc(g).empty());
}

TEST_CASE("validator flags a missing parent group") {
  auto cfg = tiny_config(3, 1, 2);
  auto g = build_graph(cfg);
  // drop one edge into the layer-2 node
  auto target = g.node_id(2, 1);
  for (auto it = g.edges.begin(); it != g.edges.end(); ++it) {
    if (it->second == target) {
      g.edges.erase(it);
      break;
    }
  }
  auto violations = validate_cdc(g);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "CDC4");
  CHECK(violations[0].node == target);
}

TEST_CASE("validator flags a stray initiator") {
  auto g = build_graph(tiny_config(3, 1, 2));
  g.nodes[g.node_id(1, 1)].is_initiator = true;
  auto violations = validate_cdc(g);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "CDC3");
}

TEST_CASE("validator flags a layer-skipping edge and broken parity") {
  auto g = build_graph(tiny_config(3, 1, 2));
  g.edges[0].second = g.node_id(2, 1);
  g.layers[1].step_basis = Basis::z;
  auto violations = validate_cdc(g);
  bool saw_cdc1 = false, saw_basis = false;
  for (auto& v : violations) {
    saw_cdc1 |= v.rule == "CDC1";
    saw_basis |= v.rule == "basis";
  }
  CHECK(saw_cdc1);
  CHECK(saw_basis);
}

TEST_CASE("degenerate Born weights pin the target value") {
  auto cfg = tiny_config(2, 1, 4);
  cfg.target_p_plus = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    auto log = simulate_chain(cfg);
    for (const auto& e : log.events) CHECK(e.target_value == 1.0);
  }
}

TEST_CASE("layer-1 outcome frequencies are balanced") {
  auto cfg = tiny_config(2, 1, 20);
  int plus = 0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    auto log = simulate_chain(cfg);
    if (log.events.front().target_value > 0) ++plus;
  }
  CHECK(std::abs(plus / double(seeds) - 0.5) < 0.05);
}

TEST_CASE("single-step Born consistency over many seeds") {
  auto cfg = tiny_config(2, 1, 1);
  cfg.target_p_plus = 0.3;
  int plus = 0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    auto log = simulate_chain(cfg);
    if (log.events.front().target_value > 0) ++plus;
  }
  CHECK(std::abs(plus / double(seeds) - 0.3) < 0.02);
}

TEST_CASE("worked chain timing lands the final layer at 1.8 s") {
  auto log = simulate_chain(worked_config());
  REQUIRE_FALSE(log.final_events.empty());
  for (const auto& f : log.final_events) {
    CHECK(f.time == 3 * 0.6);
    CHECK(std::abs(f.time - 1.8) < 1e-12);
  }
  CHECK(log.events.size() == 139650);
  CHECK(log.system_entry_count() == 139655);
}

TEST_CASE("both relata share one spacetime point per event") {
  auto cfg = tiny_config(3, 2, 3);
  auto g = build_graph(cfg);
  auto log = simulate_chain(cfg);
  for (const auto& e : log.events) {
    CHECK(e.position == g.nodes[e.target].position);
    CHECK(e.time == (e.step + 1) * *cfg.step_duration);
  }
  for (const auto& f : log.final_events)
    CHECK(f.position == g.nodes[f.target].position);
}

TEST_CASE("event times increase with layer index") {
  auto log = simulate_chain(tiny_config(4, 2, 3));
  double last_time = 0.0;
  int last_step = 0;
  for (const auto& e : log.events) {
    CHECK(e.step >= last_step);
    CHECK(e.time >= last_time);
    last_step = e.step;
    last_time = e.time;
  }
}

TEST_CASE("identical seeds give identical logs") {
  auto cfg = tiny_config(3, 2, 4);
  auto a = simulate_chain(cfg);
  auto b = simulate_chain(cfg);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].env_value == b.events[i].env_value);
    CHECK(a.events[i].target_value == b.events[i].target_value);
  }
}

TEST_CASE("dissolution truncates the log by layer") {
  auto cfg = worked_config();
  SUBCASE("after layer 0") {
    cfg.dissolve_after_layer = 0;
    auto log = dissolve_at(cfg);
    CHECK(log.events.size() == 135000);
    CHECK(log.final_events.empty());
    for (const auto& e : log.events) CHECK(e.step == 0);
  }
  SUBCASE("after layer 1") {
    cfg.dissolve_after_layer = 1;
    auto log = dissolve_at(cfg);
    CHECK(log.events.size() == 135000 + 4500);
    CHECK(log.final_events.empty());
  }
  SUBCASE("after the last step is vacuous") {
    cfg.dissolve_after_layer = 2;
    auto log = dissolve_at(cfg);
    CHECK(log.events.size() == 139650);
    CHECK(log.final_events.size() == 5);
  }
}

TEST_CASE("dissolved log is a prefix of the full log") {
  auto cfg = tiny_config(4, 1, 3);
  auto full = simulate_chain(cfg);
  cfg.dissolve_after_layer = 1;
  auto cut = dissolve_at(cfg);
  REQUIRE(cut.events.size() < full.events.size());
  for (std::size_t i = 0; i < cut.events.size(); ++i) {
    CHECK(cut.events[i].env == full.events[i].env);
    CHECK(cut.events[i].env_value == full.events[i].env_value);
    CHECK(cut.events[i].target_value == full.events[i].target_value);
  }
}

TEST_CASE("dissolve_at validates its layer") {
  auto cfg = tiny_config(4, 1, 3);
  CHECK_THROWS(dissolve_at(cfg));  // not set
  cfg.dissolve_after_layer = 3;    // == N
  CHECK_THROWS(dissolve_at(cfg));
  cfg.dissolve_after_layer = -1;
  CHECK_THROWS(dissolve_at(cfg));
}

TEST_CASE("timescale ordering check") {
  CHECK(timescale_ordering_check({0.6, 0.6, 0.6}).pass);
  auto bad = timescale_ordering_check({0.6, 0.05});
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.violations.size() == 1);
  CHECK_THROWS(timescale_ordering_check({0.6}));
}

TEST_CASE("per-step decoherence times pass the ordering check") {
  auto cfg = worked_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    auto log = simulate_chain(cfg);
    std::vector<double> times;
    for (const auto& s : log.steps) {
      REQUIRE(s.mean_decoherence_time.has_value());
      times.push_back(*s.mean_decoherence_time);
    }
    CHECK(timescale_ordering_check(times).pass);
  }
}

TEST_CASE("auto delta calibrates to the measured mean") {
  auto cfg = tiny_config(2, 1, 30);
  cfg.step_duration.reset();
  auto log = simulate_chain(cfg);
  CHECK(log.delta > 0.4);
  CHECK(log.delta < 0.8);
}

TEST_CASE("events csv has one row per system") {
  auto cfg = tiny_config(3, 1, 2);
  auto g = build_graph(cfg);
  auto log = simulate_chain(cfg);
  std::ostringstream os;
  write_events_csv(g, log, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "step,time_s,layer,target_id,env_group,target_value,env_value,x,y,z");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == count_events(cfg));
}
