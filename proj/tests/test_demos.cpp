#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dqrise/corpus.hpp"
#include "dqrise/env.hpp"
#include "dqrise/expert.hpp"
#include "dqrise/io.hpp"
#include "dqrise/kmeans.hpp"
#include "dqrise/rng.hpp"

using namespace dqrise;

namespace {

ArmState arm_at(double x, double y, double z, double yaw) {
  ArmState a;
  a.x = x;
  a.y = y;
  a.z = z;
  a.yaw = yaw;
  return a;
}

double silhouette3(const Mat& pts, const std::vector<int>& labels) {
  const int n = static_cast<int>(pts.cols());
  std::vector<std::vector<int>> members(3);
  for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  double total = 0.0;
  int counted = 0;
  for (int i = 0; i < n; ++i) {
    const auto& own = members[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    if (own.size() < 2) continue;
    double a = 0.0;
    for (int j : own)
      if (j != i) a += (pts.col(i) - pts.col(j)).norm();
    a /= static_cast<double>(own.size() - 1);
    double b = 1e18;
    for (int c = 0; c < 3; ++c) {
      const auto& other = members[static_cast<std::size_t>(c)];
      if (c == labels[static_cast<std::size_t>(i)] || other.empty()) continue;
      double m = 0.0;
      for (int j : other) m += (pts.col(i) - pts.col(j)).norm();
      b = std::min(b, m / static_cast<double>(other.size()));
    }
    total += (b - a) / std::max(a, b);
    counted += 1;
  }
  return total / counted;
}

}  // namespace

TEST_CASE("task names round trip") {
  CHECK(task_name(Task::Hooklid) == "hooklid");
  CHECK(task_name(Task::PickPlace) == "pickplace");
  CHECK(task_from_name("hooklid") == Task::Hooklid);
  CHECK(task_from_name("pickplace") == Task::PickPlace);
  CHECK_THROWS_AS(task_from_name("jenga"), std::invalid_argument);
}

TEST_CASE("canonical poses sit inside the unit box with open far from both grips") {
  Hand open = hand_open(), hook = hand_hook(), pinch = hand_pinch();
  for (int j = 0; j < 6; ++j) {
    CHECK(open[j] == doctest::Approx(0.1));
    CHECK(hook[j] >= 0.0);
    CHECK(hook[j] <= 1.0);
    CHECK(pinch[j] >= 0.0);
    CHECK(pinch[j] <= 1.0);
  }
  CHECK((open - hook).norm() > 0.5);
  CHECK((open - pinch).norm() > 0.5);
  CHECK((hook - pinch).norm() > 0.0);
}

TEST_CASE("reset is seed-deterministic, starts at home, and covers the workspace") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState a = env_reset(spec, 7), b = env_reset(spec, 7);
  CHECK((observe(a) - observe(b)).norm() == 0.0);
  CHECK(a.arm.x == 0.0);
  CHECK(a.arm.y == 0.0);
  CHECK(a.arm.z == 1.0);
  CHECK(a.arm.yaw == 0.0);
  CHECK((a.hand - hand_open()).norm() == 0.0);
  CHECK_FALSE(a.hook);
  CHECK_FALSE(a.open);
  CHECK_FALSE(a.knocked);
  CHECK(a.step == 0);

  double xmin = 1.0, xmax = -1.0, ymin = 1.0, ymax = -1.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    EnvState st = env_reset(spec, s);
    CHECK(std::abs(st.object[0]) <= 0.6);
    CHECK(std::abs(st.object[1]) <= 0.6);
    xmin = std::min(xmin, st.object[0]);
    xmax = std::max(xmax, st.object[0]);
    ymin = std::min(ymin, st.object[1]);
    ymax = std::max(ymax, st.object[1]);
  }
  CHECK(xmin < -0.55);
  CHECK(xmax > 0.55);
  CHECK(ymin < -0.55);
  CHECK(ymax > 0.55);
}

TEST_CASE("observation packs arm, hand and object pose in order") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 3);
  s.arm = arm_at(0.2, -0.3, 0.7, 0.5);
  s.hand = hand_pinch();
  s.object << 0.4, -0.1;
  s.object_yaw = 0.9;
  Obs o = observe(s);
  CHECK(o[0] == 0.2);
  CHECK(o[1] == -0.3);
  CHECK(o[2] == 0.7);
  CHECK(o[3] == 0.5);
  for (int j = 0; j < 6; ++j) CHECK(o[4 + j] == hand_pinch()[j]);
  CHECK(o[10] == 0.4);
  CHECK(o[11] == -0.1);
  CHECK(o[12] == 0.9);
}

TEST_CASE("holding the current state is a no-op except step bookkeeping") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 11);
  EnvState n = env_step(spec, s, s.arm, s.hand);
  CHECK(n.step == 1);
  CHECK(n.arm.x == s.arm.x);
  CHECK(n.arm.z == s.arm.z);
  CHECK((n.hand - s.hand).norm() == 0.0);
  CHECK((n.object - s.object).norm() == 0.0);
  CHECK(n.object_yaw == s.object_yaw);
  CHECK_FALSE(n.hook);
}

TEST_CASE("motion is capped per step and targets are clamped to the workspace") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 5);
  EnvState n = env_step(spec, s, arm_at(5.0, -5.0, 0.0, 3.0), Hand::Ones());
  CHECK(n.arm.x == doctest::Approx(0.08));   // toward clamp(5) = 1
  CHECK(n.arm.y == doctest::Approx(-0.08));
  CHECK(n.arm.z == doctest::Approx(0.92));
  CHECK(n.arm.yaw == doctest::Approx(0.2));
  for (int j = 0; j < 6; ++j) CHECK(n.hand[j] == doctest::Approx(0.25));

  Hand bad = Hand::Ones();
  bad[2] = std::nan("");
  CHECK_THROWS_AS(env_step(spec, s, s.arm, bad), std::invalid_argument);
}

TEST_CASE("hook needs the arm and hand to arrive together") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 21);

  // Hand perfect, arm half a workspace away: the gate must stay shut.
  s.arm = arm_at(s.object[0] - 0.5, s.object[1], 0.30, 0.0);
  s.hand = hand_hook();
  EnvState n = env_step(spec, s, arm_at(s.arm.x, s.arm.y, 0.10, 0.0), hand_hook());
  CHECK(n.arm.z < 0.30);
  CHECK_FALSE(n.hook);

  // Arm directly above the lid, descending through the gate with the hand set.
  s.arm = arm_at(s.object[0], s.object[1], 0.40, 0.0);
  n = env_step(spec, s, arm_at(s.object[0], s.object[1], 0.10, 0.0), hand_hook());
  CHECK(n.arm.z == doctest::Approx(0.32));
  CHECK(n.hook);
}

TEST_CASE("closing the hand high over the lid knocks it for good") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 33);
  s.arm = arm_at(s.object[0], s.object[1], 0.55, 0.0);
  s.hand = hand_hook();

  EnvState n = env_step(spec, s, s.arm, hand_hook());  // hold inside the knock band
  CHECK(n.knocked);
  CHECK_FALSE(n.hook);

  // A textbook descent afterwards cannot recover the episode.
  for (int i = 0; i < 6; ++i)
    n = env_step(spec, n, arm_at(s.object[0], s.object[1], 0.10, 0.0), hand_hook());
  CHECK(n.arm.z < 0.35);
  CHECK_FALSE(n.hook);
  CHECK_FALSE(task_success(spec, n));
}

TEST_CASE("an open hand can pass through the knock band and close low safely") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 19);
  s.arm = arm_at(s.object[0], s.object[1], 0.55, 0.0);

  // Descend with the hand open: no knock anywhere in the band.
  EnvState n = s;
  for (int i = 0; i < 3; ++i)
    n = env_step(spec, n, arm_at(s.object[0], s.object[1], 0.31, 0.0), hand_open());
  CHECK_FALSE(n.knocked);
  CHECK(n.arm.z == doctest::Approx(0.31));

  // Morph to the hook below the band while inching down; the gate opens the
  // step the hand arrives.
  for (int i = 0; i < 6 && !n.hook; ++i)
    n = env_step(spec, n, arm_at(s.object[0], s.object[1], n.arm.z - 0.01, 0.0), hand_hook());
  CHECK_FALSE(n.knocked);
  CHECK(n.hook);
}

TEST_CASE("losing the grip mid-rotation resets hook progress") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 21);
  s.arm = arm_at(s.object[0], s.object[1], 0.40, 0.0);
  s.hand = hand_hook();
  EnvState n = env_step(spec, s, arm_at(s.object[0], s.object[1], 0.10, 0.0), hand_hook());
  REQUIRE(n.hook);

  n = env_step(spec, n, arm_at(n.arm.x, n.arm.y, n.arm.z, 0.4), hand_hook());
  CHECK(n.hook);
  CHECK(n.yaw_since_hook > 0.0);

  EnvState dropped = env_step(spec, n, n.arm, hand_open());  // hand walks away
  int guard = 0;
  while (dropped.hook && guard++ < 10) dropped = env_step(spec, dropped, dropped.arm, hand_open());
  CHECK_FALSE(dropped.hook);
  CHECK(dropped.yaw_since_hook == 0.0);
  CHECK_FALSE(dropped.knocked);  // slipping is recoverable, knocking is not
}

TEST_CASE("rotating 1.2 rad with the grip held opens the lid") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  EnvState s = env_reset(spec, 2);
  s.arm = arm_at(s.object[0], s.object[1], 0.40, 0.0);
  s.hand = hand_hook();
  EnvState n = env_step(spec, s, arm_at(s.object[0], s.object[1], 0.10, 0.0), hand_hook());
  REQUIRE(n.hook);

  int steps = 0;
  while (!n.open && steps++ < 10)
    n = env_step(spec, n, arm_at(n.arm.x, n.arm.y, n.arm.z, 1.5), hand_hook());
  CHECK(n.open);
  CHECK(steps == 7);  // 0.2 rad per step, threshold 1.2 exceeded at 1.4
  CHECK(task_success(spec, n));
  CHECK(phase_done(n, "hook"));
  CHECK(phase_done(n, "open"));
}

TEST_CASE("pickplace grasps, carries, detaches on release and places") {
  TaskSpec spec = TaskSpec::make(Task::PickPlace);
  CHECK(spec.phase_names() == std::vector<std::string>{"grasp", "place"});
  EnvState s = env_reset(spec, 9);
  s.arm = arm_at(s.object[0], s.object[1], 0.30, 0.0);
  s.hand = hand_pinch();

  EnvState n = env_step(spec, s, s.arm, hand_pinch());
  CHECK(n.grasp);
  CHECK(n.attached);

  for (int i = 0; i < 30 && (Eigen::Vector2d(n.arm.x, n.arm.y) - spec.place_zone).norm() > 1e-6;
       ++i)
    n = env_step(spec, n, arm_at(spec.place_zone[0], spec.place_zone[1], 0.30, 0.0), hand_pinch());
  CHECK((n.object - spec.place_zone).norm() < 1e-9);  // block followed the arm
  CHECK_FALSE(n.place);

  int guard = 0;
  while (!n.place && guard++ < 10) n = env_step(spec, n, n.arm, hand_open());
  CHECK(n.place);
  CHECK(task_success(spec, n));
  CHECK_FALSE(n.attached);  // releasing the pinch detached the block

  // Detaching early leaves the block behind.
  EnvState d = env_reset(spec, 14);
  d.arm = arm_at(d.object[0], d.object[1], 0.30, 0.0);
  d.hand = hand_pinch();
  d = env_step(spec, d, d.arm, hand_pinch());
  REQUIRE(d.grasp);
  Eigen::Vector2d before = d.object;
  for (int i = 0; i < 4; ++i)
    d = env_step(spec, d, arm_at(spec.place_zone[0], spec.place_zone[1], 0.30, 0.0), hand_open());
  CHECK_FALSE(d.attached);
  CHECK((d.object - before).norm() < 0.08 * 4);  // dropped within the first step or two
}

TEST_CASE("expert solves hooklid on 50 fresh seeds with short episodes") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  ExpertConfig cfg;
  int successes = 0;
  double total_len = 0.0;
  for (std::uint64_t seed = 500; seed < 550; ++seed) {
    bool ok = false;
    Demonstration d = run_expert_demo(spec, seed, cfg, 200, &ok);
    successes += ok ? 1 : 0;
    total_len += static_cast<double>(d.records.size());
  }
  CHECK(successes == 50);
  CHECK(total_len / 50.0 < 80.0);
}

TEST_CASE("expert solves pickplace across seeds") {
  TaskSpec spec = TaskSpec::make(Task::PickPlace);
  ExpertConfig cfg;
  int successes = 0;
  for (std::uint64_t seed = 800; seed < 830; ++seed) {
    bool ok = false;
    run_expert_demo(spec, seed, cfg, 200, &ok);
    successes += ok ? 1 : 0;
  }
  CHECK(successes == 30);
}

TEST_CASE("expert without jitter repeats itself exactly") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  ExpertConfig cfg;
  cfg.pos_jitter = 0.0;
  cfg.hand_jitter = 0.0;
  Demonstration a = run_expert_demo(spec, 42, cfg, 200);
  Demonstration b = run_expert_demo(spec, 42, cfg, 200);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK((a.records[i].obs - b.records[i].obs).norm() == 0.0);
    CHECK((a.records[i].arm - b.records[i].arm).norm() == 0.0);
    CHECK((a.records[i].hand - b.records[i].hand).norm() == 0.0);
  }
}

TEST_CASE("premature grip commands sink most hooklid episodes") {
  TaskSpec spec = TaskSpec::make(Task::Hooklid);
  ExpertConfig cfg;
  cfg.premature_hand = true;
  int hook_failures = 0;
  for (std::uint64_t seed = 500; seed < 520; ++seed) {
    EnvState s = env_reset(spec, seed);
    Rng rng = Rng(seed).fork(1);
    for (int t = 0; t < 120 && !s.hook; ++t) {
      auto [arm, hand] = expert_policy(spec, s, rng, cfg);
      s = env_step(spec, s, arm, hand);
    }
    hook_failures += s.hook ? 0 : 1;
  }
  CHECK(hook_failures >= 18);  // >= 90% of 20
}

TEST_CASE("expert hand states form three clean clusters") {
  Corpus c = generate_corpus(Task::Hooklid, 20, 0);
  std::vector<Hand> hands = corpus_hands(c);
  Mat pts(6, static_cast<Eigen::Index>(hands.size()));
  for (std::size_t i = 0; i < hands.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = hands[i];
  for (std::uint64_t s : {5ull, 6ull, 7ull}) {
    Rng r(s);
    KMeansResult km = kmeans(pts, 3, 50, r);
    CHECK(silhouette3(pts, km.assignment) > 0.5);
  }
}

TEST_CASE("corpus generation is reproducible and parallel-safe") {
  std::string a = "/tmp/dqrise_test_corpus_a.jsonl";
  std::string b = "/tmp/dqrise_test_corpus_b.jsonl";
  Corpus c1 = generate_corpus(Task::Hooklid, 5, 123, 1);
  Corpus c2 = generate_corpus(Task::Hooklid, 5, 123, 2);
  save_corpus(c1, a);
  save_corpus(c2, b);
  CHECK(read_text_file(a) == read_text_file(b));
  CHECK(c1.n_demos == 5);
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("corpus records respect the schema and survive a round trip") {
  Corpus c = generate_corpus(Task::Hooklid, 5, 77);
  REQUIRE(c.demos.size() == 5);
  for (const Demonstration& d : c.demos) {
    REQUIRE(!d.records.empty());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      const DemoRecord& r = d.records[i];
      CHECK(r.t == static_cast<int>(i));
      CHECK(r.obs.allFinite());
      for (int j = 0; j < 6; ++j) {
        CHECK(r.hand[j] >= 0.0);
        CHECK(r.hand[j] <= 1.0);
      }
      CHECK(std::abs(r.arm[0]) <= 1.0 + 1e-12);
      CHECK(r.arm[2] >= 0.0 - 1e-12);
    }
  }

  std::string path = "/tmp/dqrise_test_corpus_rt.jsonl";
  save_corpus(c, path);
  Corpus back = load_corpus(path);
  CHECK(back.task == c.task);
  CHECK(back.n_demos == c.n_demos);
  REQUIRE(back.demos.size() == c.demos.size());
  for (std::size_t d = 0; d < c.demos.size(); ++d) {
    REQUIRE(back.demos[d].records.size() == c.demos[d].records.size());
    for (std::size_t i = 0; i < c.demos[d].records.size(); ++i) {
      CHECK((back.demos[d].records[i].obs - c.demos[d].records[i].obs).norm() == 0.0);
      CHECK((back.demos[d].records[i].hand - c.demos[d].records[i].hand).norm() == 0.0);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("corpus loading rejects broken files") {
  Corpus c = generate_corpus(Task::Hooklid, 2, 5);
  std::string path = "/tmp/dqrise_test_corpus_bad.jsonl";
  save_corpus(c, path);
  std::string text = read_text_file(path);

  std::size_t first_nl = text.find('\n');
  std::size_t second_nl = text.find('\n', first_nl + 1);
  std::size_t third_nl = text.find('\n', second_nl + 1);
  std::string swapped = text.substr(0, first_nl + 1) +
                        text.substr(second_nl + 1, third_nl - second_nl) +
                        text.substr(first_nl + 1, second_nl - first_nl) +
                        text.substr(third_nl + 1);
  write_text_file(path, swapped);  // records out of order
  CHECK_THROWS_AS(load_corpus(path), std::runtime_error);

  write_text_file(path, "{\"demo\":0}\n");  // missing manifest
  CHECK_THROWS_AS(load_corpus(path), std::runtime_error);
  std::remove(path.c_str());
}
