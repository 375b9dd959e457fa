#include "dqrise/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dqrise/parallel.hpp"

namespace dqrise {
namespace {

using ordered_json = nlohmann::ordered_json;

template <typename Derived>
std::vector<double> to_std(const Eigen::MatrixBase<Derived>& v) {
  std::vector<double> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

template <typename FixedVec>
FixedVec fixed_from(const ordered_json& arr, const char* what) {
  FixedVec v;
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != v.size())
    throw std::runtime_error(std::string("demo file: bad ") + what + " length");
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr.at(i).get<double>();
  if (!v.allFinite()) throw std::runtime_error(std::string("demo file: non-finite ") + what);
  return v;
}

ordered_json manifest_json(Task task, int n_demos, std::uint64_t seed,
                           const std::vector<std::uint64_t>& replaced) {
  ordered_json m;
  m["format_version"] = 1;
  m["task"] = task_name(task);
  m["n_demos"] = n_demos;
  m["seed"] = seed;
  if (!replaced.empty()) m["replaced_seeds"] = replaced;
  return m;
}

struct Manifest {
  Task task;
  int n_demos;
  std::uint64_t seed;
  std::vector<std::uint64_t> replaced;
};

Manifest parse_manifest(const std::string& line) {
  ordered_json m;
  try {
    m = ordered_json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("demo file: manifest line is not valid JSON");
  }
  if (m.value("format_version", -1) != 1)
    throw std::runtime_error("demo file: unsupported format_version");
  Manifest out;
  out.task = task_from_name(m.at("task").get<std::string>());
  out.n_demos = m.at("n_demos").get<int>();
  out.seed = m.at("seed").get<std::uint64_t>();
  out.replaced = m.value("replaced_seeds", std::vector<std::uint64_t>{});
  if (out.n_demos < 0) throw std::runtime_error("demo file: negative n_demos");
  return out;
}

// shared record-stream validation: grouped demos, t counting up from 0
void check_order(int demo, int t, int expect_demo, int expect_t, int n_demos) {
  if (demo < 0 || demo >= n_demos) throw std::runtime_error("demo file: demo id out of range");
  bool ok = (demo == expect_demo && t == expect_t) || (demo == expect_demo + 1 && t == 0);
  if (!ok) throw std::runtime_error("demo file: records out of order");
}

}  // namespace

Demonstration run_expert_demo(const TaskSpec& spec, std::uint64_t ep_seed,
                              const ExpertConfig& cfg, int max_steps, bool* success) {
  EnvState state = env_reset(spec, ep_seed);
  Rng rng = Rng(ep_seed).fork(1);
  Demonstration demo;
  int extra = 0;
  bool done = false;
  for (int t = 0; t < max_steps; ++t) {
    auto [arm_cmd, hand_cmd] = expert_policy(spec, state, rng, cfg);
    demo.records.push_back({t, observe(state), arm_cmd.vec(), hand_cmd});
    state = env_step(spec, state, arm_cmd, hand_cmd);
    if (done && ++extra >= 3) break;
    if (!done && task_success(spec, state)) done = true;
  }
  if (success) *success = done;
  return demo;
}

Corpus generate_corpus(Task task, int n, std::uint64_t seed, int jobs, int max_steps) {
  if (n <= 0) throw std::invalid_argument("corpus: n must be positive");
  const TaskSpec spec = TaskSpec::make(task);
  Corpus c;
  c.task = task;
  c.n_demos = n;
  c.seed = seed;
  c.demos.resize(n);

  std::vector<bool> ok(n, false);
  parallel_for(n, jobs, [&](int i) {
    bool s = false;
    Demonstration d = run_expert_demo(spec, seed + static_cast<std::uint64_t>(i), {}, max_steps, &s);
    d.id = i;
    c.demos[i] = std::move(d);
    ok[i] = s;
  });

  std::uint64_t next = seed + static_cast<std::uint64_t>(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t failed = seed + static_cast<std::uint64_t>(i);
    while (!ok[i]) {
      c.replaced_seeds.push_back(failed);
      bool s = false;
      Demonstration d = run_expert_demo(spec, next, {}, max_steps, &s);
      d.id = i;
      failed = next;
      ++next;
      if (s) {
        c.demos[i] = std::move(d);
        ok[i] = true;
      }
    }
  }
  return c;
}

void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << manifest_json(c.task, c.n_demos, c.seed, c.replaced_seeds).dump() << "\n";
  for (const Demonstration& d : c.demos)
    for (const DemoRecord& r : d.records) {
      ordered_json j;
      j["demo"] = d.id;
      j["t"] = r.t;
      j["obs"] = to_std(r.obs);
      j["arm"] = to_std(r.arm);
      j["hand"] = to_std(r.hand);
      out << j.dump() << "\n";
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("demo file: missing manifest");
  Manifest m = parse_manifest(line);

  Corpus c;
  c.task = m.task;
  c.n_demos = m.n_demos;
  c.seed = m.seed;
  c.replaced_seeds = m.replaced;
  c.demos.resize(m.n_demos);
  for (int i = 0; i < m.n_demos; ++i) c.demos[i].id = i;

  int cur_demo = 0, cur_t = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error("demo file: record line is not valid JSON");
    }
    if (j.contains("hand") && j.at("hand").is_object())
      throw std::runtime_error("demo file: holds relabeled records, expected raw demos");
    DemoRecord r;
    int demo = j.at("demo").get<int>();
    r.t = j.at("t").get<int>();
    check_order(demo, r.t, cur_demo, cur_t + 1, m.n_demos);
    if (demo != cur_demo) {
      cur_demo = demo;
      cur_t = -1;
    }
    cur_t = r.t;
    r.obs = fixed_from<Obs>(j.at("obs"), "obs");
    r.arm = fixed_from<Eigen::Vector4d>(j.at("arm"), "arm");
    r.hand = fixed_from<Hand>(j.at("hand"), "hand");
    c.demos[demo].records.push_back(std::move(r));
  }
  for (const Demonstration& d : c.demos)
    if (d.records.empty()) throw std::runtime_error("demo file: demo without records");
  return c;
}

void save_relabeled(const RelabeledCorpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << manifest_json(c.task, c.n_demos, c.seed, c.replaced_seeds).dump() << "\n";
  for (const RelabeledDemo& d : c.demos)
    for (const RelabeledRecord& r : d.records) {
      ordered_json j;
      j["demo"] = d.id;
      j["t"] = r.t;
      j["obs"] = to_std(r.obs);
      j["arm"] = to_std(r.arm);
      j["hand"] = ordered_json{{"z", r.z}, {"rank", r.rank}};
      j["original_hand"] = to_std(r.original_hand);
      out << j.dump() << "\n";
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

RelabeledCorpus load_relabeled(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("demo file: missing manifest");
  Manifest m = parse_manifest(line);

  RelabeledCorpus c;
  c.task = m.task;
  c.n_demos = m.n_demos;
  c.seed = m.seed;
  c.replaced_seeds = m.replaced;
  c.demos.resize(m.n_demos);
  for (int i = 0; i < m.n_demos; ++i) c.demos[i].id = i;

  int cur_demo = 0, cur_t = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error("demo file: record line is not valid JSON");
    }
    if (!j.contains("hand") || !j.at("hand").is_object())
      throw std::runtime_error("demo file: holds raw records, expected relabeled demos");
    RelabeledRecord r;
    int demo = j.at("demo").get<int>();
    r.t = j.at("t").get<int>();
    check_order(demo, r.t, cur_demo, cur_t + 1, m.n_demos);
    if (demo != cur_demo) {
      cur_demo = demo;
      cur_t = -1;
    }
    cur_t = r.t;
    r.obs = fixed_from<Obs>(j.at("obs"), "obs");
    r.arm = fixed_from<Eigen::Vector4d>(j.at("arm"), "arm");
    r.z = j.at("hand").at("z").get<double>();
    r.rank = j.at("hand").at("rank").get<int>();
    if (!std::isfinite(r.z)) throw std::runtime_error("demo file: non-finite z");
    r.original_hand = fixed_from<Hand>(j.at("original_hand"), "original_hand");
    c.demos[demo].records.push_back(std::move(r));
  }
  for (const RelabeledDemo& d : c.demos)
    if (d.records.empty()) throw std::runtime_error("demo file: demo without records");
  return c;
}

std::vector<Hand> corpus_hands(const Corpus& c) {
  std::vector<Hand> hands;
  for (const Demonstration& d : c.demos)
    for (const DemoRecord& r : d.records) hands.push_back(r.hand);
  return hands;
}

}  // namespace dqrise
