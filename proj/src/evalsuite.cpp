#include "dqrise/evalsuite.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <json.hpp>

#include "dqrise/io.hpp"
#include "dqrise/parallel.hpp"

namespace dqrise {
namespace {

using ordered_json = nlohmann::ordered_json;

std::uint64_t episode_seed(std::uint64_t eval_seed, int i) {
  return eval_seed * 1000003ull + static_cast<std::uint64_t>(i);
}

}  // namespace

RunMetrics evaluate_policy(const PolicyModel& m, Task task, const ReindexedCodebook* cb,
                           int trials, std::uint64_t eval_seed, int max_steps, int jobs,
                           bool timing) {
  if (trials < 0) throw std::invalid_argument("evaluate_policy: negative trials");
  const TaskSpec spec = TaskSpec::make(task);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<EpisodeResult> episodes(trials);
  parallel_for(trials, jobs, [&](int i) {
    episodes[i] = rollout(m, spec, cb, max_steps, episode_seed(eval_seed, i));
  });

  RunMetrics run;
  run.variant = variant_name(m.cfg.variant);
  run.task = task_name(task);
  run.seed = eval_seed;
  run.trials = trials;
  double len_sum = 0.0;
  std::vector<double> phase_hits(spec.phase_names().size(), 0.0);
  for (const EpisodeResult& e : episodes) {
    len_sum += e.length;
    for (std::size_t p = 0; p < e.phases.size(); ++p)
      if (e.phases[p].second) phase_hits[p] += 1.0;
  }
  const std::vector<std::string> names = spec.phase_names();
  for (std::size_t p = 0; p < names.size(); ++p)
    run.phases.emplace_back(names[p], trials > 0 ? phase_hits[p] / trials : 0.0);
  run.mean_len = trials > 0 ? len_sum / trials : 0.0;
  if (timing)
    run.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return run;
}

SuiteResult evaluate_suite(const SuiteConfig& cfg) {
  SuiteResult out;
  out.corpus = generate_corpus(cfg.task, cfg.n_demos, cfg.corpus_seed, cfg.jobs);
  const std::vector<Hand> hands = corpus_hands(out.corpus);

  VqVaeTrainResult vt = train_vqvae(hands, cfg.vqvae, cfg.vqvae_seed);
  out.vqvae = std::move(vt.model);
  const std::string model_hash = fnv1a_hex(vqvae_to_json_string(out.vqvae, vt.loss_history));

  const std::vector<Hand> merged = merge_codebooks(out.vqvae);
  out.codebook = reindex_codes(merged, hands);
  out.codebook.source_model_hash = model_hash;
  out.codebook_identity = reindex_identity(merged, hands);
  out.codebook_identity.source_model_hash = model_hash;

  const RelabeledCorpus relabeled = relabel_corpus(out.corpus, out.codebook);
  const RelabeledCorpus relabeled_id = relabel_corpus(out.corpus, out.codebook_identity);

  for (Variant v : cfg.variants) {
    PolicyConfig pc = cfg.policy;
    pc.variant = v;
    std::vector<TrainingPair> pairs;
    const ReindexedCodebook* cb = nullptr;
    switch (v) {
      case Variant::Rise:
      case Variant::RiseS: pairs = build_training_pairs(out.corpus, pc); break;
      case Variant::NoReindex:
        pairs = build_training_pairs(relabeled_id, pc);
        cb = &out.codebook_identity;
        break;
      default:
        pairs = build_training_pairs(relabeled, pc);
        cb = &out.codebook;
        break;
    }
    PolicyTrainResult tr = train_policy(pairs, pc, cfg.policy_seed);
    for (std::uint64_t es : cfg.eval_seeds)
      out.metrics.runs.push_back(evaluate_policy(tr.model, cfg.task, cb, cfg.trials, es,
                                                 cfg.max_steps, cfg.jobs, cfg.timing));
  }

  std::sort(out.metrics.runs.begin(), out.metrics.runs.end(),
            [](const RunMetrics& a, const RunMetrics& b) {
              if (a.variant != b.variant) return a.variant < b.variant;
              if (a.task != b.task) return a.task < b.task;
              return a.seed < b.seed;
            });
  return out;
}

std::string metrics_to_json_string(const Metrics& m) {
  ordered_json j;
  ordered_json runs = ordered_json::array();
  for (const RunMetrics& r : m.runs) {
    ordered_json run;
    run["variant"] = r.variant;
    run["task"] = r.task;
    run["seed"] = r.seed;
    run["trials"] = r.trials;
    ordered_json phases;
    for (const auto& [name, rate] : r.phases) phases[name] = rate;
    run["phases"] = phases;
    run["mean_len"] = r.mean_len;
    run["wall_ms"] = r.wall_ms;
    runs.push_back(run);
  }
  j["runs"] = runs;
  return j.dump(2) + "\n";
}

void save_metrics(const Metrics& m, const std::string& path) {
  write_text_file(path, metrics_to_json_string(m));
}

}  // namespace dqrise
