#include "dqrise/cli.hpp"

#include <charconv>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dqrise/config.hpp"
#include "dqrise/evalsuite.hpp"
#include "dqrise/io.hpp"
#include "dqrise/pca.hpp"
#include "dqrise/policy.hpp"
#include "dqrise/vqvae.hpp"

namespace dqrise {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
}

bool has(CLI::App* sub, const std::string& name) {
  CLI::Option* o = sub->get_option_no_throw(name);
  return o != nullptr && o->count() > 0;
}

}  // namespace

std::string plot_csv(const ReindexedCodebook& cb, const std::vector<Hand>& hands) {
  if (hands.empty()) throw std::runtime_error("plot needs at least one hand state");
  std::vector<Vec> pts(hands.begin(), hands.end());
  Pca2Result pca = pca_top2(pts);
  std::string out = "kind,rank,pc1,pc2,j0,j1,j2,j3,j4,j5\n";
  auto row = [&](const char* kind, int rank, const Hand& h) {
    Vec centered = h - pca.mean;
    out += kind;
    out += ',';
    out += std::to_string(rank);
    out += ',';
    out += fmt_double(pca.axis1.dot(centered));
    out += ',';
    out += fmt_double(pca.axis2.dot(centered));
    for (int j = 0; j < 6; ++j) {
      out += ',';
      out += fmt_double(h(j));
    }
    out += '\n';
  };
  for (int k = 0; k < cb.K; ++k) row("code", k, cb.codes[static_cast<std::size_t>(k)]);
  for (const Hand& h : hands) row("data", nearest_code(cb, h), h);
  return out;
}

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"diffusion policies with a quantized hand-action space"};
  app.require_subcommand(1);

  std::string config_path, out_path, task_s, variant_s;
  std::string demos_path, model_path, codebook_path, checkpoint_path;
  std::uint64_t seed = 0;
  int n = 0, trials = 0, epochs = 0, jobs = 0;
  bool no_arm = false, timing = false;

  // Options shared across subcommands write into the same variables; exactly
  // one subcommand parses per invocation, and assemble() only consults the
  // options that subcommand actually defines and received.
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--task", task_s, "hooklid or pickplace");
    sub->add_option("--jobs", jobs, "worker threads");
  };
  auto assemble = [&](CLI::App* sub) {
    RunConfig rc = default_config();
    if (has(sub, "--config")) apply_config_text(rc, read_text_file(config_path));
    if (has(sub, "--seed")) rc.seed = seed;
    if (has(sub, "--task")) rc.task = task_s;
    if (has(sub, "--variant")) rc.variant = variant_s;
    if (has(sub, "--n")) rc.n = n;
    if (has(sub, "--trials")) rc.trials = trials;
    if (has(sub, "--jobs")) rc.jobs = jobs;
    if (has(sub, "--epochs")) {
      rc.vqvae.epochs = epochs;
      rc.policy.epochs = epochs;
    }
    if (has(sub, "--timing")) rc.timing = true;
    if (has(sub, "--no-arm-conditioning")) rc.policy.arm_conditioning = false;
    task_from_name(rc.task);
    variant_from_name(rc.variant);
    return rc;
  };

  CLI::App* gen = app.add_subcommand("gen-demos", "generate a scripted demonstration corpus");
  add_common(gen);
  gen->add_option("--n", n, "number of demonstrations");
  gen->add_option("--out", out_path, "output corpus path")->required();
  gen->callback([&, gen] {
    RunConfig rc = assemble(gen);
    Corpus c = generate_corpus(task_from_name(rc.task), rc.n, rc.seed, rc.jobs);
    save_corpus(c, out_path);
    std::cerr << "wrote " << c.n_demos << " demos to " << out_path << "\n";
  });

  CLI::App* tv = app.add_subcommand("train-vqvae", "train the residual quantizer on a corpus");
  add_common(tv);
  tv->add_option("--epochs", epochs, "training epochs");
  tv->add_option("--demos", demos_path, "corpus path")->required();
  tv->add_option("--out", out_path, "output model path")->required();
  tv->callback([&, tv] {
    RunConfig rc = assemble(tv);
    Corpus c = load_corpus(demos_path);
    VqVaeTrainResult tr = train_vqvae(corpus_hands(c), rc.vqvae, rc.seed);
    save_vqvae(tr.model, tr.loss_history, out_path);
    std::cerr << "final recon mse " << fmt_double(tr.recon_history.back()) << ", model at "
              << out_path << "\n";
  });

  CLI::App* ri = app.add_subcommand("reindex", "merge codebooks and order them for relaxation");
  add_common(ri);
  ri->add_option("--variant", variant_s, "no-reindex keeps composite order");
  ri->add_option("--model", model_path, "quantizer model path")->required();
  ri->add_option("--demos", demos_path, "corpus path (ordering axis)")->required();
  ri->add_option("--out", out_path, "output codebook path")->required();
  ri->callback([&, ri] {
    RunConfig rc = assemble(ri);
    VqVaeModel m = load_vqvae(model_path);
    std::vector<Hand> merged = merge_codebooks(m);
    std::vector<Hand> hands = corpus_hands(load_corpus(demos_path));
    ReindexedCodebook cb = variant_from_name(rc.variant) == Variant::NoReindex
                               ? reindex_identity(merged, hands)
                               : reindex_codes(merged, hands);
    cb.source_model_hash = fnv1a_hex(read_text_file(model_path));
    save_codebook(cb, out_path);
    std::cerr << "wrote " << cb.K << "-code codebook to " << out_path << "\n";
  });

  CLI::App* rl = app.add_subcommand("relabel", "replace demo hand actions with code scalars");
  add_common(rl);
  rl->add_option("--demos", demos_path, "raw corpus path")->required();
  rl->add_option("--codebook", codebook_path, "codebook path")->required();
  rl->add_option("--out", out_path, "output relabeled corpus path")->required();
  rl->callback([&] {
    RelabeledCorpus r = relabel_corpus(load_corpus(demos_path), load_codebook(codebook_path));
    save_relabeled(r, out_path);
    std::cerr << "relabeled " << r.n_demos << " demos to " << out_path << "\n";
  });

  CLI::App* tp = app.add_subcommand("train-policy", "train a policy variant on demos");
  add_common(tp);
  tp->add_option("--variant", variant_s, "policy variant");
  tp->add_option("--epochs", epochs, "training epochs");
  tp->add_flag("--no-arm-conditioning", no_arm, "classifier ignores the arm chunk");
  tp->add_option("--codebook", codebook_path, "codebook recorded for eval");
  tp->add_option("--demos", demos_path, "corpus path (relabeled for quantized variants)")
      ->required();
  tp->add_option("--out", out_path, "output checkpoint path")->required();
  tp->callback([&, tp] {
    RunConfig rc = assemble(tp);
    PolicyConfig pc = rc.policy;
    pc.variant = variant_from_name(rc.variant);
    if (has(tp, "--codebook")) pc.codebook_path = codebook_path;
    std::vector<TrainingPair> pairs = variant_uses_relabeled(pc.variant)
                                          ? build_training_pairs(load_relabeled(demos_path), pc)
                                          : build_training_pairs(load_corpus(demos_path), pc);
    PolicyTrainResult tr = train_policy(pairs, pc, rc.seed);
    save_policy(tr.model, out_path);
    std::cerr << variant_name(pc.variant) << " final loss " << fmt_double(tr.loss_history.back())
              << ", checkpoint at " << out_path << "\n";
  });

  CLI::App* ev = app.add_subcommand("eval", "run evaluation episodes for a checkpoint");
  add_common(ev);
  ev->add_option("--trials", trials, "episodes to run");
  ev->add_flag("--timing", timing, "record wall-clock time in metrics");
  ev->add_option("--codebook", codebook_path, "codebook (quantized variants)");
  ev->add_option("--checkpoint", checkpoint_path, "policy checkpoint path")->required();
  ev->add_option("--out", out_path, "metrics path (stdout when omitted)");
  ev->callback([&, ev] {
    RunConfig rc = assemble(ev);
    PolicyModel m = load_policy(checkpoint_path);
    ReindexedCodebook cb;
    const ReindexedCodebook* cbp = nullptr;
    if (variant_uses_codebook(m.cfg.variant)) {
      std::string path = has(ev, "--codebook") ? codebook_path : m.cfg.codebook_path;
      if (path.empty()) throw std::runtime_error(variant_name(m.cfg.variant) + " needs --codebook");
      cb = load_codebook(path);
      cbp = &cb;
    }
    Metrics ms;
    ms.runs.push_back(evaluate_policy(m, task_from_name(rc.task), cbp, rc.trials, rc.seed,
                                      rc.max_steps, rc.jobs, rc.timing));
    emit(metrics_to_json_string(ms), out_path);
  });

  CLI::App* xp = app.add_subcommand("export-plot", "CSV of codes and data on the PCA plane");
  add_common(xp);
  xp->add_option("--codebook", codebook_path, "codebook path")->required();
  xp->add_option("--demos", demos_path, "corpus path")->required();
  xp->add_option("--out", out_path, "CSV path (stdout when omitted)");
  xp->callback([&] {
    ReindexedCodebook cb = load_codebook(codebook_path);
    std::vector<Hand> hands = corpus_hands(load_corpus(demos_path));
    emit(plot_csv(cb, hands), out_path);
  });

  CLI::App* cd = app.add_subcommand("config-dump", "print the effective configuration");
  add_common(cd);
  cd->add_option("--variant", variant_s, "policy variant");
  cd->add_option("--n", n, "number of demonstrations");
  cd->add_option("--trials", trials, "episodes to run");
  cd->add_option("--epochs", epochs, "training epochs");
  cd->add_option("--out", out_path, "output path (stdout when omitted)");
  cd->callback([&, cd] { emit(config_to_json_string(assemble(cd)), out_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cli_dispatch(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("dqrise");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dqrise
