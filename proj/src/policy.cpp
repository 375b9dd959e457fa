#include "dqrise/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "dqrise/adam.hpp"
#include "dqrise/io.hpp"

namespace dqrise {
namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s;
  s.push_back(in);
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void fill_normal(Mat& m, Rng& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.normal();
}

Vec normal_vec(Eigen::Index n, Rng& rng) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// one ancestral denoising chain for a single conditioned head
Vec reverse_chain(const Mlp& dn, const Vec& feat, const DiffusionSchedule& sched, Eigen::Index dim,
                  Rng& rng) {
  Vec x = normal_vec(dim, rng);
  Vec in(feat.size() + dim + 1);
  for (int t = sched.T; t >= 1; --t) {
    in << feat, x, static_cast<double>(t) / static_cast<double>(sched.T);
    Vec eps_hat = dn.forward(in);
    double a = sched.alpha_t(t), b = sched.beta_t(t), ab = sched.alpha_bar_t(t);
    x = (x - (b / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(a);
    if (t > 1) x += std::sqrt(b) * normal_vec(dim, rng);
  }
  return x.array().min(1.0).max(-1.0).matrix();
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::DqRise: return "dq-rise";
    case Variant::Rise: return "rise";
    case Variant::RiseS: return "rise-s";
    case Variant::DqRiseC: return "dq-rise-c";
    case Variant::NoReindex: return "no-reindex";
  }
  throw std::logic_error("variant_name: bad enum");
}

Variant variant_from_name(const std::string& name) {
  if (name == "dq-rise") return Variant::DqRise;
  if (name == "rise") return Variant::Rise;
  if (name == "rise-s") return Variant::RiseS;
  if (name == "dq-rise-c") return Variant::DqRiseC;
  if (name == "no-reindex") return Variant::NoReindex;
  throw std::invalid_argument("unknown variant: " + name);
}

bool variant_uses_codebook(Variant v) {
  return v == Variant::DqRise || v == Variant::DqRiseC || v == Variant::NoReindex;
}

bool variant_uses_relabeled(Variant v) { return variant_uses_codebook(v); }

DiffusionSchedule PolicyConfig::schedule() const {
  return DiffusionSchedule::linear(T, beta_start, beta_end);
}

int diffused_step_dim(const PolicyConfig& cfg) {
  switch (cfg.variant) {
    case Variant::DqRise:
    case Variant::NoReindex: return 5;
    case Variant::Rise: return 10;
    case Variant::RiseS:
    case Variant::DqRiseC: return 4;
  }
  throw std::logic_error("diffused_step_dim: bad enum");
}

int total_step_dim(const PolicyConfig& cfg) {
  switch (cfg.variant) {
    case Variant::DqRise:
    case Variant::NoReindex: return 5;
    case Variant::Rise:
    case Variant::RiseS: return 10;
    case Variant::DqRiseC: return 4;
  }
  throw std::logic_error("total_step_dim: bad enum");
}

std::vector<TrainingPair> build_training_pairs(const Corpus& c, const PolicyConfig& cfg) {
  if (variant_uses_relabeled(cfg.variant))
    throw std::invalid_argument("build_training_pairs: this variant trains from relabeled demos");
  const int C = cfg.chunk_len, sd = total_step_dim(cfg);
  std::vector<TrainingPair> pairs;
  for (const Demonstration& d : c.demos) {
    const int len = static_cast<int>(d.records.size());
    for (int i = 0; i < len; ++i) {
      TrainingPair p;
      p.obs = d.records[i].obs;
      p.target.resize(sd * C);
      for (int k = 0; k < C; ++k) {
        const DemoRecord& r = d.records[std::min(i + 1 + k, len - 1)];
        p.target.segment(k * sd, 4) = r.arm;
        p.target.segment(k * sd + 4, 6) = r.hand;
      }
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

std::vector<TrainingPair> build_training_pairs(const RelabeledCorpus& c, const PolicyConfig& cfg) {
  if (!variant_uses_relabeled(cfg.variant))
    throw std::invalid_argument("build_training_pairs: this variant trains from raw demos");
  const int C = cfg.chunk_len, sd = total_step_dim(cfg);
  const bool classify = cfg.variant == Variant::DqRiseC;
  std::vector<TrainingPair> pairs;
  for (const RelabeledDemo& d : c.demos) {
    const int len = static_cast<int>(d.records.size());
    for (int i = 0; i < len; ++i) {
      TrainingPair p;
      p.obs = d.records[i].obs;
      p.target.resize(sd * C);
      if (classify) p.labels.resize(C);
      for (int k = 0; k < C; ++k) {
        const RelabeledRecord& r = d.records[std::min(i + 1 + k, len - 1)];
        p.target.segment(k * sd, 4) = r.arm;
        if (classify) {
          if (r.rank < 0 || r.rank >= cfg.num_codes)
            throw std::invalid_argument("build_training_pairs: rank outside code range");
          p.labels[k] = r.rank;
        } else {
          p.target[k * sd + 4] = r.z;
        }
      }
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

Eigen::Index PolicyModel::n_params() const {
  Eigen::Index n = obs_encoder.n_params() + denoiser.n_params();
  if (cfg.variant == Variant::RiseS) n += denoiser2.n_params();
  if (cfg.variant == Variant::DqRiseC) n += classifier.n_params();
  return n;
}

Vec PolicyModel::params() const {
  Vec p(n_params());
  Eigen::Index k = 0;
  p.segment(k, obs_encoder.n_params()) = obs_encoder.params();
  k += obs_encoder.n_params();
  p.segment(k, denoiser.n_params()) = denoiser.params();
  k += denoiser.n_params();
  if (cfg.variant == Variant::RiseS) p.segment(k, denoiser2.n_params()) = denoiser2.params();
  if (cfg.variant == Variant::DqRiseC) p.segment(k, classifier.n_params()) = classifier.params();
  return p;
}

void PolicyModel::set_params(const Vec& p) {
  if (p.size() != n_params()) throw std::invalid_argument("policy: parameter size mismatch");
  Eigen::Index k = 0;
  obs_encoder.set_params(p.segment(k, obs_encoder.n_params()));
  k += obs_encoder.n_params();
  denoiser.set_params(p.segment(k, denoiser.n_params()));
  k += denoiser.n_params();
  if (cfg.variant == Variant::RiseS) denoiser2.set_params(p.segment(k, denoiser2.n_params()));
  if (cfg.variant == Variant::DqRiseC) classifier.set_params(p.segment(k, classifier.n_params()));
}

Vec PolicyModel::normalize_chunk(const Vec& raw) const {
  const Eigen::Index sd = norm_min.size();
  if (raw.size() % sd != 0) throw std::invalid_argument("normalize_chunk: size mismatch");
  Vec out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    Eigen::Index d = i % sd;
    double half = (norm_max[d] - norm_min[d]) / 2.0;
    double center = (norm_max[d] + norm_min[d]) / 2.0;
    out[i] = half > 0.0 ? (raw[i] - center) / half : 0.0;
  }
  return out;
}

Vec PolicyModel::denormalize_chunk(const Vec& norm) const {
  const Eigen::Index sd = norm_min.size();
  if (norm.size() % sd != 0) throw std::invalid_argument("denormalize_chunk: size mismatch");
  Vec out(norm.size());
  for (Eigen::Index i = 0; i < norm.size(); ++i) {
    Eigen::Index d = i % sd;
    double half = (norm_max[d] - norm_min[d]) / 2.0;
    double center = (norm_max[d] + norm_min[d]) / 2.0;
    out[i] = center + half * norm[i];
  }
  return out;
}

PolicyModel make_policy(const PolicyConfig& cfg, std::uint64_t seed) {
  if (cfg.chunk_len < 1 || cfg.exec_steps < 1 || cfg.exec_steps > cfg.chunk_len)
    throw std::invalid_argument("policy: bad chunk configuration");
  if (cfg.obs_feat < 1 || cfg.num_codes < 2) throw std::invalid_argument("policy: bad config");
  cfg.schedule();  // validates schedule parameters

  Rng rng(seed);
  PolicyModel m;
  m.cfg = cfg;
  m.seed = seed;
  const int C = cfg.chunk_len;
  const int d1 = diffused_step_dim(cfg) * C;
  m.obs_encoder = Mlp(net_sizes(13, cfg.obs_hidden, cfg.obs_feat), rng);
  m.denoiser = Mlp(net_sizes(cfg.obs_feat + d1 + 1, cfg.denoiser_hidden, d1), rng);
  if (cfg.variant == Variant::RiseS)
    m.denoiser2 = Mlp(net_sizes(cfg.obs_feat + 6 * C + 1, cfg.denoiser_hidden, 6 * C), rng);
  if (cfg.variant == Variant::DqRiseC) {
    int in = cfg.obs_feat + (cfg.arm_conditioning ? 4 * C : 0);
    m.classifier = Mlp(net_sizes(in, cfg.classifier_hidden, cfg.num_codes * C), rng);
  }
  const int sd = total_step_dim(cfg);
  m.norm_min = Vec::Constant(sd, -1.0);
  m.norm_max = Vec::Constant(sd, 1.0);
  return m;
}

double policy_loss_grad(const PolicyModel& model, const Mat& obs_b, const Mat& x1_b,
                        const Mat& x2_b, const std::vector<int>& labels_b,
                        const PolicyNoiseDraw& draw, Vec& grad) {
  const PolicyConfig& cfg = model.cfg;
  const int C = cfg.chunk_len;
  const bool rise_s = cfg.variant == Variant::RiseS;
  const bool classify = cfg.variant == Variant::DqRiseC;
  const Eigen::Index B = obs_b.cols();
  const Eigen::Index f = cfg.obs_feat;
  const Eigen::Index D1 = static_cast<Eigen::Index>(diffused_step_dim(cfg)) * C;
  const Eigen::Index D2 = rise_s ? 6 * C : 0;
  const DiffusionSchedule sched = cfg.schedule();

  if (obs_b.rows() != 13 || B < 1) throw std::invalid_argument("policy loss: bad observation batch");
  if (x1_b.rows() != D1 || x1_b.cols() != B) throw std::invalid_argument("policy loss: bad chunk batch");
  if (rise_s && (x2_b.rows() != D2 || x2_b.cols() != B))
    throw std::invalid_argument("policy loss: bad second-head batch");
  if (classify && static_cast<Eigen::Index>(labels_b.size()) != B * C)
    throw std::invalid_argument("policy loss: bad labels");
  if (draw.eps1.rows() != D1 || draw.eps1.cols() != B ||
      static_cast<Eigen::Index>(draw.t1.size()) != B)
    throw std::invalid_argument("policy loss: bad noise draw");
  if (rise_s && (draw.eps2.rows() != D2 || draw.eps2.cols() != B ||
                 static_cast<Eigen::Index>(draw.t2.size()) != B))
    throw std::invalid_argument("policy loss: bad second-head noise draw");
  for (int t : draw.t1)
    if (t < 1 || t > sched.T) throw std::invalid_argument("policy loss: timestep out of range");
  for (int t : draw.t2)
    if (t < 1 || t > sched.T) throw std::invalid_argument("policy loss: timestep out of range");

  const Eigen::Index n_obs = model.obs_encoder.n_params();
  const Eigen::Index n_dn = model.denoiser.n_params();
  const Eigen::Index n_dn2 = rise_s ? model.denoiser2.n_params() : 0;
  if (grad.size() != model.n_params()) grad.resize(model.n_params());
  grad.setZero();

  MlpCache obs_cache;
  Mat feat = model.obs_encoder.forward(obs_b, &obs_cache);
  Mat dfeat = Mat::Zero(f, B);
  double loss = 0.0;
  const double denom = static_cast<double>(B) * static_cast<double>(D1 + D2);

  // diffusion head(s): noise, predict, per-element squared error
  auto run_head = [&](const Mlp& dn, const Mat& x0, const Mat& eps, const std::vector<int>& ts,
                      Eigen::Index D, Eigen::Index grad_off) {
    Mat in(f + D + 1, B);
    in.topRows(f) = feat;
    for (Eigen::Index b = 0; b < B; ++b) {
      int t = ts[static_cast<std::size_t>(b)];
      double ab = sched.alpha_bar_t(t);
      in.col(b).segment(f, D) =
          std::sqrt(ab) * x0.col(b) + std::sqrt(1.0 - ab) * eps.col(b);
      in(f + D, b) = static_cast<double>(t) / static_cast<double>(sched.T);
    }
    MlpCache cache;
    Mat eps_hat = dn.forward(in, &cache);
    Mat diff = eps_hat - eps;
    loss += diff.squaredNorm() / denom;
    Mat din = dn.backward(cache, Mat((2.0 / denom) * diff), grad.segment(grad_off, dn.n_params()));
    dfeat += din.topRows(f);
  };

  run_head(model.denoiser, x1_b, draw.eps1, draw.t1, D1, n_obs);
  if (rise_s) run_head(model.denoiser2, x2_b, draw.eps2, draw.t2, D2, n_obs + n_dn);

  if (classify) {
    const Eigen::Index cin = f + (cfg.arm_conditioning ? D1 : 0);
    Mat in(cin, B);
    in.topRows(f) = feat;
    if (cfg.arm_conditioning) in.bottomRows(D1) = x1_b;  // teacher forcing
    MlpCache cache;
    Mat logits = model.classifier.forward(in, &cache);
    Mat dlogits(logits.rows(), B);
    double ce = 0.0;
    const double cdenom = static_cast<double>(B) * static_cast<double>(C);
    for (Eigen::Index b = 0; b < B; ++b) {
      for (int k = 0; k < C; ++k) {
        auto seg = logits.col(b).segment(k * cfg.num_codes, cfg.num_codes);
        double mx = seg.maxCoeff();
        Vec ex = (seg.array() - mx).exp().matrix();
        double Z = ex.sum();
        int label = labels_b[static_cast<std::size_t>(b * C + k)];
        if (label < 0 || label >= cfg.num_codes)
          throw std::invalid_argument("policy loss: label outside code range");
        ce -= std::log(ex[label] / Z);
        dlogits.col(b).segment(k * cfg.num_codes, cfg.num_codes) =
            (cfg.class_weight / cdenom) * (ex / Z);
        dlogits(k * cfg.num_codes + label, b) -= cfg.class_weight / cdenom;
      }
    }
    loss += cfg.class_weight * ce / cdenom;
    Mat din = model.classifier.backward(
        cache, dlogits, grad.segment(n_obs + n_dn + n_dn2, model.classifier.n_params()));
    dfeat += din.topRows(f);
  }

  model.obs_encoder.backward(obs_cache, dfeat, grad.segment(0, n_obs));
  return loss;
}

PolicyTrainResult train_policy(const std::vector<TrainingPair>& pairs, const PolicyConfig& cfg,
                               std::uint64_t seed) {
  if (pairs.empty()) throw std::invalid_argument("train_policy: no training pairs");
  const int C = cfg.chunk_len;
  const int sd = total_step_dim(cfg);
  const int dd = diffused_step_dim(cfg);
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  const bool rise_s = cfg.variant == Variant::RiseS;
  const bool classify = cfg.variant == Variant::DqRiseC;
  for (const TrainingPair& p : pairs) {
    if (p.target.size() != sd * C || !p.target.allFinite() || !p.obs.allFinite())
      throw std::invalid_argument("train_policy: malformed training pair");
    if (classify && static_cast<int>(p.labels.size()) != C)
      throw std::invalid_argument("train_policy: missing labels");
  }

  PolicyModel model = make_policy(cfg, seed);
  const DiffusionSchedule sched = cfg.schedule();

  // per-dimension min/max over every step of every chunk
  model.norm_min = Vec::Constant(sd, std::numeric_limits<double>::infinity());
  model.norm_max = Vec::Constant(sd, -std::numeric_limits<double>::infinity());
  for (const TrainingPair& p : pairs)
    for (int k = 0; k < C; ++k)
      for (int d = 0; d < sd; ++d) {
        double v = p.target[k * sd + d];
        model.norm_min[d] = std::min(model.norm_min[d], v);
        model.norm_max[d] = std::max(model.norm_max[d], v);
      }

  // precompute normalized targets, split into diffusion heads
  const Eigen::Index D1 = static_cast<Eigen::Index>(dd) * C;
  const Eigen::Index D2 = rise_s ? 6 * C : 0;
  Mat obs_all(13, n), x1_all(D1, n), x2_all(std::max<Eigen::Index>(D2, 1), n);
  std::vector<int> labels_all(classify ? n * C : 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    obs_all.col(i) = pairs[i].obs;
    Vec norm = model.normalize_chunk(pairs[i].target);
    for (int k = 0; k < C; ++k) {
      x1_all.col(i).segment(k * dd, dd) = norm.segment(k * sd, dd);
      if (rise_s) x2_all.col(i).segment(k * 6, 6) = norm.segment(k * sd + 4, 6);
    }
    if (classify)
      for (int k = 0; k < C; ++k) labels_all[i * C + k] = pairs[i].labels[k];
  }

  Vec p = model.params();
  AdamState opt(p.size(), {cfg.lr});
  Vec grad(p.size());
  Rng rng = Rng(seed).fork(1);

  PolicyTrainResult out;
  out.loss_history.reserve(cfg.epochs);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> perm = rng.permutation(static_cast<int>(n));
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Mat obs_b(13, B), x1_b(D1, B), x2_b(std::max<Eigen::Index>(D2, 1), B);
      for (Eigen::Index b = 0; b < B; ++b) {
        int idx = perm[start + b];
        obs_b.col(b) = obs_all.col(idx);
        x1_b.col(b) = x1_all.col(idx);
        if (rise_s) x2_b.col(b) = x2_all.col(idx);
      }
      // explicit draw: head noise then head timesteps, second head after the first
      PolicyNoiseDraw draw;
      draw.eps1.resize(D1, B);
      fill_normal(draw.eps1, rng);
      draw.t1.resize(static_cast<std::size_t>(B));
      for (Eigen::Index b = 0; b < B; ++b)
        draw.t1[static_cast<std::size_t>(b)] = rng.uniform_int(sched.T) + 1;
      if (rise_s) {
        draw.eps2.resize(D2, B);
        fill_normal(draw.eps2, rng);
        draw.t2.resize(static_cast<std::size_t>(B));
        for (Eigen::Index b = 0; b < B; ++b)
          draw.t2[static_cast<std::size_t>(b)] = rng.uniform_int(sched.T) + 1;
      }
      std::vector<int> labels_b;
      if (classify) {
        labels_b.resize(static_cast<std::size_t>(B) * static_cast<std::size_t>(C));
        for (Eigen::Index b = 0; b < B; ++b)
          for (int k = 0; k < C; ++k)
            labels_b[static_cast<std::size_t>(b * C + k)] =
                labels_all[static_cast<std::size_t>(perm[start + b]) * C + k];
      }

      double loss = policy_loss_grad(model, obs_b, x1_b, x2_b, labels_b, draw, grad);

      if (!std::isfinite(loss))
        throw std::runtime_error("train_policy: non-finite loss at epoch " +
                                 std::to_string(epoch));
      if (cfg.grad_clip > 0.0) {
        double g = grad.norm();
        if (g > cfg.grad_clip) grad *= cfg.grad_clip / g;
      }
      adam_step(p, grad, opt);
      model.set_params(p);
      loss_sum += loss * static_cast<double>(B);
    }
    out.loss_history.push_back(loss_sum / static_cast<double>(n));
  }
  out.model = std::move(model);
  return out;
}

ActionChunk sample_chunk(const PolicyModel& m, const Obs& obs, const DiffusionSchedule& sched,
                         Rng& rng) {
  const PolicyConfig& cfg = m.cfg;
  const int C = cfg.chunk_len;
  const int sd = total_step_dim(cfg);
  const int dd = diffused_step_dim(cfg);
  if (!obs.allFinite()) throw std::invalid_argument("sample_chunk: non-finite observation");

  Vec feat = m.obs_encoder.forward(Vec(obs));
  Vec x1 = reverse_chain(m.denoiser, feat, sched, static_cast<Eigen::Index>(dd) * C, rng);

  // assemble the normalized full-layout chunk, then denormalize once
  Vec norm = Vec::Zero(static_cast<Eigen::Index>(sd) * C);
  for (int k = 0; k < C; ++k) norm.segment(k * sd, dd) = x1.segment(k * dd, dd);
  if (cfg.variant == Variant::RiseS) {
    Vec x2 = reverse_chain(m.denoiser2, feat, sched, 6 * C, rng);
    for (int k = 0; k < C; ++k) norm.segment(k * sd + 4, 6) = x2.segment(k * 6, 6);
  }
  Vec raw = m.denormalize_chunk(norm);

  std::vector<int> ranks;
  if (cfg.variant == Variant::DqRiseC) {
    Vec in(cfg.arm_conditioning ? feat.size() + x1.size() : feat.size());
    if (cfg.arm_conditioning)
      in << feat, x1;
    else
      in << feat;
    Vec logits = m.classifier.forward(in);
    ranks.resize(C);
    for (int k = 0; k < C; ++k) {
      auto seg = logits.segment(k * cfg.num_codes, cfg.num_codes);
      int best = 0;
      for (int j = 1; j < cfg.num_codes; ++j)
        if (seg[j] > seg[best]) best = j;
      ranks[k] = best;
    }
  }

  ActionChunk chunk;
  chunk.variant = cfg.variant;
  chunk.steps.resize(C);
  for (int k = 0; k < C; ++k) {
    ChunkStep& s = chunk.steps[k];
    s.arm = raw.segment(k * sd, 4);
    switch (cfg.variant) {
      case Variant::DqRise:
      case Variant::NoReindex: s.z = raw[k * sd + 4]; break;
      case Variant::Rise:
      case Variant::RiseS:
        s.hand = raw.segment(k * sd + 4, 6).array().min(1.0).max(0.0).matrix();
        break;
      case Variant::DqRiseC: s.rank = ranks[k]; break;
    }
  }
  return chunk;
}

EpisodeResult rollout_policy(const TaskSpec& spec, const ChunkPolicy& policy, Variant variant,
                             const ReindexedCodebook* cb, int max_steps, int exec_steps,
                             std::uint64_t seed) {
  if (variant_uses_codebook(variant) && cb == nullptr)
    throw std::invalid_argument("rollout: this variant needs a codebook to execute hands");
  if (max_steps < 1 || exec_steps < 1) throw std::invalid_argument("rollout: bad step limits");

  EnvState state = env_reset(spec, seed);
  Rng rng = Rng(seed).fork(2);
  EpisodeResult res;
  bool done = false;
  while (res.length < max_steps && !done) {
    ActionChunk chunk = policy(state, rng);
    if (chunk.steps.empty()) throw std::runtime_error("rollout: empty action chunk");
    const int take = std::min<int>(exec_steps, static_cast<int>(chunk.steps.size()));
    for (int k = 0; k < take && res.length < max_steps; ++k) {
      const ChunkStep& a = chunk.steps[k];
      Hand hand_cmd;
      switch (variant) {
        case Variant::DqRise:
        case Variant::NoReindex: hand_cmd = project_index(*cb, a.z).state; break;
        case Variant::DqRiseC:
          if (a.rank < 0 || a.rank >= cb->K) throw std::runtime_error("rollout: rank out of range");
          hand_cmd = cb->codes[a.rank];
          break;
        case Variant::Rise:
        case Variant::RiseS: hand_cmd = a.hand.array().min(1.0).max(0.0).matrix(); break;
      }
      state = env_step(spec, state, ArmState::from(a.arm), hand_cmd);
      res.executed_hands.push_back(hand_cmd);
      ++res.length;
      if (task_success(spec, state)) {
        done = true;
        break;
      }
    }
  }
  for (const std::string& name : spec.phase_names())
    res.phases.emplace_back(name, phase_done(state, name));
  res.success = task_success(spec, state);
  return res;
}

EpisodeResult rollout(const PolicyModel& m, const TaskSpec& spec, const ReindexedCodebook* cb,
                      int max_steps, std::uint64_t seed) {
  const DiffusionSchedule sched = m.cfg.schedule();
  ChunkPolicy policy = [&](const EnvState& s, Rng& rng) {
    return sample_chunk(m, observe(s), sched, rng);
  };
  return rollout_policy(spec, policy, m.cfg.variant, cb, max_steps, m.cfg.exec_steps, seed);
}

void save_policy(const PolicyModel& m, const std::string& path) {
  const PolicyConfig& c = m.cfg;
  ordered_json j;
  j["variant"] = variant_name(c.variant);
  ordered_json cfg;
  cfg["chunk_len"] = c.chunk_len;
  cfg["exec_steps"] = c.exec_steps;
  cfg["obs_feat"] = c.obs_feat;
  cfg["obs_hidden"] = c.obs_hidden;
  cfg["denoiser_hidden"] = c.denoiser_hidden;
  cfg["classifier_hidden"] = c.classifier_hidden;
  cfg["lr"] = c.lr;
  cfg["batch_size"] = c.batch_size;
  cfg["epochs"] = c.epochs;
  cfg["grad_clip"] = c.grad_clip;
  cfg["class_weight"] = c.class_weight;
  cfg["arm_conditioning"] = c.arm_conditioning;
  cfg["num_codes"] = c.num_codes;
  cfg["codebook_path"] = c.codebook_path;
  j["config"] = cfg;
  j["normalization"] = ordered_json{{"min", to_std(m.norm_min)}, {"max", to_std(m.norm_max)}};
  j["encoder_params"] = to_std(m.obs_encoder.params());
  j["denoiser_params"] = to_std(m.denoiser.params());
  if (c.variant == Variant::RiseS) j["denoiser2_params"] = to_std(m.denoiser2.params());
  if (c.variant == Variant::DqRiseC) j["classifier_params"] = to_std(m.classifier.params());
  j["schedule"] =
      ordered_json{{"T", c.T}, {"beta_start", c.beta_start}, {"beta_end", c.beta_end}};
  j["seed"] = m.seed;
  write_text_file(path, j.dump(2) + "\n");
}

PolicyModel load_policy(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint is not valid JSON: " + std::string(e.what()));
  }
  try {
    PolicyConfig c;
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    const auto& cfg = j.at("config");
    c.chunk_len = cfg.at("chunk_len").get<int>();
    c.exec_steps = cfg.at("exec_steps").get<int>();
    c.obs_feat = cfg.at("obs_feat").get<int>();
    c.obs_hidden = cfg.at("obs_hidden").get<std::vector<int>>();
    c.denoiser_hidden = cfg.at("denoiser_hidden").get<std::vector<int>>();
    c.classifier_hidden = cfg.at("classifier_hidden").get<std::vector<int>>();
    c.lr = cfg.at("lr").get<double>();
    c.batch_size = cfg.at("batch_size").get<int>();
    c.epochs = cfg.at("epochs").get<int>();
    c.grad_clip = cfg.at("grad_clip").get<double>();
    c.class_weight = cfg.at("class_weight").get<double>();
    c.arm_conditioning = cfg.at("arm_conditioning").get<bool>();
    c.num_codes = cfg.at("num_codes").get<int>();
    c.codebook_path = cfg.value("codebook_path", std::string{});
    const auto& sch = j.at("schedule");
    c.T = sch.at("T").get<int>();
    c.beta_start = sch.at("beta_start").get<double>();
    c.beta_end = sch.at("beta_end").get<double>();

    PolicyModel m = make_policy(c, j.at("seed").get<std::uint64_t>());
    const auto& norm = j.at("normalization");
    Vec nmin = from_std(norm.at("min").get<std::vector<double>>());
    Vec nmax = from_std(norm.at("max").get<std::vector<double>>());
    if (nmin.size() != total_step_dim(c) || nmax.size() != nmin.size())
      throw std::runtime_error("checkpoint: normalization width mismatch");
    m.norm_min = nmin;
    m.norm_max = nmax;
    m.obs_encoder.set_params(from_std(j.at("encoder_params").get<std::vector<double>>()));
    m.denoiser.set_params(from_std(j.at("denoiser_params").get<std::vector<double>>()));
    if (c.variant == Variant::RiseS)
      m.denoiser2.set_params(from_std(j.at("denoiser2_params").get<std::vector<double>>()));
    if (c.variant == Variant::DqRiseC)
      m.classifier.set_params(from_std(j.at("classifier_params").get<std::vector<double>>()));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint is missing required fields: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint is inconsistent: ") + e.what());
  }
}

}  // namespace dqrise
