#include "dqrise/vqvae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "dqrise/adam.hpp"
#include "dqrise/io.hpp"
#include "dqrise/kmeans.hpp"

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

// Lloyd centers when the data has >= k distinct points, cyclic copies of the
// distinct points otherwise. Residual layers can legitimately be degenerate.
Mat cluster_centers(const Mat& pts, int k, int iters, Rng& rng) {
  std::vector<Eigen::Index> distinct;
  for (Eigen::Index i = 0; i < pts.cols() && static_cast<int>(distinct.size()) < k; ++i) {
    bool dup = false;
    for (Eigen::Index j : distinct)
      if ((pts.col(i) - pts.col(j)).squaredNorm() == 0.0) {
        dup = true;
        break;
      }
    if (!dup) distinct.push_back(i);
  }
  if (static_cast<int>(distinct.size()) >= k) return kmeans(pts, k, iters, rng).centers;
  Mat centers(pts.rows(), k);
  for (int j = 0; j < k; ++j) centers.col(j) = pts.col(distinct[j % distinct.size()]);
  return centers;
}

int nearest_code(const Mat& codebook, const Vec& v) {
  int best = 0;
  double best_d = (codebook.col(0) - v).squaredNorm();
  for (int j = 1; j < codebook.cols(); ++j) {
    double d = (codebook.col(j) - v).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

// reconstruction-only pass used for warm-up: decoder reads z_e directly
double warmup_loss_grad(const VqVaeModel& m, const Mat& states, Vec& grad, VqVaeLosses* terms) {
  const double B = static_cast<double>(states.cols());
  const Eigen::Index ne = m.encoder.n_params(), nd = m.decoder.n_params();
  grad.setZero();
  Mat x = (2.0 * states.array() - 1.0).matrix();
  MlpCache ec, dc;
  Mat ze = m.encoder.forward(x, &ec);
  Mat y = m.decoder.forward(ze, &dc);
  Mat yc = y.array().min(1.0).max(-1.0).matrix();
  Mat shat = ((yc.array() + 1.0) / 2.0).matrix();
  double recon = (states - shat).squaredNorm() / B;
  Mat dy = ((shat - states).array() * (y.array().abs() < 1.0).cast<double>()).matrix() / B;
  Mat dze = m.decoder.backward(dc, dy, grad.segment(ne, nd));
  m.encoder.backward(ec, dze, grad.segment(0, ne));
  if (terms) *terms = {recon, 0.0, 0.0, recon};
  return recon;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Eigen::Index VqVaeModel::n_params() const {
  const Eigen::Index L = cfg.latent_dim, K = cfg.codebook_size;
  return encoder.n_params() + decoder.n_params() + L * K + L * (K - 1);
}

Vec VqVaeModel::params() const {
  const Eigen::Index L = cfg.latent_dim, K = cfg.codebook_size;
  Vec p(n_params());
  Eigen::Index k = 0;
  p.segment(k, encoder.n_params()) = encoder.params();
  k += encoder.n_params();
  p.segment(k, decoder.n_params()) = decoder.params();
  k += decoder.n_params();
  for (Eigen::Index j = 0; j < K; ++j, k += L) p.segment(k, L) = codebooks[0].col(j);
  for (Eigen::Index j = 1; j < K; ++j, k += L) p.segment(k, L) = codebooks[1].col(j);
  return p;
}

void VqVaeModel::set_params(const Vec& p) {
  if (p.size() != n_params()) throw std::invalid_argument("vqvae: parameter size mismatch");
  const Eigen::Index L = cfg.latent_dim, K = cfg.codebook_size;
  Eigen::Index k = 0;
  encoder.set_params(p.segment(k, encoder.n_params()));
  k += encoder.n_params();
  decoder.set_params(p.segment(k, decoder.n_params()));
  k += decoder.n_params();
  for (Eigen::Index j = 0; j < K; ++j, k += L) codebooks[0].col(j) = p.segment(k, L);
  for (Eigen::Index j = 1; j < K; ++j, k += L) codebooks[1].col(j) = p.segment(k, L);
}

VqVaeModel make_vqvae(const VqVaeConfig& cfg, std::uint64_t seed) {
  if (cfg.latent_dim <= 0 || cfg.codebook_size <= 1)
    throw std::invalid_argument("vqvae: bad configuration");
  Rng rng(seed);
  VqVaeModel m;
  m.cfg = cfg;
  m.encoder = Mlp(net_sizes(6, cfg.encoder_hidden, cfg.latent_dim), rng);
  m.decoder = Mlp(net_sizes(cfg.latent_dim, cfg.decoder_hidden, 6), rng);
  m.codebooks[0] = Mat::Zero(cfg.latent_dim, cfg.codebook_size);
  m.codebooks[1] = Mat::Zero(cfg.latent_dim, cfg.codebook_size);
  m.seed = seed;
  return m;
}

QuantizeResult quantize_residual(const VqVaeModel& m, const Vec& z_e) {
  if (z_e.size() != m.cfg.latent_dim) throw std::invalid_argument("vqvae: latent size mismatch");
  QuantizeResult r;
  r.z_e = z_e;
  r.i1 = nearest_code(m.codebooks[0], z_e);
  Vec res = z_e - m.codebooks[0].col(r.i1);
  r.i2 = nearest_code(m.codebooks[1], res);
  r.z_q = m.codebooks[0].col(r.i1) + m.codebooks[1].col(r.i2);
  return r;
}

Vec encode_state(const VqVaeModel& m, const Hand& s) {
  return m.encoder.forward(Vec((2.0 * s.array() - 1.0).matrix()));
}

Hand decode_latent(const VqVaeModel& m, const Vec& z) {
  Vec y = m.decoder.forward(z);
  return Hand(((y.array().min(1.0).max(-1.0) + 1.0) / 2.0).matrix());
}

VqVaeForward vqvae_forward(const VqVaeModel& m, const Hand& s) {
  VqVaeForward f;
  f.q = quantize_residual(m, encode_state(m, s));
  f.recon = decode_latent(m, f.q.z_q);
  f.loss.recon = (s - f.recon).squaredNorm();
  f.loss.code = (f.q.z_e - f.q.z_q).squaredNorm();
  f.loss.commit = f.loss.code;
  f.loss.total = f.loss.recon + m.cfg.beta * f.loss.code + m.cfg.gamma * f.loss.commit;
  return f;
}

double vqvae_loss_grad(const VqVaeModel& m, const Mat& states, Vec& grad, VqVaeLosses* terms) {
  if (states.rows() != 6 || states.cols() < 1)
    throw std::invalid_argument("vqvae: states must be 6 x batch");
  if (grad.size() != m.n_params()) grad.resize(m.n_params());
  grad.setZero();
  const double B = static_cast<double>(states.cols());
  const Eigen::Index L = m.cfg.latent_dim, K = m.cfg.codebook_size;
  const Eigen::Index ne = m.encoder.n_params(), nd = m.decoder.n_params();
  const Eigen::Index cb0_off = ne + nd, cb1_off = cb0_off + L * K;

  Mat x = (2.0 * states.array() - 1.0).matrix();
  MlpCache ec, dc;
  Mat ze = m.encoder.forward(x, &ec);
  Mat zq(L, states.cols());
  std::vector<int> i1(states.cols()), i2(states.cols());
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    int a = nearest_code(m.codebooks[0], ze.col(b));
    Vec res = ze.col(b) - m.codebooks[0].col(a);
    int c = nearest_code(m.codebooks[1], res);
    i1[b] = a;
    i2[b] = c;
    zq.col(b) = m.codebooks[0].col(a) + m.codebooks[1].col(c);
  }
  Mat y = m.decoder.forward(zq, &dc);
  Mat yc = y.array().min(1.0).max(-1.0).matrix();
  Mat shat = ((yc.array() + 1.0) / 2.0).matrix();

  double recon = (states - shat).squaredNorm() / B;
  double quad = (ze - zq).squaredNorm() / B;

  Mat dy = ((shat - states).array() * (y.array().abs() < 1.0).cast<double>()).matrix() / B;
  Mat dzq = m.decoder.backward(dc, dy, grad.segment(ne, nd));
  // straight-through: reconstruction gradient passes to the encoder unchanged
  Mat dze = dzq + (2.0 * m.cfg.gamma / B) * (ze - zq);
  m.encoder.backward(ec, dze, grad.segment(0, ne));
  const double ccoef = 2.0 * m.cfg.beta / B;
  for (Eigen::Index b = 0; b < states.cols(); ++b) {
    Vec pull = ccoef * (zq.col(b) - ze.col(b));
    grad.segment(cb0_off + i1[b] * L, L) += pull;
    if (i2[b] > 0) grad.segment(cb1_off + (i2[b] - 1) * L, L) += pull;
  }

  double total = recon + m.cfg.beta * quad + m.cfg.gamma * quad;
  if (terms) *terms = {recon, quad, quad, total};
  return total;
}

VqVaeTrainResult train_vqvae(const std::vector<Hand>& states, const VqVaeConfig& cfg,
                             std::uint64_t seed) {
  if (states.empty()) throw std::invalid_argument("vqvae: empty dataset");
  for (const Hand& s : states)
    if (!s.allFinite() || s.minCoeff() < 0.0 || s.maxCoeff() > 1.0)
      throw std::invalid_argument("vqvae: states must be finite and inside [0,1]^6");

  int distinct = 0;
  {
    std::vector<Hand> sorted = states;
    std::sort(sorted.begin(), sorted.end(), [](const Hand& a, const Hand& b) {
      for (int i = 0; i < 6; ++i)
        if (a[i] != b[i]) return a[i] < b[i];
      return false;
    });
    distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i] != sorted[i - 1]) ++distinct;
  }
  const bool single_state = distinct == 1;
  if (!single_state && distinct < cfg.codebook_size)
    throw std::runtime_error("vqvae: fewer distinct states than codes per layer");

  const Eigen::Index n = static_cast<Eigen::Index>(states.size());
  Mat all(6, n);
  for (Eigen::Index i = 0; i < n; ++i) all.col(i) = states[i];

  VqVaeModel model = make_vqvae(cfg, seed);
  Rng rng = Rng(seed).fork(1);
  Vec p = model.params();
  AdamState opt(p.size(), {cfg.lr});
  Vec grad(p.size());

  VqVaeTrainResult out;
  out.loss_history.reserve(cfg.epochs);
  out.recon_history.reserve(cfg.epochs);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (epoch == cfg.warmup_epochs + 1) {
      Mat xall = (2.0 * all.array() - 1.0).matrix();
      Mat ze = model.encoder.forward(xall);
      if (single_state) {
        for (int j = 0; j < cfg.codebook_size; ++j) model.codebooks[0].col(j) = ze.col(0);
      } else {
        model.codebooks[0] = cluster_centers(ze, cfg.codebook_size, cfg.kmeans_iters, rng);
        Mat res(cfg.latent_dim, n);
        for (Eigen::Index i = 0; i < n; ++i)
          res.col(i) = ze.col(i) - model.codebooks[0].col(nearest_code(model.codebooks[0], ze.col(i)));
        Mat c2 = cluster_centers(res, cfg.codebook_size - 1, cfg.kmeans_iters, rng);
        for (int j = 1; j < cfg.codebook_size; ++j) model.codebooks[1].col(j) = c2.col(j - 1);
      }
      p = model.params();
    }

    std::vector<int> perm = rng.permutation(static_cast<int>(n));
    double loss_sum = 0.0, recon_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Mat batch(6, bs);
      for (Eigen::Index b = 0; b < bs; ++b) batch.col(b) = all.col(perm[start + b]);
      VqVaeLosses terms;
      double loss = (epoch <= cfg.warmup_epochs)
                        ? warmup_loss_grad(model, batch, grad, &terms)
                        : vqvae_loss_grad(model, batch, grad, &terms);
      if (!std::isfinite(loss))
        throw std::runtime_error("vqvae: non-finite loss at epoch " + std::to_string(epoch));
      adam_step(p, grad, opt);
      model.set_params(p);
      loss_sum += loss * static_cast<double>(bs);
      recon_sum += terms.recon * static_cast<double>(bs);
    }
    out.loss_history.push_back(loss_sum / static_cast<double>(n));
    out.recon_history.push_back(recon_sum / static_cast<double>(n) / 6.0);
  }
  out.model = std::move(model);
  return out;
}

std::vector<Hand> merge_codebooks(const VqVaeModel& m) {
  const int K = m.cfg.codebook_size;
  std::vector<Hand> table;
  table.reserve(K * K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j)
      table.push_back(decode_latent(m, Vec(m.codebooks[0].col(i) + m.codebooks[1].col(j))));
  return table;
}

double recon_mse(const VqVaeModel& m, const std::vector<Hand>& states) {
  if (states.empty()) throw std::invalid_argument("vqvae: empty dataset");
  double sum = 0.0;
  for (const Hand& s : states) {
    VqVaeForward f = vqvae_forward(m, s);
    sum += f.loss.recon;
  }
  return sum / (6.0 * static_cast<double>(states.size()));
}

std::string vqvae_to_json_string(const VqVaeModel& m, const std::vector<double>& loss_history) {
  ordered_json j;
  j["latent_dim"] = m.cfg.latent_dim;
  j["layer_sizes"] = ordered_json::array({m.encoder.sizes(), m.decoder.sizes()});
  j["encoder_params"] = to_std(m.encoder.params());
  j["decoder_params"] = to_std(m.decoder.params());
  ordered_json books = ordered_json::array();
  for (int layer = 0; layer < 2; ++layer) {
    ordered_json codes = ordered_json::array();
    for (int c = 0; c < m.cfg.codebook_size; ++c) codes.push_back(to_std(m.codebooks[layer].col(c)));
    books.push_back(codes);
  }
  j["codebooks"] = books;
  j["beta"] = m.cfg.beta;
  j["gamma"] = m.cfg.gamma;
  j["seed"] = m.seed;
  j["loss_history"] = loss_history;
  return j.dump(2) + "\n";
}

void save_vqvae(const VqVaeModel& m, const std::vector<double>& loss_history,
                const std::string& path) {
  write_text_file(path, vqvae_to_json_string(m, loss_history));
}

VqVaeModel load_vqvae(const std::string& path, std::vector<double>* loss_history) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model file is not valid JSON: " + std::string(e.what()));
  }
  try {
    VqVaeConfig cfg;
    cfg.latent_dim = j.at("latent_dim").get<int>();
    auto sizes = j.at("layer_sizes");
    std::vector<int> enc_sizes = sizes.at(0).get<std::vector<int>>();
    std::vector<int> dec_sizes = sizes.at(1).get<std::vector<int>>();
    if (enc_sizes.size() < 2 || dec_sizes.size() < 2 || enc_sizes.front() != 6 ||
        dec_sizes.back() != 6 || enc_sizes.back() != cfg.latent_dim ||
        dec_sizes.front() != cfg.latent_dim)
      throw std::runtime_error("model file has inconsistent layer sizes");
    cfg.encoder_hidden.assign(enc_sizes.begin() + 1, enc_sizes.end() - 1);
    cfg.decoder_hidden.assign(dec_sizes.begin() + 1, dec_sizes.end() - 1);
    auto books = j.at("codebooks");
    if (books.size() != 2) throw std::runtime_error("model file must hold two codebooks");
    cfg.codebook_size = static_cast<int>(books.at(0).size());
    cfg.beta = j.at("beta").get<double>();
    cfg.gamma = j.at("gamma").get<double>();

    VqVaeModel m = make_vqvae(cfg, j.at("seed").get<std::uint64_t>());
    m.encoder.set_params(from_std(j.at("encoder_params").get<std::vector<double>>()));
    m.decoder.set_params(from_std(j.at("decoder_params").get<std::vector<double>>()));
    for (int layer = 0; layer < 2; ++layer) {
      if (static_cast<int>(books.at(layer).size()) != cfg.codebook_size)
        throw std::runtime_error("model file codebook layers differ in size");
      for (int c = 0; c < cfg.codebook_size; ++c) {
        Vec code = from_std(books.at(layer).at(c).get<std::vector<double>>());
        if (code.size() != cfg.latent_dim || !code.allFinite())
          throw std::runtime_error("model file holds an invalid code vector");
        m.codebooks[layer].col(c) = code;
      }
    }
    if (loss_history) *loss_history = j.value("loss_history", std::vector<double>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model file is missing required fields: " + std::string(e.what()));
  }
}

}  // namespace dqrise
