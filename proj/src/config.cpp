#include "dqrise/config.hpp"

#include <stdexcept>

#include "dqrise/env.hpp"
#include "dqrise/io.hpp"
#include "json.hpp"

namespace dqrise {

namespace {

using nlohmann::ordered_json;

int as_int(const ordered_json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw std::runtime_error("config key '" + key + "' must be an integer");
  return v.get<int>();
}

double as_num(const ordered_json& v, const std::string& key) {
  if (!v.is_number())
    throw std::runtime_error("config key '" + key + "' must be a number");
  return v.get<double>();
}

bool as_bool(const ordered_json& v, const std::string& key) {
  if (!v.is_boolean())
    throw std::runtime_error("config key '" + key + "' must be a boolean");
  return v.get<bool>();
}

std::string as_string(const ordered_json& v, const std::string& key) {
  if (!v.is_string())
    throw std::runtime_error("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<int> as_int_list(const ordered_json& v, const std::string& key) {
  if (!v.is_array())
    throw std::runtime_error("config key '" + key + "' must be an array of integers");
  std::vector<int> out;
  for (const auto& e : v) out.push_back(as_int(e, key));
  return out;
}

void apply_vqvae(VqVaeConfig& c, const ordered_json& j) {
  for (const auto& [key, val] : j.items()) {
    if (key == "latent_dim") c.latent_dim = as_int(val, key);
    else if (key == "encoder_hidden") c.encoder_hidden = as_int_list(val, key);
    else if (key == "decoder_hidden") c.decoder_hidden = as_int_list(val, key);
    else if (key == "codebook_size") c.codebook_size = as_int(val, key);
    else if (key == "beta") c.beta = as_num(val, key);
    else if (key == "gamma") c.gamma = as_num(val, key);
    else if (key == "lr") c.lr = as_num(val, key);
    else if (key == "batch_size") c.batch_size = as_int(val, key);
    else if (key == "epochs") c.epochs = as_int(val, key);
    else if (key == "warmup_epochs") c.warmup_epochs = as_int(val, key);
    else if (key == "kmeans_iters") c.kmeans_iters = as_int(val, key);
    else throw std::runtime_error("unknown config key 'vqvae." + key + "'");
  }
}

void apply_policy(PolicyConfig& c, const ordered_json& j) {
  for (const auto& [key, val] : j.items()) {
    if (key == "chunk_len") c.chunk_len = as_int(val, key);
    else if (key == "exec_steps") c.exec_steps = as_int(val, key);
    else if (key == "obs_feat") c.obs_feat = as_int(val, key);
    else if (key == "obs_hidden") c.obs_hidden = as_int_list(val, key);
    else if (key == "denoiser_hidden") c.denoiser_hidden = as_int_list(val, key);
    else if (key == "classifier_hidden") c.classifier_hidden = as_int_list(val, key);
    else if (key == "T") c.T = as_int(val, key);
    else if (key == "beta_start") c.beta_start = as_num(val, key);
    else if (key == "beta_end") c.beta_end = as_num(val, key);
    else if (key == "lr") c.lr = as_num(val, key);
    else if (key == "batch_size") c.batch_size = as_int(val, key);
    else if (key == "epochs") c.epochs = as_int(val, key);
    else if (key == "grad_clip") c.grad_clip = as_num(val, key);
    else if (key == "class_weight") c.class_weight = as_num(val, key);
    else if (key == "arm_conditioning") c.arm_conditioning = as_bool(val, key);
    else if (key == "num_codes") c.num_codes = as_int(val, key);
    else throw std::runtime_error("unknown config key 'policy." + key + "'");
  }
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void apply_config_text(RunConfig& rc, const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("config root must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (key == "task") rc.task = as_string(val, key);
    else if (key == "variant") rc.variant = as_string(val, key);
    else if (key == "seed") {
      if (!val.is_number_integer() || (val.is_number_integer() && val.get<long long>() < 0))
        throw std::runtime_error("config key 'seed' must be a non-negative integer");
      rc.seed = val.get<std::uint64_t>();
    }
    else if (key == "n") rc.n = as_int(val, key);
    else if (key == "trials") rc.trials = as_int(val, key);
    else if (key == "jobs") rc.jobs = as_int(val, key);
    else if (key == "max_steps") rc.max_steps = as_int(val, key);
    else if (key == "timing") rc.timing = as_bool(val, key);
    else if (key == "vqvae") {
      if (!val.is_object()) throw std::runtime_error("config key 'vqvae' must be an object");
      apply_vqvae(rc.vqvae, val);
    }
    else if (key == "policy") {
      if (!val.is_object()) throw std::runtime_error("config key 'policy' must be an object");
      apply_policy(rc.policy, val);
    }
    else throw std::runtime_error("unknown config key '" + key + "'");
  }
  task_from_name(rc.task);        // validates
  variant_from_name(rc.variant);  // validates
}

RunConfig load_config_file(const std::string& path) {
  RunConfig rc = default_config();
  apply_config_text(rc, read_text_file(path));
  return rc;
}

std::string config_to_json_string(const RunConfig& rc) {
  ordered_json j;
  j["task"] = rc.task;
  j["variant"] = rc.variant;
  j["seed"] = rc.seed;
  j["n"] = rc.n;
  j["trials"] = rc.trials;
  j["jobs"] = rc.jobs;
  j["max_steps"] = rc.max_steps;
  j["timing"] = rc.timing;
  ordered_json v;
  v["latent_dim"] = rc.vqvae.latent_dim;
  v["encoder_hidden"] = rc.vqvae.encoder_hidden;
  v["decoder_hidden"] = rc.vqvae.decoder_hidden;
  v["codebook_size"] = rc.vqvae.codebook_size;
  v["beta"] = rc.vqvae.beta;
  v["gamma"] = rc.vqvae.gamma;
  v["lr"] = rc.vqvae.lr;
  v["batch_size"] = rc.vqvae.batch_size;
  v["epochs"] = rc.vqvae.epochs;
  v["warmup_epochs"] = rc.vqvae.warmup_epochs;
  v["kmeans_iters"] = rc.vqvae.kmeans_iters;
  j["vqvae"] = v;
  ordered_json p;
  p["chunk_len"] = rc.policy.chunk_len;
  p["exec_steps"] = rc.policy.exec_steps;
  p["obs_feat"] = rc.policy.obs_feat;
  p["obs_hidden"] = rc.policy.obs_hidden;
  p["denoiser_hidden"] = rc.policy.denoiser_hidden;
  p["classifier_hidden"] = rc.policy.classifier_hidden;
  p["T"] = rc.policy.T;
  p["beta_start"] = rc.policy.beta_start;
  p["beta_end"] = rc.policy.beta_end;
  p["lr"] = rc.policy.lr;
  p["batch_size"] = rc.policy.batch_size;
  p["epochs"] = rc.policy.epochs;
  p["grad_clip"] = rc.policy.grad_clip;
  p["class_weight"] = rc.policy.class_weight;
  p["arm_conditioning"] = rc.policy.arm_conditioning;
  p["num_codes"] = rc.policy.num_codes;
  j["policy"] = p;
  return j.dump(2) + "\n";
}

}  // namespace dqrise
