// SPDX-License-Identifier: Apache-2.0
//
// coperc: multi-UAV cooperative perception link and policy simulator
// Copyright (C) 2026 The coperc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "coperc/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "json_util.hpp"

namespace coperc {
namespace {

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vector random_normal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = normal(rng);
  return v;
}

double epsilon_at(const PolicyConfig& cfg, std::size_t step) {
  if (cfg.epsilon_decay_steps == 0 || step >= cfg.epsilon_decay_steps) {
    return cfg.epsilon_end;
  }
  const double frac =
      static_cast<double>(step) / static_cast<double>(cfg.epsilon_decay_steps);
  return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw ParseError("checkpoint RNG state is malformed");
  return rng;
}

std::size_t w_dim(const Environment& env) {
  return env.uavs() * env.codebook().ports() * 2;
}

}  // namespace

Vector flatten_precoders(std::span<const std::size_t> precoder_idx,
                         std::span<const std::uint8_t> select,
                         const PrecoderCodebook& codebook) {
  if (precoder_idx.size() != select.size()) {
    throw ShapeError("precoder and selection vectors differ in size");
  }
  const std::size_t ports = codebook.ports();
  Vector w = Vector::Zero(static_cast<Eigen::Index>(select.size() * ports * 2));
  for (std::size_t u = 0; u < select.size(); ++u) {
    if (!select[u]) continue;
    const CVector& e = codebook.at(precoder_idx[u]);
    for (std::size_t p = 0; p < ports; ++p) {
      const auto k = static_cast<Eigen::Index>((u * ports + p) * 2);
      w(k) = e(static_cast<Eigen::Index>(p)).real();
      w(k + 1) = e(static_cast<Eigen::Index>(p)).imag();
    }
  }
  return w;
}

std::size_t nearest_codebook_entry(const CVector& v,
                                   const PrecoderCodebook& codebook) {
  if (codebook.size() == 0) throw ConfigError("codebook is empty");
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < codebook.size(); ++i) {
    const double val = std::abs(codebook.at(i).dot(v));
    if (val > best_val) {
      best_val = val;
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> project_to_codebook(const Vector& w,
                                             std::span<const std::uint8_t> select,
                                             const PrecoderCodebook& codebook) {
  const std::size_t ports = codebook.ports();
  if (static_cast<std::size_t>(w.size()) != select.size() * ports * 2) {
    throw ShapeError("flattened precoder vector has the wrong length");
  }
  std::vector<std::size_t> out(select.size(), 0);
  for (std::size_t u = 0; u < select.size(); ++u) {
    if (!select[u]) continue;
    CVector v(static_cast<Eigen::Index>(ports));
    for (std::size_t p = 0; p < ports; ++p) {
      const auto k = static_cast<Eigen::Index>((u * ports + p) * 2);
      v(static_cast<Eigen::Index>(p)) = Complex(w(k), w(k + 1));
    }
    out[u] = nearest_codebook_entry(v, codebook);
  }
  return out;
}

std::size_t condition_size(std::size_t uavs, std::size_t kappa_count,
                           std::size_t rx, std::size_t tx) {
  return ((std::size_t{1} << uavs) - 1) + uavs * kappa_count + uavs * rx * tx * 2;
}

Vector condition_vector(Environment& env, std::size_t state,
                        const JointAction& action) {
  const std::size_t U = env.uavs();
  const std::size_t K = env.config().params.kappa.count;
  const auto& ch = env.channel(state);
  Vector c = Vector::Zero(static_cast<Eigen::Index>(condition_size(U, K, ch.rx, ch.tx)));
  Eigen::Index k = 0;
  const std::uint32_t mask = action.select_mask();
  if (mask == 0) throw EmptySelectionError("condition needs a selected UAV");
  c(static_cast<Eigen::Index>(mask - 1)) = 1.0;
  k = static_cast<Eigen::Index>((std::size_t{1} << U) - 1);
  for (std::size_t u = 0; u < U; ++u) {
    if (action.select[u]) c(k + static_cast<Eigen::Index>(action.kappa_idx[u])) = 1.0;
    k += static_cast<Eigen::Index>(K);
  }
  const double scale = std::sqrt(static_cast<double>(ch.rx * ch.tx));
  for (std::size_t u = 0; u < U; ++u) {
    const CMatrix h = ch.mean_channel(u);
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
      for (Eigen::Index t = 0; t < h.cols(); ++t) {
        c(k++) = scale * std::abs(h(r, t));
        c(k++) = std::arg(h(r, t)) / kPi;
      }
    }
  }
  return c;
}

QNetwork::QNetwork(std::size_t feature_dim, std::size_t uavs,
                   std::size_t kappa_count, const std::vector<std::size_t>& hidden,
                   double learning_rate, double momentum, Rng& rng)
    : uavs_(uavs), kappa_count_(kappa_count) {
  if (uavs < 1 || uavs > 16 || kappa_count < 1) {
    throw ConfigError("Q-network needs 1..16 UAVs and >= 1 kappa value");
  }
  const std::size_t sets = (std::size_t{1} << uavs) - 1;
  std::vector<std::size_t> s1{feature_dim};
  s1.insert(s1.end(), hidden.begin(), hidden.end());
  s1.push_back(sets);
  std::vector<std::size_t> s2{feature_dim + sets};
  s2.insert(s2.end(), hidden.begin(), hidden.end());
  s2.push_back(uavs * kappa_count);
  set_head_ = Mlp(s1, rng);
  kappa_head_ = Mlp(s2, rng);
  set_opt_ = MomentumSgd(set_head_, learning_rate, momentum);
  kappa_opt_ = MomentumSgd(kappa_head_, learning_rate, momentum);
}

Vector QNetwork::kappa_input(const Vector& features, std::uint32_t mask) const {
  const std::size_t sets = (std::size_t{1} << uavs_) - 1;
  Vector x = Vector::Zero(features.size() + static_cast<Eigen::Index>(sets));
  x.head(features.size()) = features;
  x(features.size() + static_cast<Eigen::Index>(mask - 1)) = 1.0;
  return x;
}

double QNetwork::value(const Vector& features, const JointAction& action) const {
  const std::uint32_t mask = action.select_mask();
  if (mask == 0) throw EmptySelectionError("Q value needs a selected UAV");
  const Vector s = set_head_.forward(features);
  const Vector k = kappa_head_.forward(kappa_input(features, mask));
  double q = s(mask - 1);
  for (std::size_t u = 0; u < uavs_; ++u) {
    if (action.select[u]) {
      q += k(static_cast<Eigen::Index>(u * kappa_count_ + action.kappa_idx[u]));
    }
  }
  return q;
}

JointAction QNetwork::greedy(const Vector& features) const {
  const Vector s = set_head_.forward(features);
  JointAction best;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << uavs_); ++mask) {
    const Vector k = kappa_head_.forward(kappa_input(features, mask));
    JointAction a;
    a.select.assign(uavs_, 0);
    a.kappa_idx.assign(uavs_, 0);
    a.precoder_idx.assign(uavs_, 0);
    double q = s(mask - 1);
    for (std::size_t u = 0; u < uavs_; ++u) {
      if (!(mask & (1u << u))) continue;
      a.select[u] = 1;
      std::size_t arg = 0;
      for (std::size_t n = 1; n < kappa_count_; ++n) {
        if (k(static_cast<Eigen::Index>(u * kappa_count_ + n)) >
            k(static_cast<Eigen::Index>(u * kappa_count_ + arg))) {
          arg = n;
        }
      }
      a.kappa_idx[u] = arg;
      q += k(static_cast<Eigen::Index>(u * kappa_count_ + arg));
    }
    if (q > best_q || best.select.empty()) {
      best_q = q;
      best = std::move(a);
    }
  }
  return best;
}

double QNetwork::update(const Vector& features, const JointAction& action,
                        double target) {
  const std::uint32_t mask = action.select_mask();
  if (mask == 0) throw EmptySelectionError("Q update needs a selected UAV");
  Mlp::Tape ts;
  Mlp::Tape tk;
  const Vector s = set_head_.forward(features, ts);
  const Vector k = kappa_head_.forward(kappa_input(features, mask), tk);
  double q = s(mask - 1);
  for (std::size_t u = 0; u < uavs_; ++u) {
    if (action.select[u]) {
      q += k(static_cast<Eigen::Index>(u * kappa_count_ + action.kappa_idx[u]));
    }
  }
  const double d = q - target;
  Vector gs = Vector::Zero(s.size());
  gs(mask - 1) = d;
  Vector gk = Vector::Zero(k.size());
  for (std::size_t u = 0; u < uavs_; ++u) {
    if (action.select[u]) {
      gk(static_cast<Eigen::Index>(u * kappa_count_ + action.kappa_idx[u])) = d;
    }
  }
  MlpGradients g1 = set_head_.zero_gradients();
  MlpGradients g2 = kappa_head_.zero_gradients();
  set_head_.backward(ts, gs, g1);
  kappa_head_.backward(tk, gk, g2);
  set_opt_.step(set_head_, g1);
  kappa_opt_.step(kappa_head_, g2);
  return 0.5 * d * d;
}

JointAction q_select(const QNetwork& q, const Vector& features, double epsilon,
                     Rng& rng, std::span<const JointAction> valid) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (epsilon > 0.0 && unit(rng) < epsilon) {
    if (valid.empty()) throw EmptySelectionError("no valid actions to sample");
    std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
    JointAction a = valid[pick(rng)];
    std::fill(a.precoder_idx.begin(), a.precoder_idx.end(), 0);
    return a;
  }
  return q.greedy(features);
}

void PolicyConfig::validate() const {
  if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be >= 1");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
      !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw ConfigError("epsilon values must lie in [0, 1]");
  }
  if (diffusion_draws < 1) throw ConfigError("diffusion_draws must be >= 1");
  (void)schedule();
}

nlohmann::json policy_config_to_json(const PolicyConfig& c) {
  return {{"steps", c.steps},
          {"steps_per_epoch", c.steps_per_epoch},
          {"q_hidden", c.q_hidden},
          {"q_learning_rate", c.q_learning_rate},
          {"q_momentum", c.q_momentum},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"epsilon_decay_steps", c.epsilon_decay_steps},
          {"diffusion_hidden", c.diffusion_hidden},
          {"diffusion_learning_rate", c.diffusion_learning_rate},
          {"diffusion_momentum", c.diffusion_momentum},
          {"diffusion_draws", c.diffusion_draws},
          {"diffusion_steps", c.diffusion_steps},
          {"ddim_steps", c.ddim_steps},
          {"beta_start", c.beta_start},
          {"beta_end", c.beta_end},
          {"label_guided", c.label_guided},
          {"seed", c.seed}};
}

PolicyConfig policy_config_from_json(const nlohmann::json& j) {
  PolicyConfig c;
  detail::StrictObject o(j, "policy");
  o.read("steps", c.steps);
  o.read("steps_per_epoch", c.steps_per_epoch);
  o.read("q_hidden", c.q_hidden);
  o.read("q_learning_rate", c.q_learning_rate);
  o.read("q_momentum", c.q_momentum);
  o.read("epsilon_start", c.epsilon_start);
  o.read("epsilon_end", c.epsilon_end);
  o.read("epsilon_decay_steps", c.epsilon_decay_steps);
  o.read("diffusion_hidden", c.diffusion_hidden);
  o.read("diffusion_learning_rate", c.diffusion_learning_rate);
  o.read("diffusion_momentum", c.diffusion_momentum);
  o.read("diffusion_draws", c.diffusion_draws);
  o.read("diffusion_steps", c.diffusion_steps);
  o.read("ddim_steps", c.ddim_steps);
  o.read("beta_start", c.beta_start);
  o.read("beta_end", c.beta_end);
  o.read("label_guided", c.label_guided);
  o.read("seed", c.seed);
  o.finish();
  return c;
}

PolicyState init_policy(Environment& env, const PolicyConfig& cfg) {
  cfg.validate();
  PolicyState st;
  Rng init = make_rng(cfg.seed, "policy-init");
  st.q = QNetwork(env.state_feature_size(), env.uavs(),
                  env.config().params.kappa.count, cfg.q_hidden,
                  cfg.q_learning_rate, cfg.q_momentum, init);
  const auto& ch = env.channel(0);
  st.denoiser = Denoiser(
      w_dim(env),
      condition_size(env.uavs(), env.config().params.kappa.count, ch.rx, ch.tx),
      cfg.diffusion_hidden, init);
  st.diffusion_opt = MomentumSgd(st.denoiser.net(), cfg.diffusion_learning_rate,
                                 cfg.diffusion_momentum);
  st.rng = make_rng(cfg.seed, "policy");
  return st;
}

void train_policy(Environment& env, const PolicyConfig& cfg, PolicyState& st,
                  std::size_t steps, std::ostream* ledger) {
  const DiffusionSchedule schedule = cfg.schedule();
  const std::vector<JointAction> valid = env.canonical_actions();
  const PrecoderCodebook& cb = env.codebook();
  std::uniform_int_distribution<std::size_t> pick_state(0, env.states() - 1);
  std::uniform_int_distribution<std::size_t> pick_entry(0, cb.size() - 1);

  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t state = pick_state(st.rng);
    const Vector features = to_vector(env.state_features(state));
    JointAction a = q_select(st.q, features, epsilon_at(cfg, st.steps_done),
                             st.rng, valid);

    std::vector<std::size_t> label(env.uavs(), 0);
    if (cfg.label_guided) {
      label = env.label_precoders(state, a);
    } else {
      for (std::size_t u = 0; u < env.uavs(); ++u) {
        if (a.select[u]) label[u] = pick_entry(st.rng);
      }
    }
    const DiffusionSample sample{flatten_precoders(label, a.select, cb),
                                 condition_vector(env, state, a)};
    const double dloss = diffusion_train_step(
        st.denoiser, st.diffusion_opt, std::span<const DiffusionSample>(&sample, 1),
        schedule, st.rng, cfg.diffusion_draws);

    const Vector noise = random_normal(st.denoiser.w_dim(), st.rng);
    const SampleResult gen = ddim_sample(st.denoiser, sample.c, schedule, noise);
    a.precoder_idx = project_to_codebook(gen.w0, a.select, cb);

    const StepOutcome out = env.step(state, a);
    const double qloss = st.q.update(features, a, out.reward);

    if (ledger) write_ledger_row(*ledger, st.steps_done, state, a, out);
    ++st.steps_done;
    st.acc_reward += out.reward;
    st.acc_latency += out.latency_max;
    st.acc_q_loss += qloss;
    st.acc_diffusion_loss += dloss;
    if (++st.acc_count == cfg.steps_per_epoch) {
      const double m = static_cast<double>(st.acc_count);
      st.curves.reward.push_back(st.acc_reward / m);
      st.curves.latency.push_back(st.acc_latency / m);
      st.curves.q_loss.push_back(st.acc_q_loss / m);
      st.curves.diffusion_loss.push_back(st.acc_diffusion_loss / m);
      st.acc_reward = st.acc_latency = st.acc_q_loss = st.acc_diffusion_loss = 0.0;
      st.acc_count = 0;
    }
  }
}

JointAction policy_action(Environment& env, const PolicyConfig& cfg,
                          const PolicyState& st, std::size_t state, Rng& rng) {
  const Vector features = to_vector(env.state_features(state));
  JointAction a = st.q.greedy(features);
  const Vector c = condition_vector(env, state, a);
  const Vector noise = random_normal(st.denoiser.w_dim(), rng);
  const SampleResult gen = ddim_sample(st.denoiser, c, cfg.schedule(), noise);
  a.precoder_idx = project_to_codebook(gen.w0, a.select, env.codebook());
  return a;
}

PolicyEvaluation evaluate_policy(Environment& env, const PolicyConfig& cfg,
                                 const PolicyState& st) {
  PolicyEvaluation ev;
  const double alpha = env.config().params.alpha;
  for (std::size_t s = 0; s < env.states(); ++s) {
    Rng rng = make_rng(cfg.seed, "policy-eval", s);
    const JointAction a = policy_action(env, cfg, st, s, rng);
    const StepOutcome out = env.step(s, a);
    ev.mean_reward += out.reward;
    ev.mean_latency += out.latency_max;
    ev.mean_utility += out.weighted_utility(alpha);
    double sinr = 0.0;
    for (std::size_t u = 0; u < env.uavs(); ++u) {
      if (a.select[u]) sinr += out.mean_sinr[u];
    }
    ev.mean_snr_db +=
        10.0 * std::log10(sinr / static_cast<double>(a.selected_count()));
  }
  const double n = static_cast<double>(env.states());
  ev.mean_reward /= n;
  ev.mean_latency /= n;
  ev.mean_utility /= n;
  ev.mean_snr_db /= n;
  return ev;
}

double enumerated_optimum(Environment& env, double alpha, double lambda) {
  double sum = 0.0;
  for (std::size_t s = 0; s < env.states(); ++s) {
    sum += env.enumerate_optimum(s, alpha, lambda).reward;
  }
  return sum / static_cast<double>(env.states());
}

void save_checkpoint(const PolicyState& st, const PolicyConfig& cfg,
                     const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "coperc.checkpoint";
  j["schema_version"] = kCheckpointSchemaVersion;
  j["policy"] = policy_config_to_json(cfg);
  j["steps_done"] = st.steps_done;
  const QNetwork& q = st.q;
  j["q_set"] = mlp_to_json(q.set_head());
  j["q_kappa"] = mlp_to_json(q.kappa_head());
  j["q_set_velocity"] = q.set_optimizer().flat_velocity();
  j["q_kappa_velocity"] = q.kappa_optimizer().flat_velocity();
  j["denoiser"] = mlp_to_json(st.denoiser.net());
  j["denoiser_velocity"] = st.diffusion_opt.flat_velocity();
  j["rng"] = rng_to_string(st.rng);
  j["curves"] = {{"reward", st.curves.reward},
                 {"latency", st.curves.latency},
                 {"q_loss", st.curves.q_loss},
                 {"diffusion_loss", st.curves.diffusion_loss}};
  j["epoch_partial"] = {{"reward", st.acc_reward},
                        {"latency", st.acc_latency},
                        {"q_loss", st.acc_q_loss},
                        {"diffusion_loss", st.acc_diffusion_loss},
                        {"count", st.acc_count}};
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  os << j.dump(1) << '\n';
}

PolicyState load_checkpoint(const std::filesystem::path& path,
                            const PolicyConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw IoError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "coperc.checkpoint") {
    throw ParseError("not a coperc checkpoint: " + path.string());
  }
  if (j.value("schema_version", -1) != kCheckpointSchemaVersion) {
    throw VersionError("unsupported checkpoint schema version");
  }
  try {
    PolicyState st;
    const Mlp set_head = mlp_from_json(j.at("q_set"));
    const Mlp kappa_head = mlp_from_json(j.at("q_kappa"));
    const std::size_t sets = set_head.outputs();
    std::size_t uavs = 0;
    while (((std::size_t{1} << (uavs + 1)) - 1) <= sets) ++uavs;
    const std::size_t kappa_count = kappa_head.outputs() / uavs;
    Rng dummy(0);
    st.q = QNetwork(set_head.inputs(), uavs, kappa_count, cfg.q_hidden,
                    cfg.q_learning_rate, cfg.q_momentum, dummy);
    st.q.set_head() = set_head;
    st.q.kappa_head() = kappa_head;
    st.q.set_optimizer().set_flat_velocity(
        j.at("q_set_velocity").get<std::vector<double>>());
    st.q.kappa_optimizer().set_flat_velocity(
        j.at("q_kappa_velocity").get<std::vector<double>>());
    const Mlp den = mlp_from_json(j.at("denoiser"));
    const std::size_t wd = den.outputs();
    const std::size_t cd = den.inputs() - wd - Denoiser::kTimeEmbedding;
    st.denoiser = Denoiser(wd, cd, cfg.diffusion_hidden, dummy);
    st.denoiser.net() = den;
    st.diffusion_opt = MomentumSgd(st.denoiser.net(), cfg.diffusion_learning_rate,
                                   cfg.diffusion_momentum);
    st.diffusion_opt.set_flat_velocity(
        j.at("denoiser_velocity").get<std::vector<double>>());
    st.rng = rng_from_string(j.at("rng").get<std::string>());
    st.steps_done = j.at("steps_done").get<std::size_t>();
    const auto& c = j.at("curves");
    st.curves.reward = c.at("reward").get<std::vector<double>>();
    st.curves.latency = c.at("latency").get<std::vector<double>>();
    st.curves.q_loss = c.at("q_loss").get<std::vector<double>>();
    st.curves.diffusion_loss = c.at("diffusion_loss").get<std::vector<double>>();
    const auto& p = j.at("epoch_partial");
    st.acc_reward = p.at("reward").get<double>();
    st.acc_latency = p.at("latency").get<double>();
    st.acc_q_loss = p.at("q_loss").get<double>();
    st.acc_diffusion_loss = p.at("diffusion_loss").get<double>();
    st.acc_count = p.at("count").get<std::size_t>();
    return st;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

void write_curves_csv(std::ostream& os, const TrainingCurves& c) {
  const auto old = os.precision(17);
  os << "epoch,reward,latency,q_loss,diffusion_loss\n";
  for (std::size_t e = 0; e < c.reward.size(); ++e) {
    os << e << ',' << c.reward[e] << ',' << c.latency[e] << ',' << c.q_loss[e]
       << ',' << c.diffusion_loss[e] << '\n';
  }
  os.precision(old);
}

}  // namespace coperc
