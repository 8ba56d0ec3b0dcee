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

#include "coperc/objective_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "json_util.hpp"

namespace coperc {
namespace {

std::vector<std::uint32_t> score_ranking(const std::vector<double>& scores) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

std::vector<double> pixel_scores(const DenseImage& image) {
  return neighborhood_score(importance_map(image));
}

std::string join(std::span<const std::size_t> v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(v[k]);
  }
  return s;
}

std::size_t prediction_begin(const ScenarioConfig& cfg) {
  return cfg.input_frames < cfg.frames ? cfg.input_frames : 0;
}

}  // namespace

void KappaGrid::validate() const {
  if (count < 1) throw ConfigError("kappa grid needs at least one value");
  if (!(kappa_min > 0.0) || kappa_min > 1.0) {
    throw ConfigError("kappa_min must lie in (0, 1]");
  }
  if (count > 1 && !(step > 0.0)) {
    throw ConfigError("kappa step must be > 0");
  }
  if (at(count - 1) > 1.0 + 1e-12) {
    throw ConfigError("largest kappa exceeds 1");
  }
}

double KappaGrid::at(std::size_t n) const {
  if (n >= count) throw RangeError("kappa index out of range");
  return std::min(1.0, kappa_min + static_cast<double>(n) * step);
}

std::vector<double> KappaGrid::values() const {
  std::vector<double> v;
  for (std::size_t n = 0; n < count; ++n) v.push_back(at(n));
  return v;
}

std::uint32_t JointAction::select_mask() const {
  std::uint32_t m = 0;
  for (std::size_t u = 0; u < select.size(); ++u) {
    if (select[u]) m |= 1u << u;
  }
  return m;
}

std::size_t JointAction::selected_count() const {
  return static_cast<std::size_t>(std::count_if(
      select.begin(), select.end(), [](std::uint8_t s) { return s != 0; }));
}

void validate_action(const JointAction& a, std::size_t uavs,
                     const KappaGrid& kappa, std::size_t codebook_size) {
  if (a.select.size() != uavs || a.kappa_idx.size() != uavs ||
      a.precoder_idx.size() != uavs) {
    throw ConstraintViolation("association", "action must carry one entry per UAV");
  }
  for (std::uint8_t s : a.select) {
    if (s > 1) throw ConstraintViolation("association", "association must be binary");
  }
  if (a.selected_count() == 0) {
    throw ConstraintViolation("association", "at least one UAV must be selected");
  }
  for (std::size_t u = 0; u < uavs; ++u) {
    if (!a.select[u]) continue;
    if (a.kappa_idx[u] >= kappa.count) {
      throw ConstraintViolation("kappa_range", "kappa index " +
                                           std::to_string(a.kappa_idx[u]) +
                                           " outside the grid");
    }
    if (a.precoder_idx[u] >= codebook_size) {
      throw ConstraintViolation("codebook_membership", "precoder index " +
                                           std::to_string(a.precoder_idx[u]) +
                                           " outside the codebook");
    }
  }
}

void StepParams::validate() const {
  kappa.validate();
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (bits_per_value < 1 || bits_per_value > 32) {
    throw ConfigError("bits_per_value must lie in [1, 32]");
  }
  if (!(tx_power > 0.0)) throw ConfigError("tx_power must be > 0");
  if (!(noise_var > 0.0)) throw ConfigError("noise_var must be > 0");
}

double latency(double payload_bits, double rate_bps) {
  if (rate_bps < 0.0) throw RangeError("rate must be >= 0");
  if (rate_bps == 0.0) return std::numeric_limits<double>::infinity();
  return payload_bits / rate_bps;
}

double max_latency(std::span<const std::uint8_t> selected,
                   std::span<const double> latencies) {
  if (selected.size() != latencies.size()) {
    throw ShapeError("selection and latency vectors differ in size");
  }
  bool any = false;
  double worst = 0.0;
  for (std::size_t u = 0; u < selected.size(); ++u) {
    if (!selected[u]) continue;
    worst = any ? std::max(worst, latencies[u]) : latencies[u];
    any = true;
  }
  if (!any) throw EmptySelectionError("max latency needs a selected UAV");
  return worst;
}

double reward_value(double utility_pq, double utility_iou, double latency_max,
                    double alpha, double lambda) {
  return alpha * utility_pq + (1.0 - alpha) * utility_iou -
         lambda * latency_max;
}

ActionSpaceSizes action_space_sizes(std::size_t uavs, std::size_t kappa_count,
                                    std::size_t codebook_size) {
  if (uavs < 1 || kappa_count < 1 || codebook_size < 1) {
    throw RangeError("action space arguments must be >= 1");
  }
  if (uavs >= 64) throw RangeError("too many UAVs for a 64-bit action count");
  auto ipow = [](std::uint64_t b, std::size_t e) {
    std::uint64_t r = 1;
    for (std::size_t k = 0; k < e; ++k) {
      if (r > std::numeric_limits<std::uint64_t>::max() / b) {
        throw RangeError("action space size overflows 64 bits");
      }
      r *= b;
    }
    return r;
  };
  ActionSpaceSizes s;
  s.uav_sets = (std::uint64_t{1} << uavs) - 1;
  s.kappas = ipow(kappa_count, uavs);
  s.precoders = ipow(codebook_size, uavs);
  return s;
}

TransmittedView transmit_view(const DenseImage& image, double kappa,
                              unsigned bits_per_value) {
  const SparseImage sent = top_k_select(image, pixel_scores(image), kappa);
  const WirePacket packet = encode_sparse(sent, bits_per_value);
  TransmittedView tv;
  tv.received = decode_sparse(packet);
  tv.payload_bits = data_size(sent, bits_per_value);
  tv.wire_bits = packet.bits;
  if (tv.received.mask != sent.mask || tv.received.indices != sent.indices) {
    throw NumericError("wire transfer altered the sparse image");
  }
  return tv;
}

StepOutcome step(const Scenario& scenario, const ChannelRealization& channel,
                 const PrecoderCodebook& codebook, const JointAction& action,
                 const StepParams& params) {
  params.validate();
  const std::size_t U = scenario.uavs.size();
  validate_action(action, U, params.kappa, codebook.size());
  const auto& cfg = scenario.config;

  StepOutcome out;
  out.payload_bits.assign(U, 0.0);
  out.wire_bits.assign(U, 0.0);
  out.latency.assign(U, 0.0);

  std::vector<double> ious;
  std::vector<MatchResult> matches;
  for (std::size_t f = prediction_begin(cfg); f < cfg.frames; ++f) {
    BevGrid fused(cfg.bev);
    for (std::size_t u = 0; u < U; ++u) {
      if (!action.select[u]) continue;
      const UavPose& pose = scenario.uavs[u];
      const DenseImage view = render_view(scenario, pose, f);
      const TransmittedView tv = transmit_view(
          view, params.kappa.at(action.kappa_idx[u]), params.bits_per_value);
      out.payload_bits[u] = static_cast<double>(tv.payload_bits);
      out.wire_bits[u] = static_cast<double>(tv.wire_bits);
      fused += project_view_to_bev(view, pose.camera, pose.extrinsics(),
                                   cfg.bev, tv.received.mask);
    }
    const LabeledBev pred = labels_from_bev(fused);
    const FrameMetrics m = evaluate_frame(f, pred, scenario.ground_truth[f]);
    out.frames.push_back(m);
    ious.push_back(m.iou);
  }
  double pq_sum = 0.0;
  for (const auto& m : out.frames) pq_sum += m.pq.pq;
  out.utility_pq = pq_sum / static_cast<double>(out.frames.size());
  out.utility_iou = mean_iou_over_frames(ious);

  LinkState link;
  link.selected = action.select;
  link.precoder = action.precoder_idx;
  for (std::size_t u = 0; u < U; ++u) {
    if (!link.selected[u]) link.precoder[u] = 0;
  }
  link.power.assign(U, params.tx_power);
  link.noise_var = params.noise_var;
  const LinkEvaluation ev = evaluate_link(channel, link, codebook);
  out.rate_bps = ev.rate_bps;
  out.mean_sinr = ev.mean_sinr;
  for (std::size_t u = 0; u < U; ++u) {
    if (action.select[u]) out.latency[u] = latency(out.payload_bits[u], ev.rate_bps[u]);
  }
  out.latency_max = max_latency(action.select, out.latency);
  out.reward = reward_value(out.utility_pq, out.utility_iou, out.latency_max,
                            params.alpha, params.lambda);
  return out;
}

void EnvConfig::validate() const {
  scenario.validate();
  channel.validate();
  params.validate();
  if (states < 1) throw ConfigError("environment needs at least one state");
  if (scenario.num_uavs > 16) {
    throw ConfigError("environment supports at most 16 UAVs");
  }
  if (scenario.input_frames >= scenario.frames) {
    throw ConfigError("need at least one prediction frame after the inputs");
  }
  const auto& a = channel.uav_array;
  if (a.polarizations != 2 || a.nx != codebook.nx || a.ny != codebook.ny) {
    throw ConfigError(
        "codebook (nx, ny) must match the dual-polarised UAV array");
  }
  if (codebook.ox < 1 || codebook.oy < 1) {
    throw ConfigError("codebook oversampling must be >= 1");
  }
}

nlohmann::json env_config_to_json(const EnvConfig& c) {
  const auto& p = c.params;
  return {{"scenario", scenario_config_to_json(c.scenario)},
          {"channel", channel_config_to_json(c.channel)},
          {"codebook",
           {{"nx", c.codebook.nx},
            {"ny", c.codebook.ny},
            {"ox", c.codebook.ox},
            {"oy", c.codebook.oy}}},
          {"params",
           {{"kappa",
             {{"kappa_min", p.kappa.kappa_min},
              {"step", p.kappa.step},
              {"count", p.kappa.count}}},
            {"alpha", p.alpha},
            {"lambda", p.lambda},
            {"bits_per_value", p.bits_per_value},
            {"tx_power", p.tx_power},
            {"noise_var", p.noise_var}}},
          {"states", c.states},
          {"seed", c.seed}};
}

EnvConfig env_config_from_json(const nlohmann::json& j) {
  EnvConfig c;
  detail::StrictObject o(j, "env");
  if (const auto* s = o.child("scenario")) c.scenario = scenario_config_from_json(*s);
  if (const auto* s = o.child("channel")) c.channel = channel_config_from_json(*s);
  if (const auto* s = o.child("codebook")) {
    detail::StrictObject cb(*s, "env.codebook");
    cb.read("nx", c.codebook.nx);
    cb.read("ny", c.codebook.ny);
    cb.read("ox", c.codebook.ox);
    cb.read("oy", c.codebook.oy);
    cb.finish();
  }
  if (const auto* s = o.child("params")) {
    detail::StrictObject pr(*s, "env.params");
    if (const auto* k = pr.child("kappa")) {
      detail::StrictObject kg(*k, "env.params.kappa");
      kg.read("kappa_min", c.params.kappa.kappa_min);
      kg.read("step", c.params.kappa.step);
      kg.read("count", c.params.kappa.count);
      kg.finish();
    }
    pr.read("alpha", c.params.alpha);
    pr.read("lambda", c.params.lambda);
    pr.read("bits_per_value", c.params.bits_per_value);
    pr.read("tx_power", c.params.tx_power);
    pr.read("noise_var", c.params.noise_var);
    pr.finish();
  }
  o.read("states", c.states);
  o.read("seed", c.seed);
  o.finish();
  return c;
}

Environment::Environment(EnvConfig cfg)
    : cfg_(std::move(cfg)),
      codebook_(cfg_.codebook.nx, cfg_.codebook.ny, cfg_.codebook.ox,
                cfg_.codebook.oy) {
  cfg_.validate();
  for (std::size_t s = 0; s < cfg_.states; ++s) {
    ScenarioConfig sc = cfg_.scenario;
    sc.seed = derive_seed(cfg_.seed, "scenario", s);
    Scenario scen = generate_scenario(sc);
    ChannelRealization ch = realize_channel(scen, cfg_.channel, cfg_.seed, s);
    states_.push_back({std::move(scen), std::move(ch)});
  }
}

const Environment::ViewCache& Environment::view(std::size_t state,
                                                std::size_t frame,
                                                std::size_t uav) {
  const auto key = std::make_tuple(state, frame, uav);
  auto it = views_.find(key);
  if (it != views_.end()) return it->second;
  const Scenario& sc = states_.at(state).scenario;
  const UavPose& pose = sc.uavs.at(uav);
  const DenseImage img = render_view(sc, pose, frame);
  ViewCache vc;
  vc.ranking = score_ranking(pixel_scores(img));
  vc.id = img.instance_ids();
  vc.cell.assign(img.pixel_count(), -1);
  const CameraExtrinsics extr = pose.extrinsics();
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) {
      const std::size_t p = img.pixel_index(i, j);
      if (vc.id[p] == 0) continue;
      const LiftResult r = lift_pixel_to_bev(
          pose.camera, extr, {static_cast<double>(i), static_cast<double>(j)},
          0.0, sc.config.bev);
      if (r.ok()) {
        vc.cell[p] = static_cast<std::int32_t>(sc.config.bev.index(r.cell.w, r.cell.h));
      }
    }
  }
  return views_.emplace(key, std::move(vc)).first->second;
}

JointAction Environment::canonical(const JointAction& a) const {
  JointAction c = a;
  for (std::size_t u = 0; u < c.select.size(); ++u) {
    if (!c.select[u]) {
      c.kappa_idx[u] = 0;
      c.precoder_idx[u] = 0;
    }
  }
  return c;
}

std::pair<double, double> Environment::utilities(std::size_t state,
                                                 const JointAction& action) {
  validate_action(action, uavs(), cfg_.params.kappa, codebook_.size());
  std::vector<std::size_t> key(uavs());
  for (std::size_t u = 0; u < uavs(); ++u) {
    key[u] = action.select[u] ? action.kappa_idx[u] + 1 : 0;
  }
  const auto ck = std::make_pair(state, key);
  if (auto it = utilities_.find(ck); it != utilities_.end()) return it->second;

  const Scenario& sc = states_.at(state).scenario;
  const auto& cfg = sc.config;
  double iou_sum = 0.0;
  double pq_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t f = prediction_begin(cfg); f < cfg.frames; ++f) {
    BevGrid fused(cfg.bev);
    const std::size_t W = cfg.bev.width();
    for (std::size_t u = 0; u < uavs(); ++u) {
      if (!action.select[u]) continue;
      const ViewCache& vc = view(state, f, u);
      const std::size_t k = top_k_count(cfg.image_rows, cfg.image_cols,
                                        cfg_.params.kappa.at(action.kappa_idx[u]));
      for (std::size_t r = 0; r < k; ++r) {
        const std::uint32_t p = vc.ranking[r];
        if (vc.id[p] == 0 || vc.cell[p] < 0) continue;
        const auto c = static_cast<std::size_t>(vc.cell[p]);
        fused.add(c % W, c / W, vc.id[p]);
      }
    }
    const FrameMetrics m =
        evaluate_frame(f, labels_from_bev(fused), sc.ground_truth[f]);
    iou_sum += m.iou;
    pq_sum += m.pq.pq;
    ++n;
  }
  const auto val = std::make_pair(pq_sum / static_cast<double>(n),
                                  iou_sum / static_cast<double>(n));
  utilities_.emplace(ck, val);
  return val;
}

LinkEvaluation Environment::link(std::size_t state, const JointAction& action) {
  validate_action(action, uavs(), cfg_.params.kappa, codebook_.size());
  std::vector<std::size_t> key(uavs());
  for (std::size_t u = 0; u < uavs(); ++u) {
    key[u] = action.select[u] ? action.precoder_idx[u] + 1 : 0;
  }
  const auto ck = std::make_pair(state, key);
  if (auto it = links_.find(ck); it != links_.end()) return it->second;
  LinkState ls;
  ls.selected = action.select;
  ls.precoder = canonical(action).precoder_idx;
  ls.power.assign(uavs(), cfg_.params.tx_power);
  ls.noise_var = cfg_.params.noise_var;
  LinkEvaluation ev = evaluate_link(states_.at(state).channel, ls, codebook_);
  links_.emplace(ck, ev);
  return ev;
}

std::vector<double> Environment::payload_bits(const JointAction& action) const {
  const auto& sc = cfg_.scenario;
  std::vector<double> bits(uavs(), 0.0);
  for (std::size_t u = 0; u < uavs(); ++u) {
    if (!action.select[u]) continue;
    bits[u] = static_cast<double>(data_size(
        sc.image_rows, sc.image_cols, 3, cfg_.params.kappa.at(action.kappa_idx[u]),
        cfg_.params.bits_per_value));
  }
  return bits;
}

std::vector<std::size_t> Environment::label_precoders(std::size_t state,
                                                      const JointAction& action) {
  validate_action(action, uavs(), cfg_.params.kappa, codebook_.size());
  std::vector<std::size_t> key(uavs());
  for (std::size_t u = 0; u < uavs(); ++u) {
    key[u] = action.select[u] ? action.kappa_idx[u] + 1 : 0;
  }
  const auto ck = std::make_pair(state, key);
  if (auto it = labels_.find(ck); it != labels_.end()) return it->second;

  LinkState ls;
  ls.selected = action.select;
  ls.precoder.assign(uavs(), 0);
  ls.power.assign(uavs(), cfg_.params.tx_power);
  ls.noise_var = cfg_.params.noise_var;
  SearchOptions opt;
  opt.objective = SearchObjective::kReward;
  opt.payload_bits = payload_bits(action);
  const SearchResult res =
      exhaustive_precoder_search(states_.at(state).channel, ls, codebook_, opt);
  labels_.emplace(ck, res.precoder);
  return res.precoder;
}

StepOutcome Environment::step(std::size_t state, const JointAction& action) {
  return step(state, action, cfg_.params.alpha, cfg_.params.lambda);
}

StepOutcome Environment::step(std::size_t state, const JointAction& action,
                              double alpha, double lambda) {
  if (state >= states_.size()) throw RangeError("environment state out of range");
  validate_action(action, uavs(), cfg_.params.kappa, codebook_.size());
  StepOutcome out;
  std::tie(out.utility_pq, out.utility_iou) = utilities(state, action);
  const LinkEvaluation ev = link(state, action);
  out.rate_bps = ev.rate_bps;
  out.mean_sinr = ev.mean_sinr;
  out.payload_bits = payload_bits(action);
  out.wire_bits.assign(uavs(), 0.0);
  out.latency.assign(uavs(), 0.0);
  for (std::size_t u = 0; u < uavs(); ++u) {
    if (!action.select[u]) continue;
    const std::size_t k =
        top_k_count(cfg_.scenario.image_rows, cfg_.scenario.image_cols,
                    cfg_.params.kappa.at(action.kappa_idx[u]));
    out.wire_bits[u] = out.payload_bits[u] + static_cast<double>(wire_overhead_bits(k));
    out.latency[u] = latency(out.payload_bits[u], ev.rate_bps[u]);
  }
  out.latency_max = max_latency(action.select, out.latency);
  out.reward = reward_value(out.utility_pq, out.utility_iou, out.latency_max,
                            alpha, lambda);
  return out;
}

std::vector<double> Environment::state_features(std::size_t state) {
  if (auto it = features_.find(state); it != features_.end()) return it->second;
  const Scenario& sc = states_.at(state).scenario;
  const std::size_t obs = sc.config.input_frames > 0 ? sc.config.input_frames - 1 : 0;
  std::vector<double> f;
  for (std::size_t u = 0; u < uavs(); ++u) {
    const CMatrix h = states_[state].channel.mean_channel(u);
    f.push_back(h.cwiseAbs().mean() * std::sqrt(static_cast<double>(h.size())));
    const ViewCache& vc = view(state, obs, u);
    std::set<std::int32_t> ids;
    std::size_t fg = 0;
    for (std::int32_t id : vc.id) {
      if (id != 0) {
        ++fg;
        ids.insert(id);
      }
    }
    f.push_back(static_cast<double>(fg) / static_cast<double>(vc.id.size()));
    f.push_back(static_cast<double>(ids.size()) /
                static_cast<double>(sc.vehicles.size()));
  }
  features_.emplace(state, f);
  return f;
}

std::vector<JointAction> Environment::canonical_actions() const {
  const std::size_t U = uavs();
  const std::size_t K = cfg_.params.kappa.count;
  std::vector<JointAction> out;
  for (std::uint32_t mask = 1; mask < (1u << U); ++mask) {
    std::vector<std::size_t> sel;
    for (std::size_t u = 0; u < U; ++u) {
      if (mask & (1u << u)) sel.push_back(u);
    }
    std::vector<std::size_t> digits(sel.size(), 0);
    bool done = false;
    while (!done) {
      JointAction a;
      a.select.assign(U, 0);
      a.kappa_idx.assign(U, 0);
      a.precoder_idx.assign(U, 0);
      for (std::size_t k = 0; k < sel.size(); ++k) {
        a.select[sel[k]] = 1;
        a.kappa_idx[sel[k]] = digits[k];
      }
      out.push_back(std::move(a));
      std::size_t k = sel.size();
      done = true;
      while (k-- > 0) {
        if (++digits[k] < K) {
          done = false;
          break;
        }
        digits[k] = 0;
      }
    }
  }
  return out;
}

Environment::Optimum Environment::enumerate_optimum(std::size_t state,
                                                    double alpha,
                                                    double lambda) {
  Optimum best;
  best.reward = -std::numeric_limits<double>::infinity();
  for (JointAction a : canonical_actions()) {
    a.precoder_idx = label_precoders(state, a);
    const double r = step(state, a, alpha, lambda).reward;
    if (r > best.reward) {
      best.reward = r;
      best.action = a;
    }
  }
  return best;
}

void write_ledger_header(std::ostream& os) {
  os << "step,state,select,kappa,precoder,rate_bps,latency_max,iou,pq,reward\n";
}

void write_ledger_row(std::ostream& os, std::size_t step_index,
                      std::size_t state, const JointAction& action,
                      const StepOutcome& o) {
  const auto old = os.precision(17);
  os << step_index << ',' << state << ',' << action.select_mask() << ','
     << join(action.kappa_idx) << ',' << join(action.precoder_idx) << ',';
  for (std::size_t u = 0; u < o.rate_bps.size(); ++u) {
    if (u) os << ';';
    os << o.rate_bps[u];
  }
  os << ',' << o.latency_max << ',' << o.utility_iou << ',' << o.utility_pq
     << ',' << o.reward << '\n';
  os.precision(old);
}

}  // namespace coperc
