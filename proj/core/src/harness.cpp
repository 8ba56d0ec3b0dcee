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

#include "coperc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "json_util.hpp"

namespace coperc {
namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream os(p, std::ios::out | mode);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, const fs::path& file) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "' in " + file.string());
  }
}

// Rows of a CSV with a header; empty vector if the file is absent.
std::vector<std::vector<std::string>> read_csv(const fs::path& p,
                                               const std::string& header) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream is(p);
  if (!is) return rows;
  std::string line;
  if (!std::getline(is, line) || line != header) {
    throw ParseError("unexpected header in " + p.string());
  }
  while (std::getline(is, line)) {
    if (!line.empty()) rows.push_back(split(line, ','));
  }
  return rows;
}

JointAction all_selected(std::size_t uavs, std::size_t kappa_idx) {
  JointAction a;
  a.select.assign(uavs, 1);
  a.kappa_idx.assign(uavs, kappa_idx);
  a.precoder_idx.assign(uavs, 0);
  return a;
}

}  // namespace

void RunConfig::validate() const {
  resolved_env().validate();
  resolved_policy().validate();
  if (output.empty()) throw ConfigError("output: must not be empty");
}

EnvConfig RunConfig::resolved_env() const {
  EnvConfig e = env;
  e.seed = seed;
  e.scenario.seed = seed;
  return e;
}

PolicyConfig RunConfig::resolved_policy() const {
  PolicyConfig p = policy;
  p.seed = seed;
  return p;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  nlohmann::json env = env_config_to_json(c.env);
  nlohmann::json pol = policy_config_to_json(c.policy);
  // The root seed is the single source; nested seeds are derived from it.
  env.erase("seed");
  env["scenario"].erase("seed");
  pol.erase("seed");
  return {{"env", env}, {"policy", pol}, {"seed", c.seed}, {"output", c.output}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::StrictObject o(j, "config");
  if (const auto* e = o.child("env")) c.env = env_config_from_json(*e);
  if (const auto* p = o.child("policy")) c.policy = policy_config_from_json(*p);
  o.read("seed", c.seed);
  o.read("output", c.output);
  o.finish();
  c.env.seed = c.seed;
  c.env.scenario.seed = c.seed;
  c.policy.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void prepare_run_dir(const fs::path& dir, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  open_out(dir / "config.json") << run_config_to_json(cfg).dump(2) << '\n';
  open_out(dir / "seed.txt") << cfg.seed << '\n';
  open_out(dir / "version.txt") << version_string() << '\n';
}

std::size_t worker_count() {
  if (const char* s = std::getenv("COPERC_WORKERS")) {
    try {
      const long v = std::stol(s);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("COPERC_WORKERS must be a positive integer, got '") +
                      s + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

void cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  prepare_run_dir(out, cfg);
  Environment env(cfg.resolved_env());
  auto ledger = open_out(out / "ledger.csv");
  auto metrics = open_out(out / "metrics.csv");
  write_ledger_header(ledger);
  metrics << "state,kappa,";
  write_metrics_header(metrics);
  std::size_t row = 0;
  const KappaGrid& grid = cfg.env.params.kappa;
  for (std::size_t s = 0; s < env.states(); ++s) {
    for (std::size_t n = 0; n < grid.count; ++n) {
      JointAction a = all_selected(env.uavs(), n);
      a.precoder_idx = env.label_precoders(s, a);
      const StepOutcome o = env.step(s, a);
      write_ledger_row(ledger, row++, s, a, o);
      for (const auto& f : o.frames) {
        metrics << s << ',' << n << ',';
        write_metrics_row(metrics, f);
      }
    }
  }
}

PolicyEvaluation cmd_train(const RunConfig& cfg, const fs::path& out,
                           const TrainOptions& opts) {
  cfg.validate();
  const PolicyConfig pcfg = cfg.resolved_policy();
  Environment env(cfg.resolved_env());
  const fs::path ckpt = out / "checkpoint.json";

  PolicyState st;
  if (opts.resume) {
    if (!fs::exists(ckpt)) throw IoError("no checkpoint to resume: " + ckpt.string());
    const RunConfig saved = load_run_config(out / "config.json");
    if (!(saved == cfg)) {
      throw ConfigError("config differs from the run being resumed");
    }
    st = load_checkpoint(ckpt, pcfg);
  } else {
    prepare_run_dir(out, cfg);
    st = init_policy(env, pcfg);
    auto ledger = open_out(out / "ledger.csv");
    write_ledger_header(ledger);
  }

  std::size_t target = pcfg.steps;
  if (opts.stop_after) target = std::min(target, *opts.stop_after);
  if (target > st.steps_done) {
    auto ledger = open_out(out / "ledger.csv", std::ios::app);
    train_policy(env, pcfg, st, target - st.steps_done, &ledger);
  }
  save_checkpoint(st, pcfg, ckpt);
  {
    auto curves = open_out(out / "curves.csv");
    write_curves_csv(curves, st.curves);
  }
  const PolicyEvaluation ev = evaluate_policy(env, pcfg, st);
  nlohmann::json j = {{"steps_done", st.steps_done},
                      {"mean_reward", ev.mean_reward},
                      {"mean_latency", ev.mean_latency},
                      {"mean_utility", ev.mean_utility},
                      {"mean_snr_db", ev.mean_snr_db}};
  open_out(out / "evaluation.json") << j.dump(2) << '\n';
  return ev;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "lambda") return SweepAxis::kLambda;
  if (name == "kappa") return SweepAxis::kKappa;
  if (name == "uav_count") return SweepAxis::kUavCount;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected lambda, kappa or uav_count)");
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLambda: return "lambda";
    case SweepAxis::kKappa: return "kappa";
    case SweepAxis::kUavCount: return "uav_count";
  }
  return "?";
}

std::vector<double> default_sweep_points(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLambda: return {0.1, 0.3, 0.5, 0.7, 0.9};
    case SweepAxis::kKappa: return {0.05, 0.1, 0.15, 0.25, 0.5};
    case SweepAxis::kUavCount: return {1, 2, 3, 4};
  }
  return {};
}

namespace {

SweepRow perception_point(const EnvConfig& base, double kappa) {
  EnvConfig e = base;
  e.params.kappa = KappaGrid{kappa, 0.05, 1};
  Environment env(e);
  SweepRow r;
  JointAction a = all_selected(env.uavs(), 0);
  for (std::size_t s = 0; s < env.states(); ++s) {
    a.precoder_idx = env.label_precoders(s, a);
    const StepOutcome out = env.step(s, a);
    r.mean_pq += out.utility_pq;
    r.mean_iou += out.utility_iou;
    r.latency += out.latency_max;
    r.reward += out.reward;
    double sinr = 0.0;
    for (double v : out.mean_sinr) sinr += v;
    r.snr_db += 10.0 * std::log10(sinr / static_cast<double>(env.uavs()));
  }
  const double n = static_cast<double>(env.states());
  r.mean_pq /= n;
  r.mean_iou /= n;
  r.latency /= n;
  r.reward /= n;
  r.snr_db /= n;
  r.utility = e.params.alpha * r.mean_pq + (1.0 - e.params.alpha) * r.mean_iou;
  return r;
}

}  // namespace

std::vector<SweepRow> run_sweep(const RunConfig& cfg, SweepAxis axis,
                                const std::vector<double>& points,
                                std::size_t workers) {
  cfg.validate();
  if (points.empty()) throw ConfigError("sweep needs at least one point");
  std::vector<SweepRow> rows(points.size());
  const EnvConfig base = cfg.resolved_env();
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const double x = points[i];
    SweepRow r;
    switch (axis) {
      case SweepAxis::kLambda: {
        if (!(x >= 0.0)) throw ConfigError("lambda points must be >= 0");
        EnvConfig e = base;
        e.params.lambda = x;
        e.validate();
        Environment env(e);
        const PolicyConfig p = cfg.resolved_policy();
        PolicyState st = init_policy(env, p);
        train_policy(env, p, st, p.steps);
        const PolicyEvaluation ev = evaluate_policy(env, p, st);
        r.utility = ev.mean_utility;
        r.latency = ev.mean_latency;
        r.snr_db = ev.mean_snr_db;
        r.reward = ev.mean_reward;
        break;
      }
      case SweepAxis::kKappa:
        if (!(x > 0.0 && x <= 1.0)) throw ConfigError("kappa points must lie in (0, 1]");
        r = perception_point(base, x);
        break;
      case SweepAxis::kUavCount: {
        if (!(x >= 1.0) || x != std::floor(x)) {
          throw ConfigError("uav_count points must be positive integers");
        }
        EnvConfig e = base;
        e.scenario.num_uavs = static_cast<std::size_t>(x);
        const KappaGrid& g = base.params.kappa;
        r = perception_point(e, g.at(g.count - 1));
        break;
      }
    }
    r.x = x;
    rows[i] = r;
  });
  if (axis == SweepAxis::kLambda) flag_crossings(rows);
  return rows;
}

void flag_crossings(std::vector<SweepRow>& rows) {
  for (auto& r : rows) r.crossing = false;
  if (rows.size() < 2) return;
  auto normalise = [&](auto get) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rows) {
      lo = std::min(lo, get(r));
      hi = std::max(hi, get(r));
    }
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(hi > lo ? (get(r) - lo) / (hi - lo) : 0.5);
    return v;
  };
  const auto u = normalise([](const SweepRow& r) { return r.utility; });
  const auto s = normalise([](const SweepRow& r) { return r.snr_db; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = u[i - 1] - s[i - 1];
    const double b = u[i] - s[i];
    if ((a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)) rows[i].crossing = true;
  }
}

std::vector<SweepRow> cmd_sweep(const RunConfig& cfg, SweepAxis axis,
                                const std::vector<double>& points,
                                const fs::path& out) {
  cfg.validate();
  prepare_run_dir(out, cfg);
  const auto rows = run_sweep(cfg, axis, points, worker_count());
  auto os = open_out(out / (std::string("sweep_") + sweep_axis_name(axis) + ".csv"));
  os << std::setprecision(17);
  os << sweep_axis_name(axis)
     << ",mean_iou,mean_pq,utility,latency,snr_db,reward,crossing\n";
  for (const auto& r : rows) {
    os << r.x << ',' << r.mean_iou << ',' << r.mean_pq << ',' << r.utility << ','
       << r.latency << ',' << r.snr_db << ',' << r.reward << ',' << (r.crossing ? 1 : 0)
       << '\n';
  }
  return rows;
}

ReportSummary cmd_report(const fs::path& dir, std::optional<CostRatio> cost) {
  if (!fs::is_directory(dir)) throw IoError("run directory not found: " + dir.string());
  ReportSummary rep;
  std::ostringstream longf;
  longf << std::setprecision(17) << "source,series,x,value\n";

  const fs::path ledger_path = dir / "ledger.csv";
  const auto ledger = read_csv(
      ledger_path,
      "step,state,select,kappa,precoder,rate_bps,latency_max,iou,pq,reward");
  for (const auto& row : ledger) {
    if (row.size() != 10) throw ParseError("bad row in " + ledger_path.string());
    for (const auto& r : split(row[5], ';')) rep.total_rate_bps += to_double(r, ledger_path);
    const double lat = to_double(row[6], ledger_path);
    const double iou = to_double(row[7], ledger_path);
    const double pq = to_double(row[8], ledger_path);
    const double reward = to_double(row[9], ledger_path);
    rep.mean_latency += lat;
    rep.max_latency = std::max(rep.max_latency, lat);
    rep.mean_iou += iou;
    rep.mean_pq += pq;
    rep.mean_reward += reward;
    longf << "ledger,reward," << row[0] << ',' << reward << '\n';
    longf << "ledger,latency," << row[0] << ',' << lat << '\n';
  }
  rep.ledger_rows = ledger.size();
  if (rep.ledger_rows) {
    const double n = static_cast<double>(rep.ledger_rows);
    rep.mean_latency /= n;
    rep.mean_iou /= n;
    rep.mean_pq /= n;
    rep.mean_reward /= n;
  }

  const fs::path curves_path = dir / "curves.csv";
  for (const auto& row : read_csv(curves_path, "epoch,reward,latency,q_loss,diffusion_loss")) {
    if (row.size() != 5) throw ParseError("bad row in " + curves_path.string());
    static const char* names[] = {"reward", "latency", "q_loss", "diffusion_loss"};
    for (int k = 0; k < 4; ++k) {
      longf << "curves," << names[k] << ',' << row[0] << ','
            << to_double(row[static_cast<std::size_t>(k) + 1], curves_path) << '\n';
    }
  }

  for (SweepAxis axis : {SweepAxis::kLambda, SweepAxis::kKappa, SweepAxis::kUavCount}) {
    const std::string name = sweep_axis_name(axis);
    const fs::path p = dir / ("sweep_" + name + ".csv");
    const auto rows =
        read_csv(p, name + ",mean_iou,mean_pq,utility,latency,snr_db,reward,crossing");
    static const char* cols[] = {"mean_iou", "mean_pq", "utility", "latency",
                                 "snr_db", "reward", "crossing"};
    for (const auto& row : rows) {
      if (row.size() != 8) throw ParseError("bad row in " + p.string());
      for (int k = 0; k < 7; ++k) {
        longf << "sweep_" << name << ',' << cols[k] << ',' << row[0] << ','
              << to_double(row[static_cast<std::size_t>(k) + 1], p) << '\n';
      }
    }
  }

  std::ostringstream txt;
  txt << std::setprecision(6);
  txt << "run: " << dir.filename().string() << '\n';
  std::ifstream vs(dir / "version.txt");
  std::string version;
  if (vs && std::getline(vs, version)) txt << "version: " << version << '\n';
  txt << "ledger rows: " << rep.ledger_rows << '\n';
  if (rep.ledger_rows) {
    txt << "mean reward: " << rep.mean_reward << '\n'
        << "mean latency [s]: " << rep.mean_latency << '\n'
        << "max latency [s]: " << rep.max_latency << '\n'
        << "mean IoU: " << rep.mean_iou << '\n'
        << "mean PQ: " << rep.mean_pq << '\n'
        << "total rate [bit/s]: " << rep.total_rate_bps << '\n';
  }
  if (cost) {
    if (!(cost->baseline > 0.0) || !(cost->ours >= 0.0)) {
      throw ConfigError("cost values must satisfy ours >= 0 and baseline > 0");
    }
    rep.cost_ratio = cost->ours / cost->baseline;
    txt << "transmission cost ratio: " << std::fixed << std::setprecision(1)
        << 100.0 * *rep.cost_ratio << "%\n";
    longf << "cost,ratio,0," << *rep.cost_ratio << '\n';
  }
  rep.text = txt.str();
  open_out(dir / "summary.txt") << rep.text;
  open_out(dir / "report.csv") << longf.str();
  return rep;
}

}  // namespace coperc
