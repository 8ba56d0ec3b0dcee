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

#include "coperc/mumimo_link.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace coperc {
namespace {

CVector dft_beam(std::size_t n, std::size_t oversample, std::size_t beam) {
  CVector v(static_cast<Eigen::Index>(n));
  const double denom = static_cast<double>(n * oversample);
  for (std::size_t k = 0; k < n; ++k) {
    // Reduce beam * k modulo the DFT size so the phase stays exact.
    const double cycles = static_cast<double>((beam * k) % (n * oversample)) / denom;
    v(static_cast<Eigen::Index>(k)) = std::polar(1.0, 2.0 * kPi * cycles);
  }
  return v;
}

void check_finite(const CMatrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string(what) + " is not finite");
}

}  // namespace

PrecoderCodebook::PrecoderCodebook(std::size_t nx, std::size_t ny,
                                   std::size_t ox, std::size_t oy)
    : nx_(nx), ny_(ny), ox_(ox), oy_(oy) {
  if (nx < 1 || ny < 1 || ox < 1 || oy < 1) {
    throw ConfigError("codebook dimensions must be >= 1");
  }
  const double norm = 1.0 / std::sqrt(2.0 * static_cast<double>(nx * ny));
  const auto half = static_cast<Eigen::Index>(nx * ny);
  entries_.reserve(ox * nx * oy * ny * 4);
  for (std::size_t n1 = 0; n1 < ox * nx; ++n1) {
    const CVector vx = dft_beam(nx, ox, n1);
    for (std::size_t n2 = 0; n2 < oy * ny; ++n2) {
      const CVector vy = dft_beam(ny, oy, n2);
      CVector m(half);
      for (Eigen::Index a = 0; a < vx.size(); ++a) {
        for (Eigen::Index b = 0; b < vy.size(); ++b) {
          m(a * vy.size() + b) = vx(a) * vy(b);
        }
      }
      for (std::size_t c = 0; c < 4; ++c) {
        CVector w(2 * half);
        w.head(half) = norm * m;
        w.tail(half) = norm * cophase(c) * m;
        entries_.push_back(std::move(w));
      }
    }
  }
}

std::size_t PrecoderCodebook::index(std::size_t n1, std::size_t n2,
                                    std::size_t m) const {
  if (n1 >= ox_ * nx_ || n2 >= oy_ * ny_ || m >= 4) {
    throw RangeError("codebook index out of range");
  }
  return (n1 * oy_ * ny_ + n2) * 4 + m;
}

Complex PrecoderCodebook::cophase(std::size_t m) {
  // Exact quarter turns instead of polar() so the values are exactly
  // 1, j, -1, -j.
  switch (m % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

void PrecoderCodebook::write_csv(std::ostream& os) const {
  os << "index,n1,n2,m,port,re,im\n";
  os.precision(17);
  for (std::size_t n1 = 0; n1 < ox_ * nx_; ++n1) {
    for (std::size_t n2 = 0; n2 < oy_ * ny_; ++n2) {
      for (std::size_t m = 0; m < 4; ++m) {
        const std::size_t idx = index(n1, n2, m);
        const CVector& w = entries_[idx];
        for (Eigen::Index p = 0; p < w.size(); ++p) {
          os << idx << ',' << n1 << ',' << n2 << ',' << m << ',' << p << ','
             << w(p).real() << ',' << w(p).imag() << '\n';
        }
      }
    }
  }
}

PrecoderCodebook build_codebook(std::size_t nx, std::size_t ny, std::size_t ox,
                                std::size_t oy) {
  return PrecoderCodebook(nx, ny, ox, oy);
}

LinkState LinkState::all_selected(std::size_t uavs, double power,
                                  double noise_var) {
  LinkState s;
  s.selected.assign(uavs, 1);
  s.precoder.assign(uavs, 0);
  s.power.assign(uavs, power);
  s.noise_var = noise_var;
  return s;
}

std::size_t LinkState::selected_count() const {
  return static_cast<std::size_t>(
      std::count_if(selected.begin(), selected.end(),
                    [](std::uint8_t a) { return a != 0; }));
}

void LinkState::validate(const PrecoderCodebook& codebook) const {
  if (precoder.size() != selected.size() || power.size() != selected.size()) {
    throw ShapeError("link state vectors must have one entry per UAV");
  }
  if (!(noise_var > 0.0)) throw RangeError("noise variance must be > 0");
  for (std::size_t u = 0; u < selected.size(); ++u) {
    if (selected[u] > 1) {
      throw ConstraintViolation("association", "association must be 0 or 1");
    }
    if (!selected[u]) continue;
    if (precoder[u] >= codebook.size()) {
      throw ConstraintViolation("codebook_membership", "precoder index " +
                                           std::to_string(precoder[u]) +
                                           " outside the codebook");
    }
    if (!(power[u] > 0.0)) throw RangeError("transmit power must be > 0");
  }
}

CMatrix effective_channel(std::span<const CMatrix> h_per_uav,
                          const LinkState& link,
                          const PrecoderCodebook& codebook) {
  link.validate(codebook);
  if (h_per_uav.size() != link.uavs()) {
    throw ShapeError("one channel matrix per UAV is required");
  }
  const std::size_t n = link.selected_count();
  if (n == 0) throw EmptySelectionError("no UAV is associated with the BS");
  const Eigen::Index rx = h_per_uav.front().rows();
  CMatrix out(rx, static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (std::size_t u = 0; u < link.uavs(); ++u) {
    if (!link.selected[u]) continue;
    const CVector& w = codebook.at(link.precoder[u]);
    if (h_per_uav[u].cols() != w.size() || h_per_uav[u].rows() != rx) {
      throw ShapeError("channel and precoder dimensions disagree");
    }
    out.col(col++) = std::sqrt(link.power[u]) * (h_per_uav[u] * w);
  }
  return out;
}

CMatrix mmse_equalizer(const CMatrix& h_eff, double noise_var) {
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw NumericError("noise variance must be positive and finite");
  }
  check_finite(h_eff, "effective channel");
  CMatrix gram = h_eff.adjoint() * h_eff;
  gram.diagonal().array() += noise_var;
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw NumericError("MMSE system is not positive definite");
  }
  CMatrix g = llt.solve(h_eff.adjoint());
  check_finite(g, "equalizer");
  return g;
}

std::vector<double> sinr_per_uav(const CMatrix& g, const CMatrix& h_eff,
                                 double noise_var) {
  if (g.rows() != h_eff.cols() || g.cols() != h_eff.rows()) {
    throw ShapeError("equalizer and channel dimensions disagree");
  }
  const CMatrix gh = g * h_eff;
  std::vector<double> out(static_cast<std::size_t>(g.rows()));
  for (Eigen::Index u = 0; u < g.rows(); ++u) {
    const double signal = std::norm(gh(u, u));
    double interference = 0.0;
    for (Eigen::Index v = 0; v < gh.cols(); ++v) {
      if (v != u) interference += std::norm(gh(u, v));
    }
    const double noise = noise_var * g.row(u).squaredNorm();
    // A column the equalizer cannot see (zero effective channel) has no SINR.
    out[static_cast<std::size_t>(u)] = signal > 0.0 ? signal / (interference + noise) : 0.0;
  }
  return out;
}

double spectral_efficiency(std::span<const double> sinr) {
  if (sinr.empty()) return 0.0;
  double acc = 0.0;
  for (double s : sinr) {
    if (!(s >= 0.0)) throw RangeError("SINR must be >= 0");
    acc += std::log2(1.0 + s);
  }
  return acc / static_cast<double>(sinr.size());
}

RateReport achievable_rate(std::span<const double> sinr, std::size_t subcarriers,
                           double subcarrier_spacing_hz) {
  RateReport r;
  r.spectral_efficiency = spectral_efficiency(sinr);
  r.bits_per_second = r.spectral_efficiency * static_cast<double>(subcarriers) *
                      subcarrier_spacing_hz;
  return r;
}

LinkEvaluation evaluate_link(const ChannelRealization& ch, const LinkState& link,
                             const PrecoderCodebook& codebook) {
  if (link.uavs() != ch.uavs) {
    throw ShapeError("link state and channel disagree on the UAV count");
  }
  link.validate(codebook);
  const std::size_t n = link.selected_count();
  if (n == 0) throw EmptySelectionError("no UAV is associated with the BS");
  std::vector<std::size_t> sel;
  for (std::size_t u = 0; u < link.uavs(); ++u) {
    if (link.selected[u]) sel.push_back(u);
  }
  const std::size_t grid = ch.subcarriers * ch.symbols;
  std::vector<std::vector<double>> sinr(n, std::vector<double>(grid));
  std::vector<CMatrix> hs(ch.uavs);
  for (std::size_t k = 0; k < ch.subcarriers; ++k) {
    for (std::size_t s = 0; s < ch.symbols; ++s) {
      for (std::size_t u = 0; u < ch.uavs; ++u) hs[u] = ch.at(u, k, s);
      const CMatrix h_eff = effective_channel(hs, link, codebook);
      const CMatrix g = mmse_equalizer(h_eff, link.noise_var);
      const auto v = sinr_per_uav(g, h_eff, link.noise_var);
      for (std::size_t i = 0; i < n; ++i) sinr[i][k * ch.symbols + s] = v[i];
    }
  }
  LinkEvaluation out;
  out.spectral_efficiency.assign(ch.uavs, 0.0);
  out.rate_bps.assign(ch.uavs, 0.0);
  out.mean_sinr.assign(ch.uavs, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const RateReport r =
        achievable_rate(sinr[i], ch.subcarriers, ch.subcarrier_spacing_hz);
    out.spectral_efficiency[sel[i]] = r.spectral_efficiency;
    out.rate_bps[sel[i]] = r.bits_per_second;
    double m = 0.0;
    for (double x : sinr[i]) m += x;
    out.mean_sinr[sel[i]] = m / static_cast<double>(grid);
  }
  return out;
}

double search_objective(const ChannelRealization& ch, const LinkState& link,
                        const PrecoderCodebook& codebook,
                        const SearchOptions& options) {
  const LinkEvaluation ev = evaluate_link(ch, link, codebook);
  if (options.objective == SearchObjective::kPerUavRate) {
    double sum = 0.0;
    for (double r : ev.rate_bps) sum += r;
    return sum;
  }
  if (options.payload_bits.size() != link.uavs()) {
    throw ShapeError("reward objective needs payload bits for every UAV");
  }
  double worst = 0.0;
  for (std::size_t u = 0; u < link.uavs(); ++u) {
    if (!link.selected[u]) continue;
    const double lat = ev.rate_bps[u] > 0.0
                           ? options.payload_bits[u] / ev.rate_bps[u]
                           : std::numeric_limits<double>::infinity();
    worst = std::max(worst, lat);
  }
  return -worst;
}

SearchResult exhaustive_precoder_search(const ChannelRealization& ch,
                                        const LinkState& link,
                                        const PrecoderCodebook& codebook,
                                        const SearchOptions& options) {
  if (codebook.size() == 0) throw ConfigError("codebook is empty");
  link.validate(codebook);
  std::vector<std::size_t> sel;
  for (std::size_t u = 0; u < link.uavs(); ++u) {
    if (link.selected[u]) sel.push_back(u);
  }
  if (sel.empty()) throw EmptySelectionError("no UAV is associated with the BS");

  SearchResult res;
  // Iterated per-UAV coordinate ascent.
  LinkState cur = link;
  for (std::size_t u = 0; u < cur.uavs(); ++u) {
    if (!cur.selected[u]) cur.precoder[u] = 0;
  }
  double best = search_objective(ch, cur, codebook, options);
  for (std::size_t sweep = 0; sweep < std::max<std::size_t>(1, options.max_sweeps);
       ++sweep) {
    bool changed = false;
    for (std::size_t u : sel) {
      const std::size_t keep = cur.precoder[u];
      std::size_t arg = keep;
      for (std::size_t i = 0; i < codebook.size(); ++i) {
        if (i == keep) continue;
        cur.precoder[u] = i;
        const double v = search_objective(ch, cur, codebook, options);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      cur.precoder[u] = arg;
      changed = changed || arg != keep;
    }
    res.sweep_objectives.push_back(best);
    if (!changed) break;
  }
  res.precoder = cur.precoder;
  res.objective = best;
  res.greedy_objective = best;

  // Joint enumeration when the Cartesian product is small enough.
  double combos = 1.0;
  for (std::size_t k = 0; k < sel.size(); ++k) {
    combos *= static_cast<double>(codebook.size());
  }
  if (combos <= static_cast<double>(options.joint_limit)) {
    LinkState trial = cur;
    std::vector<std::size_t> digits(sel.size(), 0);
    double jbest = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> jarg;
    bool done = false;
    while (!done) {
      for (std::size_t k = 0; k < sel.size(); ++k) trial.precoder[sel[k]] = digits[k];
      const double v = search_objective(ch, trial, codebook, options);
      if (v > jbest) {
        jbest = v;
        jarg = trial.precoder;
      }
      std::size_t k = 0;
      for (; k < sel.size(); ++k) {
        if (++digits[k] < codebook.size()) break;
        digits[k] = 0;
      }
      done = k == sel.size();
    }
    res.precoder = jarg;
    res.objective = jbest;
    res.joint = true;
  }
  return res;
}

}  // namespace coperc
