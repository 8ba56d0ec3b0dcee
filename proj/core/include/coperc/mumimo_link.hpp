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

#ifndef COPERC_MUMIMO_LINK_HPP
#define COPERC_MUMIMO_LINK_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "coperc/channel3d.hpp"

namespace coperc {

// Type-I single-panel codebook for a dual-polarised nx x ny array.
// Entry ((n1 * oy*ny) + n2) * 4 + m is
//   [v(n1) (x) u(n2); psi_m v(n1) (x) u(n2)] / sqrt(2 nx ny),  psi_m = e^{j pi m/2}
// with DFT beams v(n1)_k = e^{j 2 pi n1 k / (ox nx)}, u(n2)_k likewise.
class PrecoderCodebook {
 public:
  PrecoderCodebook() = default;
  PrecoderCodebook(std::size_t nx, std::size_t ny, std::size_t ox,
                   std::size_t oy);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t ports() const noexcept { return 2 * nx_ * ny_; }
  const CVector& at(std::size_t index) const { return entries_.at(index); }
  const std::vector<CVector>& entries() const noexcept { return entries_; }

  std::size_t index(std::size_t n1, std::size_t n2, std::size_t m) const;
  static Complex cophase(std::size_t m);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t ox() const noexcept { return ox_; }
  std::size_t oy() const noexcept { return oy_; }

  // index,n1,n2,m,port,re,im
  void write_csv(std::ostream& os) const;

 private:
  std::size_t nx_ = 0, ny_ = 0, ox_ = 0, oy_ = 0;
  std::vector<CVector> entries_;
};

PrecoderCodebook build_codebook(std::size_t nx, std::size_t ny, std::size_t ox,
                                std::size_t oy);

// Single base station: selected[u] is the association a_u.
struct LinkState {
  std::vector<std::uint8_t> selected;
  std::vector<std::size_t> precoder;
  std::vector<double> power;
  double noise_var = 1.0;

  static LinkState all_selected(std::size_t uavs, double power,
                                double noise_var);
  std::size_t uavs() const noexcept { return selected.size(); }
  std::size_t selected_count() const;
  void validate(const PrecoderCodebook& codebook) const;
};

// Columns a_u sqrt(p_u) H_u w_u for the selected UAVs, in UAV order.
CMatrix effective_channel(std::span<const CMatrix> h_per_uav,
                          const LinkState& link,
                          const PrecoderCodebook& codebook);

// (H^H H + s2 I)^{-1} H^H via a Cholesky solve.
CMatrix mmse_equalizer(const CMatrix& h_eff, double noise_var);

// Post-equalisation SINR per column of h_eff.
std::vector<double> sinr_per_uav(const CMatrix& g, const CMatrix& h_eff,
                                 double noise_var);

// Mean log2(1 + sinr) over a time-frequency grid.
double spectral_efficiency(std::span<const double> sinr);

struct RateReport {
  double spectral_efficiency = 0.0;  // bit/s/Hz averaged over K x S
  double bits_per_second = 0.0;      // spectral_efficiency * K * spacing
};
RateReport achievable_rate(std::span<const double> sinr, std::size_t subcarriers,
                           double subcarrier_spacing_hz);

// Per-UAV link figures over the whole grid. Entries of non-selected UAVs are 0.
struct LinkEvaluation {
  std::vector<double> spectral_efficiency;
  std::vector<double> rate_bps;
  std::vector<double> mean_sinr;  // linear, averaged over the grid
};
LinkEvaluation evaluate_link(const ChannelRealization& ch, const LinkState& link,
                             const PrecoderCodebook& codebook);

enum class SearchObjective {
  kPerUavRate,  // maximise the sum of selected-UAV rates
  kReward,      // minimise the largest payload_bits[u] / rate[u]
};

struct SearchOptions {
  SearchObjective objective = SearchObjective::kPerUavRate;
  std::vector<double> payload_bits;  // per UAV, used by kReward
  std::size_t max_sweeps = 5;
  std::size_t joint_limit = 4096;    // enumerate when |P|^U_sel <= this
};

struct SearchResult {
  std::vector<std::size_t> precoder;  // per UAV; 0 for non-selected
  double objective = 0.0;             // higher is better
  double greedy_objective = 0.0;
  std::vector<double> sweep_objectives;  // greedy objective after each sweep
  bool joint = false;
};

// Objective value of the precoders in `link` (higher is better).
double search_objective(const ChannelRealization& ch, const LinkState& link,
                        const PrecoderCodebook& codebook,
                        const SearchOptions& options);

SearchResult exhaustive_precoder_search(const ChannelRealization& ch,
                                        const LinkState& link,
                                        const PrecoderCodebook& codebook,
                                        const SearchOptions& options = {});

}  // namespace coperc

#endif  // COPERC_MUMIMO_LINK_HPP
