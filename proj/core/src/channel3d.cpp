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

#include "coperc/channel3d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "coperc/scenario.hpp"
#include "json_util.hpp"

namespace coperc {
namespace {

constexpr double kTwoPi = 2.0 * kPi;

// e^{j 2 pi x}, reducing x first so large carrier-delay products keep their
// fractional part.
Complex cis_cycles(double x) {
  const double frac = x - std::floor(x);
  return std::polar(1.0, kTwoPi * frac);
}

CVector ula(std::size_t n, double phase_step) {
  CVector a(static_cast<Eigen::Index>(n));
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    a(static_cast<Eigen::Index>(k)) =
        norm * std::polar(1.0, phase_step * static_cast<double>(k));
  }
  return a;
}

Eigen::Vector3d hemisphere_direction(Rng& rng, const ArrayFrame& frame) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cos_el = unit(rng);
  const double az = kTwoPi * unit(rng) - kPi;
  const double sin_el = std::sqrt(1.0 - cos_el * cos_el);
  const Eigen::Vector3d y = frame.boresight.cross(frame.x_axis);
  return cos_el * frame.boresight +
         sin_el * (std::cos(az) * frame.x_axis + std::sin(az) * y);
}

void json_vec3(const nlohmann::json& j, Eigen::Vector3d& v) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError("expected a 3-element array");
  }
  for (int k = 0; k < 3; ++k) v[k] = j.at(static_cast<std::size_t>(k)).get<double>();
}

nlohmann::json array_to_json(const ArrayGeometry& a) {
  return {{"nx", a.nx},
          {"ny", a.ny},
          {"spacing", a.spacing},
          {"polarizations", a.polarizations}};
}

ArrayGeometry array_from_json(const nlohmann::json& j, const std::string& ctx) {
  ArrayGeometry a;
  detail::StrictObject o(j, ctx);
  o.read("nx", a.nx);
  o.read("ny", a.ny);
  o.read("spacing", a.spacing);
  o.read("polarizations", a.polarizations);
  o.finish();
  return a;
}

}  // namespace

void PathParams::validate() const {
  if (!(delay >= 0.0)) throw ConfigError("path delay must be >= 0");
  if (!std::isfinite(std::abs(gain))) {
    throw ConfigError("path gain must be finite");
  }
}

void ArrayGeometry::validate() const {
  if (nx < 1 || ny < 1) throw ConfigError("array needs >= 1 element per axis");
  if (!(spacing > 0.0)) throw ConfigError("array spacing must be > 0");
  if (polarizations != 1 && polarizations != 2) {
    throw ConfigError("array polarizations must be 1 or 2");
  }
}

Angles direction_to_angles(const Eigen::Vector3d& dir,
                           const ArrayFrame& frame) {
  const Eigen::Vector3d d = dir.normalized();
  const Eigen::Vector3d y = frame.boresight.cross(frame.x_axis);
  const double c = std::clamp(d.dot(frame.boresight), -1.0, 1.0);
  Angles a;
  a.el = std::acos(c);
  a.az = std::atan2(d.dot(y), d.dot(frame.x_axis));
  return a;
}

CVector array_response(const ArrayGeometry& geom, double az, double el,
                       double wavelength) {
  const double k = kTwoPi * geom.spacing / wavelength;
  const CVector ax = ula(geom.nx, k * std::sin(el) * std::cos(az));
  const CVector ay = ula(geom.ny, k * std::sin(el) * std::sin(az));
  CVector out(ax.size() * ay.size());
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    for (Eigen::Index j = 0; j < ay.size(); ++j) {
      out(i * ay.size() + j) = ax(i) * ay(j);
    }
  }
  return out;
}

CVector polarized_response(const ArrayGeometry& geom, double az, double el,
                           double wavelength, double pol_phase) {
  CVector a = array_response(geom, az, el, wavelength);
  if (geom.polarizations == 1) return a;
  const Eigen::Index n = a.size();
  CVector out(2 * n);
  const double s = 1.0 / std::sqrt(2.0);
  out.head(n) = s * a;
  out.tail(n) = s * std::polar(1.0, pol_phase) * a;
  return out;
}

CMatrix path_component(const PathParams& p, const ArrayGeometry& tx,
                       const ArrayGeometry& rx, double t, double f,
                       double wavelength) {
  const CVector ar =
      polarized_response(rx, p.aoa_az, p.aoa_el, wavelength, p.rx_pol_phase);
  const CVector at =
      polarized_response(tx, p.aod_az, p.aod_el, wavelength, p.tx_pol_phase);
  const Complex scale =
      p.gain * cis_cycles(p.doppler * t) * cis_cycles(-f * p.delay);
  return scale * ar * at.adjoint();
}

CMatrix rician_mix(const CMatrix& los, std::span<const CMatrix> nlos,
                   double k_factor) {
  if (!(k_factor >= 0.0)) throw RangeError("Rician factor must be >= 0");
  CMatrix scattered = CMatrix::Zero(los.rows(), los.cols());
  for (const auto& m : nlos) {
    if (m.rows() != los.rows() || m.cols() != los.cols()) {
      throw ShapeError("NLoS path matrix shape differs from LoS");
    }
    scattered += m;
  }
  return std::sqrt(k_factor / (k_factor + 1.0)) * los +
         std::sqrt(1.0 / (k_factor + 1.0)) * scattered;
}

void ChannelConfig::validate() const {
  if (!(carrier_hz > 0.0)) throw ConfigError("channel: carrier must be > 0");
  if (subcarriers < 1 || symbols < 1) {
    throw ConfigError("channel: need >= 1 subcarrier and symbol");
  }
  if (!(subcarrier_spacing_hz > 0.0)) {
    throw ConfigError("channel: subcarrier spacing must be > 0");
  }
  if (!(rician_k >= 0.0)) throw ConfigError("channel: rician_k must be >= 0");
  if (!(nlos_power >= 0.0) || !(max_excess_delay >= 0.0) ||
      !(max_doppler >= 0.0)) {
    throw ConfigError("channel: NLoS parameters must be >= 0");
  }
  uav_array.validate();
  bs_array.validate();
  if (std::abs(bs_boresight.z()) > 1e-12 || bs_boresight.norm() < 1e-12) {
    throw ConfigError("channel: BS boresight must be horizontal and non-zero");
  }
}

ArrayFrame bs_frame(const ChannelConfig& cfg) {
  ArrayFrame f;
  f.boresight = cfg.bs_boresight.normalized();
  f.x_axis = Eigen::Vector3d::UnitZ();
  return f;
}

ArrayFrame uav_frame() {
  ArrayFrame f;
  f.boresight = -Eigen::Vector3d::UnitZ();
  f.x_axis = Eigen::Vector3d::UnitX();
  return f;
}

CMatrix ChannelRealization::mean_channel(std::size_t u) const {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(rx),
                            static_cast<Eigen::Index>(tx));
  for (std::size_t k = 0; k < subcarriers; ++k) {
    for (std::size_t s = 0; s < symbols; ++s) m += at(u, k, s);
  }
  return m / static_cast<double>(subcarriers * symbols);
}

PathParams los_path(const Eigen::Vector3d& uav_pos, const ChannelConfig& cfg) {
  const Eigen::Vector3d to_uav = uav_pos - cfg.bs_position;
  const double dist = to_uav.norm();
  if (!(dist > 0.0)) throw ConfigError("UAV and base station coincide");
  PathParams p;
  const Angles rx = direction_to_angles(to_uav, bs_frame(cfg));
  const Angles tx = direction_to_angles(-to_uav, uav_frame());
  p.aoa_az = rx.az;
  p.aoa_el = rx.el;
  p.aod_az = tx.az;
  p.aod_el = tx.el;
  p.delay = dist / kSpeedOfLight;
  p.gain = 1.0;
  if (cfg.free_space_loss) {
    p.gain = cfg.wavelength() / (4.0 * kPi * dist);
  }
  return p;
}

ChannelRealization realize_channel(std::span<const Eigen::Vector3d> uav_positions,
                                   const ChannelConfig& cfg, std::uint64_t seed,
                                   std::uint64_t stream_index) {
  cfg.validate();
  ChannelRealization ch;
  ch.uavs = uav_positions.size();
  ch.subcarriers = cfg.subcarriers;
  ch.symbols = cfg.symbols;
  ch.rx = cfg.bs_array.elements();
  ch.tx = cfg.uav_array.elements();
  ch.carrier_hz = cfg.carrier_hz;
  ch.subcarrier_spacing_hz = cfg.subcarrier_spacing_hz;
  ch.h.resize(ch.uavs * ch.subcarriers * ch.symbols);

  const double lambda = cfg.wavelength();
  const ArrayFrame bsf = bs_frame(cfg);
  const ArrayFrame uavf = uav_frame();
  Rng rng = make_rng(seed, "channel", stream_index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t u = 0; u < ch.uavs; ++u) {
    const PathParams los = los_path(uav_positions[u], cfg);
    ch.los.push_back(los);
    std::vector<PathParams> paths(cfg.nlos_paths);
    const double amp =
        cfg.nlos_paths > 0
            ? std::sqrt(cfg.nlos_power / (2.0 * static_cast<double>(cfg.nlos_paths)))
            : 0.0;
    for (auto& p : paths) {
      const double re = normal(rng);
      const double im = normal(rng);
      p.gain = amp * Complex(re, im) * std::abs(los.gain);
      p.delay = los.delay + cfg.max_excess_delay * unit(rng);
      p.doppler = cfg.max_doppler * (2.0 * unit(rng) - 1.0);
      const Angles rx = direction_to_angles(hemisphere_direction(rng, bsf), bsf);
      const Angles tx =
          direction_to_angles(hemisphere_direction(rng, uavf), uavf);
      p.aoa_az = rx.az;
      p.aoa_el = rx.el;
      p.aod_az = tx.az;
      p.aod_el = tx.el;
      p.rx_pol_phase = kTwoPi * unit(rng);
      p.tx_pol_phase = kTwoPi * unit(rng);
    }
    std::vector<CMatrix> nlos(paths.size());
    for (std::size_t k = 0; k < ch.subcarriers; ++k) {
      const double f = cfg.carrier_hz + static_cast<double>(k) * cfg.subcarrier_spacing_hz;
      for (std::size_t s = 0; s < ch.symbols; ++s) {
        const double t = static_cast<double>(s) / cfg.subcarrier_spacing_hz;
        const CMatrix hl =
            path_component(los, cfg.uav_array, cfg.bs_array, t, f, lambda);
        for (std::size_t l = 0; l < paths.size(); ++l) {
          nlos[l] = path_component(paths[l], cfg.uav_array, cfg.bs_array, t, f,
                                   lambda);
        }
        ch.at(u, k, s) = rician_mix(hl, nlos, cfg.rician_k);
      }
    }
  }
  return ch;
}

ChannelRealization realize_channel(const Scenario& scenario,
                                   const ChannelConfig& cfg, std::uint64_t seed,
                                   std::uint64_t stream_index) {
  std::vector<Eigen::Vector3d> pos;
  for (const auto& p : scenario.uavs) pos.push_back(p.position);
  return realize_channel(pos, cfg, seed, stream_index);
}

void export_channel(const ChannelRealization& ch, const ChannelConfig& cfg,
                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t u = 0; u < ch.uavs; ++u) {
    const auto path = dir / ("channel_u" + std::to_string(u) + ".bin");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    for (std::size_t k = 0; k < ch.subcarriers; ++k) {
      for (std::size_t s = 0; s < ch.symbols; ++s) {
        const CMatrix& m = ch.at(u, k, s);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
          for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v[2] = {m(r, c).real(), m(r, c).imag()};
            os.write(reinterpret_cast<const char*>(v), sizeof(v));
          }
        }
      }
    }
  }
  nlohmann::json j;
  j["format"] = "coperc.channel";
  j["schema_version"] = 1;
  j["uavs"] = ch.uavs;
  j["subcarriers"] = ch.subcarriers;
  j["symbols"] = ch.symbols;
  j["rx"] = ch.rx;
  j["tx"] = ch.tx;
  j["layout"] = "k,s,row,col; complex128 little-endian";
  j["config"] = channel_config_to_json(cfg);
  for (const auto& p : ch.los) {
    j["los"].push_back({{"delay", p.delay},
                        {"aoa_az", p.aoa_az},
                        {"aoa_el", p.aoa_el},
                        {"aod_az", p.aod_az},
                        {"aod_el", p.aod_el}});
  }
  std::ofstream os(dir / "channel.json");
  if (!os) throw IoError("cannot write channel sidecar in " + dir.string());
  os << j.dump(1) << '\n';
}

nlohmann::json channel_config_to_json(const ChannelConfig& c) {
  return {{"carrier_hz", c.carrier_hz},
          {"subcarriers", c.subcarriers},
          {"subcarrier_spacing_hz", c.subcarrier_spacing_hz},
          {"symbols", c.symbols},
          {"nlos_paths", c.nlos_paths},
          {"rician_k", c.rician_k},
          {"nlos_power", c.nlos_power},
          {"max_excess_delay", c.max_excess_delay},
          {"max_doppler", c.max_doppler},
          {"free_space_loss", c.free_space_loss},
          {"uav_array", array_to_json(c.uav_array)},
          {"bs_array", array_to_json(c.bs_array)},
          {"bs_position", {c.bs_position.x(), c.bs_position.y(), c.bs_position.z()}},
          {"bs_boresight",
           {c.bs_boresight.x(), c.bs_boresight.y(), c.bs_boresight.z()}}};
}

ChannelConfig channel_config_from_json(const nlohmann::json& j) {
  ChannelConfig c;
  detail::StrictObject o(j, "channel");
  o.read("carrier_hz", c.carrier_hz);
  o.read("subcarriers", c.subcarriers);
  o.read("subcarrier_spacing_hz", c.subcarrier_spacing_hz);
  o.read("symbols", c.symbols);
  o.read("nlos_paths", c.nlos_paths);
  o.read("rician_k", c.rician_k);
  o.read("nlos_power", c.nlos_power);
  o.read("max_excess_delay", c.max_excess_delay);
  o.read("max_doppler", c.max_doppler);
  o.read("free_space_loss", c.free_space_loss);
  if (const auto* a = o.child("uav_array")) {
    c.uav_array = array_from_json(*a, "channel.uav_array");
  }
  if (const auto* a = o.child("bs_array")) {
    c.bs_array = array_from_json(*a, "channel.bs_array");
  }
  try {
    if (const auto* v = o.child("bs_position")) json_vec3(*v, c.bs_position);
    if (const auto* v = o.child("bs_boresight")) json_vec3(*v, c.bs_boresight);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("channel: ") + e.what());
  }
  o.finish();
  return c;
}

}  // namespace coperc
