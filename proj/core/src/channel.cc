#include "netmeter/channel.h"

#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <glog/logging.h>

#include "netmeter/error.h"

namespace netmeter {

namespace {

void RequirePositive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("{} must be finite and > 0, got {}", name, value));
  }
}

void RequireFinite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("{} must be finite, got {}", name, value));
  }
}

}  // namespace

TwoRayParams::TwoRayParams(double p_t_w, double g_t, double g_r, double h_t_m,
                           double h_r_m)
    : p_t_w_(p_t_w), g_t_(g_t), g_r_(g_r), h_t_m_(h_t_m), h_r_m_(h_r_m) {
  RequirePositive(p_t_w, "p_t");
  RequirePositive(g_t, "g_t");
  RequirePositive(g_r, "g_r");
  RequirePositive(h_t_m, "h_t");
  RequirePositive(h_r_m, "h_r");
}

PathLossParams::PathLossParams(double rss_d0_dbm, double eta, double d0_m,
                               EtaBounds bounds)
    : rss_d0_dbm_(rss_d0_dbm), eta_(eta), d0_m_(d0_m) {
  RequireFinite(rss_d0_dbm, "rss_d0_dbm");
  RequireFinite(eta, "eta");
  RequirePositive(d0_m, "d0_m");
  if (eta < bounds.min || eta > bounds.max) {
    LOG(WARNING) << "path-loss exponent " << eta << " outside [" << bounds.min
                 << ", " << bounds.max << "]";
  }
}

ShadowingParams::ShadowingParams(double sigma_db,
                                 std::optional<double> decorrelation_m)
    : sigma_db_(sigma_db), decorrelation_m_(decorrelation_m) {
  if (!(sigma_db >= 0.0) || !std::isfinite(sigma_db)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("sigma_db must be >= 0, got {}", sigma_db));
  }
  if (decorrelation_m) RequirePositive(*decorrelation_m, "decorrelation_m");
}

MultipathParams::MultipathParams(double m_shape, double omega_spread,
                                 bool enabled)
    : m_shape_(m_shape), omega_spread_(omega_spread), enabled_(enabled) {
  if (!(m_shape >= 0.5) || !std::isfinite(m_shape)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("nakagami m_shape must be >= 0.5, got {}", m_shape));
  }
  RequirePositive(omega_spread, "omega_spread");
}

MultipathParams MultipathParams::WithEnabled(bool enabled) const {
  MultipathParams copy = *this;
  copy.enabled_ = enabled;
  return copy;
}

LinkParams::LinkParams(double b_mhz, double pn_dbm, double alpha_t,
                       double l_bits)
    : b_mhz_(b_mhz), pn_dbm_(pn_dbm), alpha_t_(alpha_t), l_bits_(l_bits) {
  RequirePositive(b_mhz, "b_mhz");
  RequireFinite(pn_dbm, "pn_dbm");
  if (!(alpha_t > 0.0 && alpha_t <= 1.0)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("alpha_t must be in (0, 1], got {}", alpha_t));
  }
  if (!(l_bits >= 0.0) || !std::isfinite(l_bits)) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("l_bits must be >= 0, got {}", l_bits));
  }
}

double RandomStream::Normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

double RandomStream::Gamma(double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(engine_);
}

double RandomStream::Uniform01() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double TwoRayPower(const TwoRayParams& p, double d_m) {
  if (!(d_m > 0.0)) {
    throw Error(Errc::kNonpositiveDistance,
                fmt::format("distance must be > 0, got {}", d_m));
  }
  const double ht2 = p.h_t_m() * p.h_t_m();
  const double hr2 = p.h_r_m() * p.h_r_m();
  const double d2 = d_m * d_m;
  return p.p_t_w() * p.g_t() * p.g_r() * ht2 * hr2 / (d2 * d2);
}

double MeanRssi(const PathLossParams& p, double d_m) {
  if (!(d_m >= p.d0_m())) {
    throw Error(Errc::kDistanceBelowReference,
                fmt::format("distance {} m is below reference {} m", d_m,
                            p.d0_m()));
  }
  return p.rss_d0_dbm() - 10.0 * p.eta() * std::log10(d_m / p.d0_m());
}

double NakagamiPower(const MultipathParams& mp, RandomStream& rng) {
  return rng.Gamma(mp.m_shape(), mp.omega_spread() / mp.m_shape());
}

double MultipathFadeDb(const MultipathParams& mp, RandomStream& rng) {
  const double power = NakagamiPower(mp, rng);
  return -10.0 * std::log10(power / mp.omega_spread());
}

double SampleRssi(const PathLossParams& p, const ShadowingParams& s,
                  const MultipathParams& mp, double d_m, RandomStream& rng) {
  double rssi = MeanRssi(p, d_m);
  if (s.sigma_db() > 0.0) rssi -= rng.Normal(0.0, s.sigma_db());
  if (mp.enabled()) rssi -= MultipathFadeDb(mp, rng);
  return rssi;
}

double ChannelCapacity(const LinkParams& lp, double rssi_dbm) {
  const double snr = std::pow(10.0, (rssi_dbm - lp.pn_dbm()) / 10.0);
  // log1p keeps full relative precision when the SNR is tiny.
  return lp.b_mhz() * std::log1p(snr) / std::numbers::ln2;
}

double ModelThroughput(const LinkParams& lp, double rssi_dbm) {
  return lp.alpha_t() * ChannelCapacity(lp, rssi_dbm);
}

double TransmissionDelay(double l_bits, double rate_mbps) {
  if (!(rate_mbps > 0.0)) {
    throw Error(Errc::kNonpositiveRate,
                fmt::format("rate must be > 0 Mbps, got {}", rate_mbps));
  }
  return l_bits / (rate_mbps * 1000.0);
}

double ModelDelay(const LinkParams& lp, double rssi_dbm) {
  const double throughput = ModelThroughput(lp, rssi_dbm);
  if (!(throughput >= kDisconnectedThroughputMbps)) {
    throw Error(Errc::kZeroThroughput,
                fmt::format("modeled throughput {} Mbps at {} dBm is a "
                            "disconnection",
                            throughput, rssi_dbm));
  }
  return TransmissionDelay(lp.l_bits(), throughput);
}

ShadowingProcess::ShadowingProcess(double sigma_db, double decorrelation_m)
    : sigma_db_(sigma_db), decorrelation_m_(decorrelation_m) {
  if (!(sigma_db >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "sigma_db must be >= 0");
  }
  RequirePositive(decorrelation_m, "decorrelation_m");
}

double ShadowingProcess::Next(double moved_m, RandomStream& rng) {
  if (sigma_db_ == 0.0) return 0.0;
  const double fresh = rng.Normal(0.0, sigma_db_);
  if (!current_) {
    current_ = fresh;
  } else {
    const double rho = std::exp(-std::abs(moved_m) / decorrelation_m_);
    *current_ = rho * *current_ + std::sqrt(1.0 - rho * rho) * fresh;
  }
  return *current_;
}

}  // namespace netmeter
