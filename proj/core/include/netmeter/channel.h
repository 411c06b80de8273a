#ifndef NETMETER_CHANNEL_H_
#define NETMETER_CHANNEL_H_

// Radio and link performance model: two-ray ground reflection power,
// log-distance path loss with Gaussian shadowing and Nakagami-m multipath,
// Shannon capacity, throughput as a fraction of capacity, and transmission
// delay L/R driven by that throughput.
//
// Units are fixed at this API: dBm for powers (watts for the two-ray
// calculator), MHz for bandwidth, Mbps for rates, ms for delays, meters for
// distances.

#include <cstdint>
#include <optional>
#include <random>

namespace netmeter {

class TwoRayParams {
 public:
  TwoRayParams() = default;
  // All values must be > 0.
  TwoRayParams(double p_t_w, double g_t, double g_r, double h_t_m, double h_r_m);

  double p_t_w() const { return p_t_w_; }
  double g_t() const { return g_t_; }
  double g_r() const { return g_r_; }
  double h_t_m() const { return h_t_m_; }
  double h_r_m() const { return h_r_m_; }

 private:
  double p_t_w_ = 1.0;
  double g_t_ = 1.0;
  double g_r_ = 1.0;
  double h_t_m_ = 1.0;
  double h_r_m_ = 1.0;
};

struct EtaBounds {
  double min = 1.5;
  double max = 6.0;
};

class PathLossParams {
 public:
  PathLossParams() = default;
  // d0_m must be > 0. eta outside `bounds` is accepted with a logged warning.
  PathLossParams(double rss_d0_dbm, double eta, double d0_m = 1.0,
                 EtaBounds bounds = {});

  double rss_d0_dbm() const { return rss_d0_dbm_; }
  double eta() const { return eta_; }
  double d0_m() const { return d0_m_; }

 private:
  double rss_d0_dbm_ = -40.0;
  double eta_ = 3.0;
  double d0_m_ = 1.0;
};

class ShadowingParams {
 public:
  ShadowingParams() = default;
  // sigma_db >= 0. When decorrelation_m is set (> 0), the simulator draws
  // first-order autocorrelated shadowing instead of i.i.d. values.
  explicit ShadowingParams(double sigma_db,
                           std::optional<double> decorrelation_m = std::nullopt);

  double sigma_db() const { return sigma_db_; }
  const std::optional<double>& decorrelation_m() const {
    return decorrelation_m_;
  }

 private:
  double sigma_db_ = 0.0;
  std::optional<double> decorrelation_m_;
};

class MultipathParams {
 public:
  MultipathParams() = default;
  // m_shape >= 0.5, omega_spread > 0.
  MultipathParams(double m_shape, double omega_spread, bool enabled);

  double m_shape() const { return m_shape_; }
  double omega_spread() const { return omega_spread_; }
  bool enabled() const { return enabled_; }

  MultipathParams WithEnabled(bool enabled) const;

 private:
  double m_shape_ = 1.0;
  double omega_spread_ = 1.0;
  bool enabled_ = false;
};

class LinkParams {
 public:
  static constexpr double kDefaultPnDbm = -90.0;
  static constexpr double kDefaultAlphaT = 0.65;
  static constexpr double kDefaultLBits = 12000.0;

  LinkParams() = default;
  // b_mhz > 0, alpha_t in (0, 1], l_bits >= 0.
  LinkParams(double b_mhz, double pn_dbm, double alpha_t, double l_bits);

  double b_mhz() const { return b_mhz_; }
  double pn_dbm() const { return pn_dbm_; }
  double alpha_t() const { return alpha_t_; }
  double l_bits() const { return l_bits_; }

 private:
  double b_mhz_ = 20.0;
  double pn_dbm_ = kDefaultPnDbm;
  double alpha_t_ = kDefaultAlphaT;
  double l_bits_ = kDefaultLBits;
};

struct ChannelParams {
  TwoRayParams two_ray;
  PathLossParams path_loss;
  ShadowingParams shadowing;
  MultipathParams multipath;
  LinkParams link;
};

// Seeded pseudo-random stream owned by the caller. Identical seeds and call
// sequences give bit-identical draws on a given platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double Normal(double mean, double stddev);
  // Gamma with shape k and scale theta (mean k * theta).
  double Gamma(double shape, double scale);
  double Uniform01();

 private:
  std::mt19937_64 engine_;
};

// Below this modeled throughput the link is treated as disconnected.
inline constexpr double kDisconnectedThroughputMbps = 1e-9;

// p_t * g_t * g_r * h_t^2 * h_r^2 / d^4, watts. Throws kNonpositiveDistance.
double TwoRayPower(const TwoRayParams& p, double d_m);

// rss_d0 - 10 * eta * log10(d / d0). Throws kDistanceBelowReference when
// d_m < d0_m.
double MeanRssi(const PathLossParams& p, double d_m);

// Instantaneous power from a Nakagami-m envelope: Gamma(m, omega / m).
double NakagamiPower(const MultipathParams& mp, RandomStream& rng);

// -10 * log10(X / omega) for a Nakagami power draw X; a positive value is a
// fade below the mean power.
double MultipathFadeDb(const MultipathParams& mp, RandomStream& rng);

// MeanRssi - shadowing draw - multipath fade. The shadowing draw is taken
// first (skipped when sigma is 0) and the fade second (skipped when multipath
// is disabled).
double SampleRssi(const PathLossParams& p, const ShadowingParams& s,
                  const MultipathParams& mp, double d_m, RandomStream& rng);

// B * log2(1 + 10^((rssi - pn) / 10)), Mbps.
double ChannelCapacity(const LinkParams& lp, double rssi_dbm);

// alpha_t * ChannelCapacity.
double ModelThroughput(const LinkParams& lp, double rssi_dbm);

// l_bits / (rate_mbps * 1000), ms. Throws kNonpositiveRate.
double TransmissionDelay(double l_bits, double rate_mbps);

// TransmissionDelay(l_bits, ModelThroughput). Throws kZeroThroughput when
// the modeled throughput is below kDisconnectedThroughputMbps.
double ModelDelay(const LinkParams& lp, double rssi_dbm);

// First-order autocorrelated shadowing: each step mixes the previous value
// with a fresh draw, with correlation exp(-moved / decorrelation distance).
class ShadowingProcess {
 public:
  ShadowingProcess(double sigma_db, double decorrelation_m);

  double Next(double moved_m, RandomStream& rng);

 private:
  double sigma_db_;
  double decorrelation_m_;
  std::optional<double> current_;
};

}  // namespace netmeter

#endif  // NETMETER_CHANNEL_H_
