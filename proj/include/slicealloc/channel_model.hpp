#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace slicealloc {

// Link budget of a single-cell indoor-factory downlink.
struct LinkParams {
  double carrier_freq_ghz = 3.7;
  double tx_antenna_gain_dbi = 0.0;
  double rx_antenna_gain_dbi = 0.0;
  double noise_psd_dbm_hz = -174.0;
  double subchannel_bw_hz = 180e3;
  int num_subchannels = 133;
  double cell_radius_m = 100.0;
  double shadow_sigma_db = 7.2;
  // Extra noise rise folded into the per-subchannel noise power.
  double interference_margin_db = 0.0;

  void Validate() const;
  double NoisePowerW() const;
};

// Per-slot channel snapshot. Row i is user i, column j is subchannel j.
struct ChannelState {
  Eigen::MatrixXd gains;  // linear power gains h_ij
  double noise_power_w = 0.0;
  double subchannel_bw_hz = 0.0;

  Eigen::Index users() const { return gains.rows(); }
  Eigen::Index subchannels() const { return gains.cols(); }
};

struct FadingToggles {
  bool shadowing = true;
  bool rayleigh = true;
};

// Indoor factory, dense clutter, low BS. Distance in metres, frequency in GHz.
double PathLossInfDl(double d_3d_m, double f_c_ghz);
double PathLossInfLos(double d_3d_m, double f_c_ghz);
double PathLossInfSl(double d_3d_m, double f_c_ghz);

// Max of the dense-clutter, line-of-sight and sparse-clutter models.
double PathLossNlos(double d_3d_m, double f_c_ghz);

ChannelState SampleChannel(const LinkParams& params, std::span<const double> user_distances_m,
                           std::uint64_t rng_seed, FadingToggles toggles = {});

// Uniform draw in [1, cell_radius_m], fixed for the lifetime of `user_id`.
double DrawUserDistance(const LinkParams& params, std::uint64_t rng_seed, std::uint64_t user_id);

}  // namespace slicealloc
