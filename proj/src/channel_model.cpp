#include "slicealloc/channel_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "slicealloc/rng.hpp"
#include "slicealloc/units.hpp"

namespace slicealloc {
namespace {

constexpr double kMinDistanceM = 1.0;
constexpr double kMaxDistanceM = 100.0;
constexpr std::uint64_t kChannelStreamTag = 0xC4A77E1ull;
constexpr std::uint64_t kPlacementStreamTag = 0x91ACE5ull;

void CheckPathLossDomain(double d, double f) {
  if (!(d >= kMinDistanceM && d <= kMaxDistanceM)) {
    throw std::domain_error("path loss: d_3d must lie in [1, 100] m, got " + std::to_string(d));
  }
  if (!(f > 0.0)) {
    throw std::domain_error("path loss: carrier frequency must be positive, got " + std::to_string(f));
  }
}

}  // namespace

void LinkParams::Validate() const {
  if (!(carrier_freq_ghz > 0.0)) throw std::invalid_argument("link.carrier_freq_ghz must be > 0");
  if (!(subchannel_bw_hz > 0.0)) throw std::invalid_argument("link.subchannel_bw_hz must be > 0");
  if (num_subchannels < 1) throw std::invalid_argument("link.num_subchannels must be >= 1");
  if (!(cell_radius_m >= kMinDistanceM && cell_radius_m <= kMaxDistanceM)) {
    throw std::invalid_argument("link.cell_radius_m must lie in [1, 100]");
  }
  if (!(shadow_sigma_db >= 0.0)) throw std::invalid_argument("link.shadow_sigma_db must be >= 0");
}

double LinkParams::NoisePowerW() const {
  return DbmToWatts(noise_psd_dbm_hz) * subchannel_bw_hz * DbToLinear(interference_margin_db);
}

double PathLossInfDl(double d_3d_m, double f_c_ghz) {
  CheckPathLossDomain(d_3d_m, f_c_ghz);
  return 18.6 + 35.7 * std::log10(d_3d_m) + 20.0 * std::log10(f_c_ghz);
}

double PathLossInfLos(double d_3d_m, double f_c_ghz) {
  CheckPathLossDomain(d_3d_m, f_c_ghz);
  return 31.84 + 21.50 * std::log10(d_3d_m) + 19.00 * std::log10(f_c_ghz);
}

double PathLossInfSl(double d_3d_m, double f_c_ghz) {
  CheckPathLossDomain(d_3d_m, f_c_ghz);
  return 33.0 + 25.5 * std::log10(d_3d_m) + 20.0 * std::log10(f_c_ghz);
}

double PathLossNlos(double d_3d_m, double f_c_ghz) {
  const double dl = PathLossInfDl(d_3d_m, f_c_ghz);
  return std::max({dl, PathLossInfLos(d_3d_m, f_c_ghz), PathLossInfSl(d_3d_m, f_c_ghz)});
}

ChannelState SampleChannel(const LinkParams& params, std::span<const double> user_distances_m,
                           std::uint64_t rng_seed, FadingToggles toggles) {
  params.Validate();
  const auto n = static_cast<Eigen::Index>(user_distances_m.size());
  const Eigen::Index k = params.num_subchannels;

  ChannelState state;
  state.noise_power_w = params.NoisePowerW();
  state.subchannel_bw_hz = params.subchannel_bw_hz;
  state.gains.resize(n, k);
  if (n == 0) return state;

  auto gen = MakeStream(rng_seed, {kChannelStreamTag});
  std::normal_distribution<double> shadow(0.0, 1.0);
  std::exponential_distribution<double> rayleigh_power(1.0);
  const double antenna_db = params.tx_antenna_gain_dbi + params.rx_antenna_gain_dbi;

  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = user_distances_m[static_cast<std::size_t>(i)];
    if (!(d >= kMinDistanceM && d <= params.cell_radius_m)) {
      throw std::domain_error("sample_channel: user distance " + std::to_string(d) +
                              " m outside [1, cell_radius]");
    }
    // Draws are consumed even when a toggle is off so both toggles see the same stream.
    const double sf_draw = shadow(gen);
    const double sf_db = toggles.shadowing ? params.shadow_sigma_db * sf_draw : 0.0;
    const double large_scale = DbToLinear(-(PathLossNlos(d, params.carrier_freq_ghz) + sf_db - antenna_db));
    for (Eigen::Index j = 0; j < k; ++j) {
      const double fade = rayleigh_power(gen);
      state.gains(i, j) = large_scale * (toggles.rayleigh ? fade : 1.0);
    }
  }
  return state;
}

double DrawUserDistance(const LinkParams& params, std::uint64_t rng_seed, std::uint64_t user_id) {
  auto gen = MakeStream(rng_seed, {kPlacementStreamTag, user_id});
  std::uniform_real_distribution<double> dist(kMinDistanceM, params.cell_radius_m);
  return dist(gen);
}

}  // namespace slicealloc
