#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hspr/cube.hpp"

namespace hspr::metrics {

using Support = Image<std::uint8_t>;

/// min over phi of ||est e^{j phi} - truth||^2 / ||truth||^2, evaluated in
/// closed form as (||est||^2 + ||truth||^2 - 2 |<est, truth>|) / ||truth||^2.
/// With a non-empty `support`, sums run over pixels where support != 0.
/// Throws when the (restricted) truth has zero energy.
double relative_error(std::span<const cplx> estimate, std::span<const cplx> truth,
                      std::span<const std::uint8_t> support = {});

enum class PhaseAlignment { per_channel, joint };

/// Relative error of each channel, each with its own optimal phase.
std::vector<double> channel_errors(const ComplexCube& estimate, const ComplexCube& truth,
                                   const Support* support = nullptr);

/// Per-channel mean (default) or one error with a single phase for the cube.
double cube_error(const ComplexCube& estimate, const ComplexCube& truth,
                  const Support* support = nullptr,
                  PhaseAlignment alignment = PhaseAlignment::per_channel);

/// Pixels where the truth amplitude exceeds `threshold` in any channel.
Support support_from_truth(const ComplexCube& truth, double threshold = 1e-3);

/// Error per iteration and channel, plus the mean over channels.
struct ErrorTrace {
    std::vector<std::vector<double>> per_channel;  // [iteration][channel]
    std::vector<double> mean;

    void record(std::vector<double> channel_values);
    std::size_t size() const { return mean.size(); }
};

/// 10 log10(sum Y^2 / sum (Z - Y)^2); +infinity when Z == Y.
double empirical_snr_db(const std::vector<RealImage>& clean,
                        const std::vector<RealImage>& noisy);

}  // namespace hspr::metrics
