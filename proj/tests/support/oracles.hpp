#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "plcguard/lof.hpp"
#include "plcguard/rng.hpp"
#include "plcguard/telemetry.hpp"

namespace oracle {

using plcguard::detect::Point2;

/// O(n^2) novelty LOF. Neighbours ordered by (distance, index); duplicate
/// neighbourhoods get the density cap; a query equal to a training point
/// takes that point's own LOF.
std::vector<double> lof_scores(const std::vector<Point2>& train, std::size_t k, const std::vector<Point2>& queries);

struct Eigen {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

/// Cyclic Jacobi rotations on a dense symmetric matrix.
Eigen jacobi(std::vector<std::vector<double>> a, double tol = 1e-14, int max_sweeps = 100);

/// Sample covariance (n - 1) of row-major data.
std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows);

/// Recomputes the features of packet `k` from packets[0..k] alone.
plcguard::telemetry::FeatureVector batch_features(
    const std::vector<plcguard::telemetry::PacketMeta>& packets, std::size_t k,
    const std::map<plcguard::MacAddress, plcguard::telemetry::BaselineHistogram>& baselines,
    std::size_t window = 1000, std::int64_t rate_window_us = 60'000'000);

/// Random multi-peer packet sequence: per-peer non-decreasing timestamps,
/// bursts and long pauses, several IPs per MAC, a few source ports.
std::vector<plcguard::telemetry::PacketMeta> fuzz_packets(plcguard::SplitRng& rng, std::size_t n, std::size_t peers);

/// |a - b| <= rel * max(|a|, |b|), with a 1e-12 absolute floor for values near 0.
bool close(double a, double b, double rel);

}  // namespace oracle
