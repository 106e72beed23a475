#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tcwunet {

// One evaluated metric; degenerate inputs (e.g. all-zero reference) yield an
// empty value instead of NaN.
struct MetricReport {
    std::string name;
    std::optional<double> value;
    std::vector<std::pair<std::string, double>> extras;
};

// Negative cosine similarity: -<y, y_hat> / (||y|| * ||y_hat||), in [-1, 1].
// A perfect estimate scores exactly -1. Empty when either vector has zero
// norm.
std::optional<double> sdr_loss(std::span<const float> y, std::span<const float> y_hat);

struct WsdrResult {
    std::optional<double> value;
    double alpha = 0.0; // ||y||^2 / (||y||^2 + ||z||^2) with z = x - y
};

// Energy-weighted blend of the SDR loss on speech and on residual noise:
// alpha * L(y, y_hat) + (1 - alpha) * L(z, z_hat) with z_hat = x - y_hat.
// A term whose cosine is undefined (zero-norm vector) contributes the
// orthogonal-neutral 0; the result is degenerate only when y and z are both
// silent.
WsdrResult wsdr_loss(std::span<const float> x, std::span<const float> y,
                     std::span<const float> y_hat);

inline constexpr double kSiSnrCapDb = 100.0;

// Scale-invariant SNR in dB: zero-mean both vectors, project the estimate
// onto the reference, compare projected and residual energies. Capped to
// +-100 dB; empty when the reference is silent after mean removal.
std::optional<double> si_snr(std::span<const float> y, std::span<const float> y_hat);

// Mean squared sample difference.
double mse(std::span<const float> y, std::span<const float> y_hat);

// Real-time factor: processing time divided by audio duration; below 1 means
// faster than real time.
double rtf(double processing_seconds, double audio_seconds);

// Line-oriented `name=value` rendering; degenerate metrics are flagged.
std::string to_text(std::span<const MetricReport> reports);

} // namespace tcwunet
