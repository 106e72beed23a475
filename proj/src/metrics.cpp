#include "tcwunet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "tcwunet/errors.hpp"

namespace tcwunet {

namespace {

void require_equal_lengths(std::span<const float> a, std::span<const float> b,
                           const char* who) {
    if (a.size() != b.size())
        throw ConfigError(std::string(who) + ": vector lengths differ");
}

double dot(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        sum += static_cast<double>(a[i]) * b[i];
    return sum;
}

} // namespace

std::optional<double> sdr_loss(std::span<const float> y, std::span<const float> y_hat) {
    require_equal_lengths(y, y_hat, "sdr_loss");
    const double yy = dot(y, y);
    const double hh = dot(y_hat, y_hat);
    if (yy == 0.0 || hh == 0.0) return std::nullopt;
    const double v = -dot(y, y_hat) / std::sqrt(yy * hh);
    return std::clamp(v, -1.0, 1.0);
}

WsdrResult wsdr_loss(std::span<const float> x, std::span<const float> y,
                     std::span<const float> y_hat) {
    require_equal_lengths(x, y, "wsdr_loss");
    require_equal_lengths(x, y_hat, "wsdr_loss");
    const std::size_t n = x.size();

    // z = x - y and z_hat = x - y_hat, accumulated in double without
    // materializing rounded intermediates.
    const double ey = dot(y, y);
    double ez = 0.0, ezh = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = static_cast<double>(x[i]) - y[i];
        const double zh = static_cast<double>(x[i]) - y_hat[i];
        ez += z * z;
        ezh += zh * zh;
        cross += z * zh;
    }

    WsdrResult result;
    if (ey == 0.0 && ez == 0.0) {
        result.alpha = std::numeric_limits<double>::quiet_NaN();
        return result; // degenerate: nothing to weigh
    }
    result.alpha = ey / (ey + ez);

    // A term whose cosine is undefined (a zero-norm vector in the pair)
    // contributes 0, the orthogonal-neutral value; this keeps the blend
    // defined when the estimate equals the mixture (z_hat == 0) or the
    // decomposition has one silent side.
    const double speech = sdr_loss(y, y_hat).value_or(0.0);
    const double noise = (ez == 0.0 || ezh == 0.0)
                             ? 0.0
                             : std::clamp(-cross / std::sqrt(ez * ezh), -1.0, 1.0);

    // Blended as Lz + alpha * (Ly - Lz), algebraically alpha*Ly + (1-alpha)*Lz,
    // so two perfect terms give exactly -1.
    result.value = std::clamp(noise + result.alpha * (speech - noise), -1.0, 1.0);
    return result;
}

std::optional<double> si_snr(std::span<const float> y, std::span<const float> y_hat) {
    require_equal_lengths(y, y_hat, "si_snr");
    const std::size_t n = y.size();
    if (n == 0) return std::nullopt;

    double mean_y = 0.0, mean_h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_y += y[i];
        mean_h += y_hat[i];
    }
    mean_y /= static_cast<double>(n);
    mean_h /= static_cast<double>(n);

    double yy = 0.0, hy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double yc = y[i] - mean_y;
        const double hc = y_hat[i] - mean_h;
        yy += yc * yc;
        hy += hc * yc;
    }
    if (yy == 0.0) return std::nullopt; // silent reference

    const double scale = hy / yy;
    const double target_energy = scale * scale * yy;
    double residual_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = (y_hat[i] - mean_h) - scale * (y[i] - mean_y);
        residual_energy += e * e;
    }

    if (residual_energy == 0.0) return kSiSnrCapDb;
    if (target_energy == 0.0) return -kSiSnrCapDb;
    const double db = 10.0 * std::log10(target_energy / residual_energy);
    return std::clamp(db, -kSiSnrCapDb, kSiSnrCapDb);
}

double mse(std::span<const float> y, std::span<const float> y_hat) {
    require_equal_lengths(y, y_hat, "mse");
    if (y.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = static_cast<double>(y[i]) - y_hat[i];
        sum += d * d;
    }
    return sum / static_cast<double>(y.size());
}

double rtf(double processing_seconds, double audio_seconds) {
    if (audio_seconds <= 0.0) throw DataError("rtf: audio duration must be positive");
    if (processing_seconds < 0.0) throw DataError("rtf: negative processing time");
    return processing_seconds / audio_seconds;
}

std::string to_text(std::span<const MetricReport> reports) {
    std::string out;
    char buf[64];
    for (const auto& r : reports) {
        if (r.value) {
            std::snprintf(buf, sizeof(buf), "%.9g", *r.value);
            out += r.name + "=" + buf + "\n";
        } else {
            out += r.name + "=degenerate\n";
        }
        for (const auto& [key, v] : r.extras) {
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            out += r.name + "." + key + "=" + buf + "\n";
        }
    }
    return out;
}

} // namespace tcwunet
