#include "speckle/track.hpp"

#include "speckle/error.hpp"
#include "speckle/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <utility>
#include <vector>

namespace speckle {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kDenominatorFloor = 1e-6;
constexpr double kPerfectMatch = 1e-12;
constexpr int kEstimateMedianHalf = 2;  // 5 x 5 median on intermediate pyramid estimates
constexpr int kOutlierHalf = 2;         // 5 x 5 neighbourhood for the validity test
constexpr std::size_t kOutlierMinNeighbours = 3;

// Reference-side window norms for every centre up to kWindowPad pixels
// outside the image, read from an edge-replicated copy so clamped windows
// take the same path as interior ones. Farther centres gather directly.
constexpr int kWindowPad = 32;

class ReferenceWindows {
public:
    // Without precomputation every score gathers its window; the arithmetic
    // is identical, so both forms give bit-equal scores.
    ReferenceWindows(const Image2D& ref, int half, bool precompute = true)
        : ref_(ref), half_(half), side_(2 * half + 1) {
        if (!precompute) return;
        margin_ = half + kWindowPad;
        stride_ = ref.width() + 2 * margin_;
        const int ph = ref.height() + 2 * margin_;
        padded_.resize(static_cast<std::size_t>(stride_) * static_cast<std::size_t>(ph));
        for (int y = 0; y < ph; ++y) {
            for (int x = 0; x < stride_; ++x) padded_[index(x, y)] = ref.clamped(x - margin_, y - margin_);
        }
        norms_.assign(padded_.size(), 0.0);
        const int n = side_ * side_;
        parallel_for(half, ph - half, [&](int cy) {
            for (int cx = half; cx < stride_ - half; ++cx) {
                double sum = 0.0;
                for (int j = -half; j <= half; ++j) {
                    for (int i = -half; i <= half; ++i) sum += padded_[index(cx + i, cy + j)];
                }
                const double mean = sum / n;
                double ss = 0.0;
                for (int j = -half; j <= half; ++j) {
                    for (int i = -half; i <= half; ++i) {
                        const double d = padded_[index(cx + i, cy + j)] - mean;
                        ss += d * d;
                    }
                }
                norms_[index(cx, cy)] = std::sqrt(ss);
            }
        });
    }

    bool inside(int cx, int cy) const {
        return !norms_.empty() && cx >= -kWindowPad && cy >= -kWindowPad && cx < ref_.width() + kWindowPad &&
               cy < ref_.height() + kWindowPad;
    }

    // sum_i t_i r_i / (|t| |r - mean r|); t is zero-mean so the reference
    // mean drops out of the numerator.
    double score(std::span<const double> tmpl, double tmpl_norm, int cx, int cy) const {
        if (inside(cx, cy)) {
            const int px = cx + margin_;
            const int py = cy + margin_;
            const double rnorm = norms_[index(px, py)];
            if (rnorm < kDegenerateNorm) return 0.0;
            double acc = 0.0;
            std::size_t t = 0;
            for (int j = -half_; j <= half_; ++j) {
                const double* row = padded_.data() + index(px - half_, py + j);
                for (int i = 0; i < side_; ++i) acc += tmpl[t++] * row[i];
            }
            return std::clamp(acc / (tmpl_norm * rnorm), -1.0, 1.0);
        }
        return gathered_score(tmpl, tmpl_norm, cx, cy);
    }

private:
    // Kept out of line so the interior path carries no large stack frame.
    [[gnu::noinline]] double gathered_score(std::span<const double> tmpl, double tmpl_norm, int cx, int cy) const {
        std::array<double, 4096> buf;  // only the first side * side entries are used
        const int n = side_ * side_;
        double sum = 0.0;
        int t = 0;
        for (int j = -half_; j <= half_; ++j) {
            for (int i = -half_; i <= half_; ++i) {
                buf[static_cast<std::size_t>(t)] = ref_.clamped(cx + i, cy + j);
                sum += buf[static_cast<std::size_t>(t++)];
            }
        }
        const double mean = sum / n;
        double ss = 0.0;
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            const double d = buf[static_cast<std::size_t>(k)] - mean;
            ss += d * d;
            acc += tmpl[static_cast<std::size_t>(k)] * buf[static_cast<std::size_t>(k)];
        }
        const double rnorm = std::sqrt(ss);
        if (rnorm < kDegenerateNorm) return 0.0;
        return std::clamp(acc / (tmpl_norm * rnorm), -1.0, 1.0);
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(x);
    }

    const Image2D& ref_;
    int half_;
    int side_;
    int margin_ = 0;
    int stride_ = 0;
    std::vector<double> padded_;
    std::vector<double> norms_;
};

// Zero-mean template gathered (with clamping) around a sample pixel.
struct Template {
    std::vector<double> values;
    double norm = 0.0;

    bool load(const Image2D& img, int x, int y, int half) {
        const int side = 2 * half + 1;
        values.resize(static_cast<std::size_t>(side * side));
        double sum = 0.0;
        std::size_t t = 0;
        for (int j = -half; j <= half; ++j) {
            for (int i = -half; i <= half; ++i) {
                values[t] = img.clamped(x + i, y + j);
                sum += values[t++];
            }
        }
        const double mean = sum / static_cast<double>(values.size());
        double ss = 0.0;
        for (double& v : values) {
            v -= mean;
            ss += v * v;
        }
        norm = std::sqrt(ss);
        return norm >= kDegenerateNorm;
    }
};

// Ranks candidates: higher score, then smaller |u|+|v|, then lexicographic (u, v).
bool better(double score, int u, int v, double best, int bu, int bv) {
    if (score != best) return score > best;
    const int l1 = std::abs(u) + std::abs(v);
    const int bl1 = std::abs(bu) + std::abs(bv);
    if (l1 != bl1) return l1 < bl1;
    return u != bu ? u < bu : v < bv;
}

// Searches offsets [cu-s, cu+s] x [cv-s, cv+s] for the sample template at (x, y).
PointMatch search(const ReferenceWindows& windows, const Template& tmpl, int x, int y, int cu, int cv, int s,
                  SubpixelMode mode, std::vector<double>& scores) {
    const int side = 2 * s + 1;
    scores.assign(static_cast<std::size_t>(side * side), 0.0);
    double best = -std::numeric_limits<double>::infinity();
    int bu = cu;
    int bv = cv;
    for (int v = cv - s; v <= cv + s; ++v) {
        for (int u = cu - s; u <= cu + s; ++u) {
            const double sc = windows.score(tmpl.values, tmpl.norm, x - u, y - v);
            scores[static_cast<std::size_t>((v - cv + s) * side + (u - cu + s))] = sc;
            if (better(sc, u, v, best, bu, bv)) {
                best = sc;
                bu = u;
                bv = v;
            }
        }
    }
    PointMatch m{static_cast<double>(bu), static_cast<double>(bv), best, true};
    // A perfect score means the template is an affine copy of the reference
    // window, so the integer offset is exact; the parabola would only add
    // the asymmetry of the neighbouring windows.
    if (mode == SubpixelMode::Parabolic && best < 1.0 - kPerfectMatch) {
        auto at = [&](int u, int v) {
            if (std::abs(u - cu) <= s && std::abs(v - cv) <= s) {
                return scores[static_cast<std::size_t>((v - cv + s) * side + (u - cu + s))];
            }
            return windows.score(tmpl.values, tmpl.norm, x - u, y - v);
        };
        m.dx += parabolic_peak_offset(at(bu - 1, bv), best, at(bu + 1, bv));
        m.dy += parabolic_peak_offset(at(bu, bv - 1), best, at(bu, bv + 1));
    }
    return m;
}

void require_pair(const Image2D& ref, const Image2D& sample) {
    if (!ref.same_shape(sample)) throw ParameterError("reference and sample dimensions differ");
}

MatchResult empty_result(const Image2D& ref) {
    MatchResult r;
    r.displacement = VectorField2D(ref.width(), ref.height());
    r.peak_score = Image2D(ref.width(), ref.height(), ref.pixel_pitch());
    r.valid_mask = Image2D(ref.width(), ref.height(), ref.pixel_pitch());
    return r;
}

void store(MatchResult& r, int x, int y, const PointMatch& m) {
    r.displacement.dx()(x, y) = m.dx;
    r.displacement.dy()(x, y) = m.dy;
    r.peak_score(x, y) = m.score;
    r.valid_mask(x, y) = m.valid ? 1.0 : 0.0;
}

// Pixels skipped by stride copy the nearest computed grid point.
void fill_stride(MatchResult& r, int band, int stride) {
    if (stride <= 1) return;
    const int w = r.peak_score.width();
    const int h = r.peak_score.height();
    const int last_x = band + ((w - 1 - band - band) / stride) * stride;
    const int last_y = band + ((h - 1 - band - band) / stride) * stride;
    for (int y = band; y < h - band; ++y) {
        const int sy = std::min(last_y, band + ((y - band + stride / 2) / stride) * stride);
        for (int x = band; x < w - band; ++x) {
            const int sx = std::min(last_x, band + ((x - band + stride / 2) / stride) * stride);
            if (sx == x && sy == y) continue;
            r.displacement.dx()(x, y) = r.displacement.dx()(sx, sy);
            r.displacement.dy()(x, y) = r.displacement.dy()(sx, sy);
            r.peak_score(x, y) = r.peak_score(sx, sy);
            r.valid_mask(x, y) = r.valid_mask(sx, sy);
        }
    }
}

// Normalized median test on the grid of computed points (spacing `step`):
// a point is unreliable when either component departs from the median of
// its valid 5 x 5 neighbours by more than threshold * (median residual + eps).
void flag_outliers(MatchResult& r, int band, int step, double threshold, double epsilon) {
    if (threshold <= 0.0) return;
    constexpr int kSide = 2 * kOutlierHalf + 1;
    const int w = r.valid_mask.width();
    const int h = r.valid_mask.height();
    const std::span<const double> valid = r.valid_mask.data();
    const std::span<const double> fields[2] = {std::as_const(r.displacement.dx()).data(),
                                               std::as_const(r.displacement.dy()).data()};
    std::vector<unsigned char> flagged(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
    parallel_for(band, h - band, [&](int y) {
        if ((y - band) % step != 0) return;
        std::array<std::size_t, kSide * kSide> nb{};
        std::array<double, kSide * kSide> values{};
        for (int x = band; x < w - band; x += step) {
            const std::size_t centre = static_cast<std::size_t>(y) * w + x;
            if (valid[centre] < 0.5) continue;
            std::size_t count = 0;
            for (int j = -kOutlierHalf; j <= kOutlierHalf; ++j) {
                const int yy = y + j * step;
                if (yy < band || yy >= h - band) continue;
                for (int i = -kOutlierHalf; i <= kOutlierHalf; ++i) {
                    const int xx = x + i * step;
                    if ((i == 0 && j == 0) || xx < band || xx >= w - band) continue;
                    const std::size_t k = static_cast<std::size_t>(yy) * w + xx;
                    if (valid[k] >= 0.5) nb[count++] = k;
                }
            }
            if (count < kOutlierMinNeighbours) continue;
            const auto mid = static_cast<std::ptrdiff_t>(count / 2);
            for (const auto& field : fields) {
                for (std::size_t n = 0; n < count; ++n) values[n] = field[nb[n]];
                std::nth_element(values.begin(), values.begin() + mid, values.begin() + static_cast<std::ptrdiff_t>(count));
                const double med = values[static_cast<std::size_t>(mid)];
                for (std::size_t n = 0; n < count; ++n) values[n] = std::abs(field[nb[n]] - med);
                std::nth_element(values.begin(), values.begin() + mid, values.begin() + static_cast<std::ptrdiff_t>(count));
                const double spread = values[static_cast<std::size_t>(mid)];
                if (std::abs(field[centre] - med) > threshold * (spread + epsilon)) {
                    flagged[centre] = 1;
                    break;
                }
            }
        }
    });
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (flagged[i]) r.valid_mask.data()[i] = 0.0;
    }
}

}  // namespace

void TrackConfig::validate() const {
    if (template_half < 1 || search_half < 1 || level_search_half < 1) {
        throw ParameterError("template and search half-widths must be >= 1");
    }
    if (template_half > search_half) throw ParameterError("template window must fit inside the search window");
    if (2 * template_half + 1 > 63) throw ParameterError("template window too large");
    if (pyramid_levels < 2) throw ParameterError("pyramid needs at least 2 levels");
    if (stride < 1) throw ParameterError("stride must be >= 1");
    if (!(outlier_threshold >= 0.0)) throw ParameterError("outlier threshold must be non-negative");
    if (!(outlier_epsilon > 0.0)) throw ParameterError("outlier epsilon must be positive");
}

double MatchResult::valid_fraction() const {
    if (valid_mask.empty()) return 0.0;
    return valid_mask.mean();
}

double parabolic_peak_offset(double s_minus, double s0, double s_plus) {
    const double curvature = s_minus - 2.0 * s0 + s_plus;
    if (!(curvature < 0.0)) return 0.0;
    return std::clamp((s_minus - s_plus) / (2.0 * curvature), -0.5, 0.5);
}

std::pair<double, double> subpixel_refine(std::span<const double, 9> patch) {
    return {parabolic_peak_offset(patch[3], patch[4], patch[5]), parabolic_peak_offset(patch[1], patch[4], patch[7])};
}

PointMatch zncc_match(const Image2D& ref, const Image2D& sample, int x, int y, const TrackConfig& cfg) {
    cfg.validate();
    require_pair(ref, sample);
    const int band = cfg.border_band();
    if (x < band || y < band || x >= ref.width() - band || y >= ref.height() - band) {
        throw ParameterError("zncc_match: pixel lies inside the border band");
    }
    Template tmpl;
    if (!tmpl.load(sample, x, y, cfg.template_half)) return {};
    const ReferenceWindows windows(ref, cfg.template_half, false);
    std::vector<double> scores;
    return search(windows, tmpl, x, y, 0, 0, cfg.search_half, cfg.subpixel, scores);
}

MatchResult dic_track_full(const Image2D& ref, const Image2D& sample, const TrackConfig& cfg) {
    cfg.validate();
    require_pair(ref, sample);
    const int band = cfg.border_band();
    if (ref.width() <= 2 * band || ref.height() <= 2 * band) {
        throw ParameterError("image too small for the configured template and search windows");
    }
    const ReferenceWindows windows(ref, cfg.template_half);
    MatchResult result = empty_result(ref);
    parallel_for(band, ref.height() - band, [&](int y) {
        if ((y - band) % cfg.stride != 0) return;
        Template tmpl;
        std::vector<double> scores;
        for (int x = band; x < ref.width() - band; x += cfg.stride) {
            if (!tmpl.load(sample, x, y, cfg.template_half)) continue;
            store(result, x, y, search(windows, tmpl, x, y, 0, 0, cfg.search_half, cfg.subpixel, scores));
        }
    });
    flag_outliers(result, band, cfg.stride, cfg.outlier_threshold, cfg.outlier_epsilon);
    fill_stride(result, band, cfg.stride);
    return result;
}

MatchResult dic_track_pyramid(const Image2D& ref, const Image2D& sample, const TrackConfig& cfg) {
    cfg.validate();
    require_pair(ref, sample);
    const int band = cfg.border_band();
    if (ref.width() <= 2 * band || ref.height() <= 2 * band) {
        throw ParameterError("image too small for the configured template and search windows");
    }
    const PyramidStack refs = build_pyramid(ref, cfg.pyramid_levels);
    const PyramidStack samples = build_pyramid(sample, cfg.pyramid_levels);
    const int coarsest = cfg.pyramid_levels - 1;
    if (refs[coarsest].width() < 2 * cfg.template_half + 1 || refs[coarsest].height() < 2 * cfg.template_half + 1) {
        throw ParameterError("coarsest pyramid level is smaller than the template");
    }

    VectorField2D estimate;
    for (int level = coarsest; level >= 0; --level) {
        const Image2D& lref = refs[level];
        const Image2D& lsample = samples[level];
        const int w = lref.width();
        const int h = lref.height();
        const bool finest = level == 0;
        const bool full = level == coarsest;

        Image2D pred_x;
        Image2D pred_y;
        if (!full) {
            pred_x = upsample_by_2(estimate.dx(), w, h);
            pred_y = upsample_by_2(estimate.dy(), w, h);
            for (double& v : pred_x.data()) v *= 2.0;
            for (double& v : pred_y.data()) v *= 2.0;
        }

        const ReferenceWindows windows(lref, cfg.template_half);
        MatchResult level_result = empty_result(lref);
        const int s = full ? cfg.search_half : cfg.level_search_half;
        const int lo = finest ? band : 0;
        const SubpixelMode mode = cfg.subpixel;
        parallel_for(lo, h - lo, [&](int y) {
            Template tmpl;
            std::vector<double> scores;
            for (int x = lo; x < w - lo; ++x) {
                const double px = full ? 0.0 : pred_x(x, y);
                const double py = full ? 0.0 : pred_y(x, y);
                if (!tmpl.load(lsample, x, y, cfg.template_half)) {
                    store(level_result, x, y, PointMatch{px, py, 0.0, false});
                    continue;
                }
                const int cu = static_cast<int>(std::lround(px));
                const int cv = static_cast<int>(std::lround(py));
                store(level_result, x, y, search(windows, tmpl, x, y, cu, cv, s, mode, scores));
            }
        });
        if (finest) {
            flag_outliers(level_result, band, 1, cfg.outlier_threshold, cfg.outlier_epsilon);
            return level_result;
        }
        // A coarse mismatch would otherwise pin every finer search to the
        // wrong neighbourhood.
        estimate = VectorField2D(median_filter(level_result.displacement.dx(), kEstimateMedianHalf),
                                 median_filter(level_result.displacement.dy(), kEstimateMedianHalf));
    }
    return {};
}

Image2D median_filter(const Image2D& img, int half) {
    if (half < 1) throw ParameterError("median filter half-width must be at least 1");
    Image2D out(img.width(), img.height(), img.pixel_pitch());
    const std::size_t n = static_cast<std::size_t>((2 * half + 1) * (2 * half + 1));
    parallel_for(0, img.height(), [&](int y) {
        std::vector<double> v(n);
        for (int x = 0; x < img.width(); ++x) {
            std::size_t k = 0;
            for (int j = -half; j <= half; ++j) {
                for (int i = -half; i <= half; ++i) v[k++] = img.clamped(x + i, y + j);
            }
            std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
            out(x, y) = v[n / 2];
        }
    });
    return out;
}

Image2D median3x3(const Image2D& img) { return median_filter(img, 1); }

Image2D transmission_recover(const Image2D& ref, const Image2D& sample, const VectorField2D& displacement,
                             bool median_filter) {
    require_pair(ref, sample);
    if (!displacement.same_shape(ref)) throw ParameterError("displacement field does not match image dimensions");
    Image2D t(ref.width(), ref.height(), ref.pixel_pitch());
    const Image2D& dx = displacement.dx();
    const Image2D& dy = displacement.dy();
    parallel_for(0, ref.height(), [&](int y) {
        for (int x = 0; x < ref.width(); ++x) {
            const double denom = bilinear_sample(ref, x - dx(x, y), y - dy(x, y));
            t(x, y) = sample(x, y) / std::max(denom, kDenominatorFloor);
        }
    });
    return median_filter ? median3x3(t) : t;
}

}  // namespace speckle
