#include "speckle/costvol.hpp"

#include "speckle/error.hpp"
#include "speckle/parallel.hpp"
#include "speckle/track.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

namespace speckle {

namespace {

constexpr double kFlatPatchNorm = 1e-12;
constexpr double kPerfectMatchTolerance = 1e-12;

void require_match(const FeatureStack& f, const VectorField2D& d) {
    if (f.width() != d.width() || f.height() != d.height()) {
        throw ParameterError("feature stack and displacement field dimensions differ");
    }
}

FeatureStack warp_features(const FeatureStack& features, const VectorField2D& displacement, double sign) {
    require_match(features, displacement);
    const int w = features.width();
    const int h = features.height();
    FeatureStack out(w, h, features.channels());
    const Image2D& dx = displacement.dx();
    const Image2D& dy = displacement.dy();
    for (int k = 0; k < features.channels(); ++k) {
        const Image2D plane = features.channel(k);
        auto dst = out.plane(k);
        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                dst[static_cast<std::size_t>(y) * w + x] =
                    bilinear_sample(plane, x + sign * dx(x, y), y + sign * dy(x, y));
            }
        });
    }
    return out;
}

}  // namespace

FeatureStack::FeatureStack(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || channels < 1) throw ParameterError("feature stack dimensions must be positive");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

std::span<const double> FeatureStack::plane(int k) const {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(k) * n, n);
}

std::span<double> FeatureStack::plane(int k) {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    return std::span<double>(data_).subspan(static_cast<std::size_t>(k) * n, n);
}

Image2D FeatureStack::channel(int k, double pixel_pitch) const {
    auto p = plane(k);
    return Image2D(width_, height_, pixel_pitch, std::vector<double>(p.begin(), p.end()));
}

FeatureStack intensity_features(const Image2D& img) {
    FeatureStack f(img.width(), img.height(), 1);
    std::copy(img.data().begin(), img.data().end(), f.plane(0).begin());
    return f;
}

FeatureStack patch_features(const Image2D& img, int half) {
    if (half < 1) throw ParameterError("patch half-width must be >= 1");
    const int side = 2 * half + 1;
    const int channels = side * side;
    const int w = img.width();
    const int h = img.height();
    FeatureStack f(w, h, channels);
    const double target = std::sqrt(static_cast<double>(channels));
    parallel_for(0, h, [&](int y) {
        std::vector<double> v(static_cast<std::size_t>(channels));
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            int k = 0;
            for (int j = -half; j <= half; ++j) {
                for (int i = -half; i <= half; ++i) {
                    v[static_cast<std::size_t>(k)] = img.clamped(x + i, y + j);
                    sum += v[static_cast<std::size_t>(k++)];
                }
            }
            const double mean = sum / channels;
            double ss = 0.0;
            for (double& e : v) {
                e -= mean;
                ss += e * e;
            }
            const double norm = std::sqrt(ss);
            const double scale = norm < kFlatPatchNorm ? 0.0 : target / norm;
            for (k = 0; k < channels; ++k) f(x, y, k) = v[static_cast<std::size_t>(k)] * scale;
        }
    });
    return f;
}

FeatureStack prop_layer(const FeatureStack& features, const VectorField2D& displacement) {
    return warp_features(features, displacement, -1.0);
}

FeatureStack inverse_prop_layer(const FeatureStack& features, const VectorField2D& displacement) {
    return warp_features(features, displacement, 1.0);
}

CostVolume::CostVolume(int width, int height, int search_range)
    : width_(width), height_(height), range_(search_range) {
    if (width < 1 || height < 1 || search_range < 0) throw ParameterError("invalid cost volume dimensions");
    scores_.assign(static_cast<std::size_t>(width) * height * planes(), 0.0);
}

std::span<const double> CostVolume::plane(int h) const {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    return std::span<const double>(scores_).subspan(static_cast<std::size_t>(h) * n, n);
}

std::span<double> CostVolume::plane(int h) {
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    return std::span<double>(scores_).subspan(static_cast<std::size_t>(h) * n, n);
}

CostVolume build_cost_volume(const FeatureStack& ref_features, const FeatureStack& sample_features, int search_range) {
    if (ref_features.width() != sample_features.width() || ref_features.height() != sample_features.height() ||
        ref_features.channels() != sample_features.channels()) {
        throw ParameterError("cost volume inputs differ in dimensions or channel count");
    }
    if (search_range < 1 || search_range > 6) {
        throw ParameterError("search range must lie in [1, 6], got " + std::to_string(search_range));
    }
    const int w = ref_features.width();
    const int h = ref_features.height();
    const int channels = ref_features.channels();
    const int n = search_range;
    CostVolume volume(w, h, n);

    parallel_for(0, h, [&](int y) {
        std::vector<double> acc(static_cast<std::size_t>(w));
        for (int p = -n; p <= n; ++p) {
            for (int q = -n; q <= n; ++q) {
                const int ry = std::clamp(y - q, 0, h - 1);
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int k = 0; k < channels; ++k) {
                    const double* rrow = ref_features.plane(k).data() + static_cast<std::size_t>(ry) * w;
                    const double* srow = sample_features.plane(k).data() + static_cast<std::size_t>(y) * w;
                    for (int x = 0; x < w; ++x) {
                        acc[static_cast<std::size_t>(x)] += rrow[std::clamp(x - p, 0, w - 1)] * srow[x];
                    }
                }
                auto dst = volume.plane(CostVolume::plane_index(p, q, n));
                for (int x = 0; x < w; ++x) {
                    dst[static_cast<std::size_t>(y) * w + x] = acc[static_cast<std::size_t>(x)] / channels;
                }
            }
        }
    });
    return volume;
}

VectorField2D argmax_displacement(const CostVolume& volume, bool subpixel, double exact_score) {
    const int w = volume.width();
    const int h = volume.height();
    const int n = volume.search_range();
    VectorField2D out(w, h);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            int bp = 0;
            int bq = 0;
            double best = volume.at(x, y, 0, 0);
            for (int p = -n; p <= n; ++p) {
                for (int q = -n; q <= n; ++q) {
                    const double s = volume.at(x, y, p, q);
                    bool take = false;
                    if (s > best) {
                        take = true;
                    } else if (s == best) {
                        const int l1 = std::abs(p) + std::abs(q);
                        const int bl1 = std::abs(bp) + std::abs(bq);
                        take = l1 < bl1 || (l1 == bl1 && (p < bp || (p == bp && q < bq)));
                    }
                    if (take) {
                        best = s;
                        bp = p;
                        bq = q;
                    }
                }
            }
            double dx = bp;
            double dy = bq;
            // Refine only strict peaks: clamped reads at borders duplicate the
            // best score into a neighbour, and a plateau has no vertex.
            auto refine = [best](double lo, double hi) {
                return lo < best && hi < best ? parabolic_peak_offset(lo, best, hi) : 0.0;
            };
            if (subpixel && best < exact_score) {
                if (bp > -n && bp < n) dx += refine(volume.at(x, y, bp - 1, bq), volume.at(x, y, bp + 1, bq));
                if (bq > -n && bq < n) dy += refine(volume.at(x, y, bp, bq - 1), volume.at(x, y, bp, bq + 1));
            }
            out.dx()(x, y) = dx;
            out.dy()(x, y) = dy;
        }
    });
    return out;
}

Image2D max_score(const CostVolume& volume) {
    Image2D out(volume.width(), volume.height());
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = volume.plane(0)[i];
    for (int h = 1; h < volume.planes(); ++h) {
        const auto plane = volume.plane(h);
        for (std::size_t i = 0; i < od.size(); ++i) od[i] = std::max(od[i], plane[i]);
    }
    return out;
}

MultiscaleResult multiscale_costvol_track(const Image2D& ref, const Image2D& sample, int levels, int search_range,
                                          const MultiscaleOptions& options) {
    if (!ref.same_shape(sample)) throw ParameterError("reference and sample dimensions differ");
    if (levels < 2) throw ParameterError("multiscale tracking needs at least 2 levels");
    if (options.estimate_median_half < 0) throw ParameterError("estimate median half-width must be non-negative");
    const int factor = 1 << (levels - 1);
    if (ref.width() % factor != 0 || ref.height() % factor != 0) {
        throw ParameterError("image dimensions must be divisible by 2^(levels-1) = " + std::to_string(factor));
    }
    const PyramidStack refs = build_pyramid(ref, levels);
    const PyramidStack samples = build_pyramid(sample, levels);
    auto features = [&](const Image2D& img) {
        return options.patch_half > 0 ? patch_features(img, options.patch_half) : intensity_features(img);
    };

    MultiscaleResult result;
    result.planes = (2 * search_range + 1) * (2 * search_range + 1);
    VectorField2D estimate;
    for (int level = levels - 1; level >= 0; --level) {
        const auto start = std::chrono::steady_clock::now();
        const Image2D& lref = refs[level];
        const int w = lref.width();
        const int h = lref.height();
        if (level == levels - 1) {
            estimate = VectorField2D(w, h);
        } else {
            Image2D ux = upsample_by_2(estimate.dx(), w, h);
            Image2D uy = upsample_by_2(estimate.dy(), w, h);
            for (double& v : ux.data()) v *= 2.0;
            for (double& v : uy.data()) v *= 2.0;
            VectorField2D up(std::move(ux), std::move(uy));
            estimate = std::move(up);
        }
        const FeatureStack warped = prop_layer(features(lref), estimate);
        const CostVolume volume = build_cost_volume(warped, features(samples[level]), search_range);
        // Patch features give ZNCC scores, so 1 marks a perfect match.
        const double exact = options.patch_half > 0 ? 1.0 - kPerfectMatchTolerance
                                                     : std::numeric_limits<double>::infinity();
        const VectorField2D residual = argmax_displacement(volume, options.subpixel, exact);
        if (level == 0) result.peak_score = max_score(volume);
        auto ex = estimate.dx().data();
        auto ey = estimate.dy().data();
        auto rx = residual.dx().data();
        auto ry = residual.dy().data();
        for (std::size_t i = 0; i < ex.size(); ++i) {
            ex[i] += rx[i];
            ey[i] += ry[i];
        }
        // Intermediate estimates are median filtered so an isolated wrong
        // peak is not doubled into the next level.
        if (level > 0 && options.estimate_median_half > 0) {
            estimate = VectorField2D(median_filter(estimate.dx(), options.estimate_median_half),
                                     median_filter(estimate.dy(), options.estimate_median_half));
        }
        result.level_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    result.displacement = std::move(estimate);
    return result;
}

}  // namespace speckle
