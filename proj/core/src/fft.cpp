#include "fft.hpp"

#include "speckle/error.hpp"

#include <fftw3.h>

#include <cstring>
#include <memory>
#include <mutex>

namespace speckle::detail {

namespace {

// The FFTW planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBufferDeleter {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

void fft2d(std::span<std::complex<double>> data, int width, int height, bool inverse) {
    if (width < 1 || height < 1 || data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ParameterError("fft2d: buffer does not match dimensions");
    }
    // Plan and execute on an FFTW-aligned scratch buffer so the chosen
    // codelets never depend on the caller's allocation alignment.
    const std::size_t n = data.size();
    std::unique_ptr<fftw_complex, FftwBufferDeleter> buf(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
    if (!buf) throw std::bad_alloc();

    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(height, width, buf.get(), buf.get(), inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    std::memcpy(buf.get(), data.data(), sizeof(fftw_complex) * n);
    fftw_execute(plan);
    std::memcpy(static_cast<void*>(data.data()), buf.get(), sizeof(fftw_complex) * n);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

}  // namespace speckle::detail
