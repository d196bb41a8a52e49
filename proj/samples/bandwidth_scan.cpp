// Finds the best OMRR resonance for a given displacement readout noise.
//
//   bandwidth_scan <peterson_table> [sigma_x ...]

#include "hybridsense/hybridsense.hpp"

#include <cstdio>
#include <cstdlib>
#include <vector>

using namespace hybridsense;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <peterson_table> [sigma_x ...]\n", argv[0]);
        return 2;
    }
    const auto ambient = noise::make_peterson_psd(noise::load_peterson_table(argv[1]));
    std::vector<double> sigmas;
    for (int i = 2; i < argc; ++i) sigmas.push_back(std::strtod(argv[i], nullptr));
    if (sigmas.empty()) sigmas = {1e-14, 1e-15, 1e-16};

    auto grid = config::log_grid(50.0, 3000.0, 200);
    for (auto& f : grid) f *= kTwoPi;

    hybrid::HybridConfig h(ai::InterferometerConfig{}, omrr::OmrrConfig{}, ambient);
    std::printf("uncorrected AI: %.3e m/s^2/rtHz, projection noise: %.3e\n", hybrid::uncorrected_sigma(h).sigma,
                ai::qpn_accel_asd(h.ai));
    for (double sx : sigmas) {
        h.omrr.sigma_x = sx;
        const auto best = hybrid::sweep_bandwidth(h, grid).optimum;
        std::printf("sigma_x %.1e m/rtHz -> f0 %.0f Hz, sigma_a %.3e m/s^2/rtHz\n", sx, best.omega0 / kTwoPi,
                    best.sigma_a);
    }
}
