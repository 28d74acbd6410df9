#pragma once

#include <utility>
#include <vector>

namespace qmek::bath {

enum class SpectralFamily {
    OhmicGaussianCutoff, // J(w) = a * w * exp(-w^2 / lambda^2)
    SingleMode,          // one oscillator: weight g^2 at frequency omega_c
    Tabulated            // piecewise-linear (omega, J) samples
};

// Spectral density family + temperature. Units: hbar = k_B = 1; all
// frequencies/energies share one energy scale.
struct SpectralModel {
    SpectralFamily family{SpectralFamily::OhmicGaussianCutoff};
    double temperature{0.0}; // T >= 0; T = 0 means vacuum statistics

    // OhmicGaussianCutoff
    double prefactor_a{0.0};   // overall strength a
    double cutoff_lambda{1.0}; // Gaussian cutoff frequency

    // SingleMode
    double mode_frequency{1.0}; // omega_c
    double mode_weight{0.0};    // g^2
    // width of the narrow Gaussian used when the delta-weight is queried as a
    // density: J(w) = g^2 * N(w; omega_c, delta_width)
    double delta_width_fraction{1e-3}; // delta_width = fraction * omega_c

    // Tabulated: strictly increasing omega samples; linear interpolation
    // inside the range, zero outside.
    std::vector<std::pair<double, double>> samples;

    static SpectralModel ohmic_gaussian(double a, double lambda, double T);
    static SpectralModel single_mode(double omega_c, double g_sq, double T);
    static SpectralModel tabulated(std::vector<std::pair<double, double>> samples,
                                   double T);

    // Throws std::invalid_argument on violated invariants.
    void validate() const;
};

// J(omega); omega < 0 is a domain error.
double eval_spectral_density(const SpectralModel& model, double omega);

} // namespace qmek::bath
