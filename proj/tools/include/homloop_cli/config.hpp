#pragma once

/// Experiment configuration: a flat sectioned key-value text format.
///
///     # comment
///     [system]
///     builtin = duffing
///     [perturbation]
///     kind = x_cos
///     epsilon = 1e-4
///     [grid]
///     d = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
///
/// Values are JSON literals (numbers, quoted strings, booleans, arrays; an
/// array may continue over several lines until its brackets balance) or bare
/// words, which are read as strings. Unknown sections or keys are rejected.

#include "homloop/flow.hpp"
#include "homloop/system.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace homloop::cli {

/// One monomial coef·x^i·y^j, optionally times cos(ω t + φ) (perturbations only).
struct PolyTerm {
    double coef = 0.0;
    int i = 0;
    int j = 0;
    double omega = 0.0;
    double phase = 0.0;
};

struct SystemConfig {
    /// Built-in name, or "custom" for the inline polynomial tables below.
    std::string builtin = "duffing";
    std::string name = "custom";
    std::vector<PolyTerm> f_plus_x, f_plus_y, f_minus_x, f_minus_y, G;
};

struct PerturbationConfig {
    /// zero | damping | x_cos | polynomial
    std::string kind = "zero";
    double coefficient = 1.0;  ///< damping strength
    double omega = 1.0;        ///< x_cos frequency
    std::vector<PolyTerm> g_x, g_y;
    double epsilon = 0.0;
};

struct SessionConfig {
    double mu = 1.0 / 16.0;
    double beta = 0.0;           ///< 0 selects the cascade policy
    double beta_floor = 0.05;
    double log_varpi_cap = 40.0;
    std::uint64_t seed = 1;
    int n_loops = 5;             ///< stability probe iterations
    double d0 = 1e-3;            ///< stability probe start
    bool containment = false;    ///< loop: build barriers and assert containment
};

struct GridConfig {
    std::vector<double> d{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
    std::vector<double> tau{0.0};
    std::vector<double> epsilon;  ///< melnikov: splitting check over these ε (optional)
    int alpha_points = 64;
    bool forward = true;
    bool backward = true;
};

struct OutputConfig {
    std::string prefix;  ///< prepended to every output file name
};

struct ExperimentConfig {
    std::string source = "<string>";
    SystemConfig system;
    PerturbationConfig perturbation;
    SessionConfig session;
    GridConfig grid;
    Tolerances tolerances;
    OutputConfig output;

    /// Builds the configured system at the configured ε.
    [[nodiscard]] PiecewiseSystem build_system() const;
};

/// Parses configuration text; throws Error(ConfigParse) naming the offending
/// line or field.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");
/// Reads and parses a file; throws Error(ConfigParse) if it cannot be read.
ExperimentConfig load_config(const std::string& path);

/// Polynomial Σ coef·x^i·y^j·cos(ω t + φ) (time factor omitted when ω = φ = 0).
double eval_poly(const std::vector<PolyTerm>& terms, const Point2& x, double t = 0.0);
/// ∂/∂x and ∂/∂y of eval_poly.
Point2 grad_poly(const std::vector<PolyTerm>& terms, const Point2& x, double t = 0.0);

}  // namespace homloop::cli
