#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "quantshape/fir_design.hpp"
#include "quantshape/quantsim.hpp"

namespace quantshape {

class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/**
 * One JSON document describing a run. Every section is optional:
 *
 *   {
 *     "plant": "pendulum" | {"A": [[..]], "B": [..], "C": [..], "D": 0},
 *     "design": {"filter_order": 4, "gamma_eps": 0.05, "l_y": 1.5708, "truncation": null, "tail_tol": 1e-12},
 *     "iir": {"alpha_grid": 50, "alphas": [..], "mu_eta_caps": [null, 0.5, 2.0]},
 *     "tradeoff": {"min_bits": 1, "max_bits": 8, "cap_count": 40, "caps": [..]},
 *     "simulation": {"horizon": 20, "bits": 3, "trials": 1000},
 *     "output_dir": "out",
 *     "seed": 1
 *   }
 *
 * Unknown keys and non-positive or non-finite numbers are rejected with ConfigError.
 */
struct RunConfig {
    bool                         pendulum = true;
    PendulumBench                bench = PendulumBench::preset();
    DesignSpec                   design;
    std::size_t                  alpha_grid = 50;
    std::optional<std::vector<double>> alphas;  // explicit alpha points instead of the grid
    std::vector<std::optional<double>> mu_eta_caps;
    int                          min_bits = 1;
    int                          max_bits = 8;
    std::size_t                  cap_count = 40;
    std::optional<std::vector<double>> caps;
    double                       horizon = 20.0;
    int                          sim_bits = 3;
    std::size_t                  trials = 1000;
    std::filesystem::path        output_dir = "out";
    std::uint64_t                seed = 1;

    std::vector<double> tradeoff_caps() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace quantshape
