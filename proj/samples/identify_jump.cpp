// Recover a piecewise-constant reaction coefficient on a coarse mesh from
// noisy boundary flux and print the iteration history.

#include <iostream>

#include <tfrac/invert.hpp>
#include <tfrac/synth.hpp>

int main() {
    using namespace tfrac;
    ExperimentSpec spec = named_spec("jump");
    spec.nx = spec.ny = 9;
    spec.steps = 41;
    spec.times = step_range(21, 5, 41);

    const Problem problem = Problem::build(spec);
    const SyntheticData data = make_data(problem, 7);

    LmConfig config = default_lm_config(problem);
    config.max_iterations = 15;
    const InversionRun result = run(config, problem, data.noisy);

    for (int k = 0; k <= result.iterations(); ++k) {
        std::cout << k << "  residual " << result.residual_norms[k] << "  error " << result.relative_errors[k] << '\n';
    }
    std::cout << "recovered block values: " << result.final_iterate().transpose() << '\n';
}
