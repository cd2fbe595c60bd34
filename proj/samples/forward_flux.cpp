// Solve the forward problem for one boundary excitation and print the
// outward flux on the bottom side at the final time step.

#include <iostream>
#include <vector>

#include <tfrac/forward.hpp>
#include <tfrac/param.hpp>

int main() {
    using namespace tfrac;
    const Mesh mesh(16, 16);
    const CaputoScheme scheme(0.5, 0.02, 50);
    const Eigen::VectorXd q = project_truth(mesh, TruthCase::smooth);

    const ForwardModel model(mesh, scheme);
    const auto sol = model.solve(q, Excitation::sine_cosine(1, 2));

    const auto region = BoundaryRegion::side(Side::bottom);
    const std::vector<int> last{scheme.steps()};
    const Eigen::VectorXd flux = extract_flux(sol, region, last);

    const auto edges = boundary_restriction(mesh, region);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        std::cout << mesh.edge(edges[i].edge).midpoint().x << ' ' << flux[static_cast<Eigen::Index>(i)] << '\n';
    }
}
