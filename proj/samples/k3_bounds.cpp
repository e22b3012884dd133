// Library usage: build the triangle with unit rates, check stability, compare the
// bounds with the exact stationary mean and a long simulated time average.

#include <iostream>

#include "matchnet/matchnet.hpp"

int main()
{
    using namespace matchnet;
    const ModelSpec spec = uniform_model(graphs::complete(3), {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});

    const auto nc = check_ncond(spec);
    std::cout << "NCOND holds: " << std::boolalpha << nc.holds << ", eta = " << nc.eta << "\n";

    const BoundsReport b = compute_bounds(spec, PolicyKind::MatchTheLongest);
    std::cout << "lower bound on E||x||_inf: " << *b.lower_mean << "\n";
    std::cout << "upper bound on E||x||_inf: " << *b.upper_mean << "\n";

    const TruncatedChain chain = build_chain(spec, PolicyKind::MatchTheLongest, 60);
    const StationaryResult st = stationary(chain);
    std::cout << "exact (truncated at 60):   " << stationary_moments(chain, st.pi).mean_max << "\n";

    SimConfig cfg;
    cfg.spec = spec;
    cfg.policy = PolicyKind::MatchTheLongest;
    cfg.horizon = 20000.0;
    cfg.seed = 7;
    const TrajectoryRecord rec = run(cfg);
    std::cout << "simulated time average:    " << rec.max_queue_area / rec.horizon << "\n";
}
