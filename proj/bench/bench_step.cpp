// Serial reference vs OpenMP kernel for the Duhamel source of one step.
#include "xva/monotone.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

struct StepCase {
    xva::MarketParams p = xva::reference_market();
    xva::Contract contract = xva::Contract::call(15.0, 0.5);
    xva::GridSpec out;
    xva::Surface prev;
    xva::DuhamelTerm term;
    xva::DuhamelQuadrature q;
    xva::BreakList kinks;

    explicit StepCase(int order)
        : out(xva::output_grid(0.5, 0.05, 10.0, 20.0, 0.05)),
          prev(make_prev()),
          term{p.sigma, p.rho(), p.r + p.c_m(), 4.0},
          q(xva::DuhamelQuadrature::make(order, 1, order, 2))
    {
        kinks.add(std::log(15.0));
    }

    xva::Surface make_prev() const
    {
        const xva::GridSpec g = xva::lattice_grid({out.x_lo - 5.0, out.x_last() + 5.0}, out.x_lo, out.d_x,
                                                  out.tau_max, out.d_tau);
        return xva::initial_supersolution(contract, p).sample(g, xva::InterpOrder::Linear);
    }
};

void BM_StepReference(benchmark::State& state)
{
    const StepCase c(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(xva::step_source_reference(c.prev, c.p, c.term, c.q, c.out, c.kinks));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.out.tau_count() * c.out.x_count()));
}

void BM_StepParallel(benchmark::State& state)
{
    const StepCase c(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(xva::step_source_parallel(c.prev, c.p, c.term, c.q, c.out, c.kinks));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(c.out.tau_count() * c.out.x_count()));
}

BENCHMARK(BM_StepReference)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StepParallel)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
