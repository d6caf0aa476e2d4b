// Serial reference against the OpenMP kernels: barrier Hessian assembly and the
// Monte-Carlo validator.

#include "rsvlc/bench.hpp"
#include "rsvlc/driver.hpp"
#include "rsvlc/ipm.hpp"
#include "rsvlc/lifting.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <string>

using namespace rsvlc;

namespace {

struct Instance {
  lifting::ConvexSubproblem sub;
  Eigen::VectorXd z;
  driver::Problem problem;
  rates::BeamformingSolution solution;
};

const Instance& instance(const std::string& name) {
  static std::map<std::string, Instance> cache;
  auto it = cache.find(name);
  if (it != cache.end()) {
    return it->second;
  }
  const auto cfg = bench::load_config_file(std::string(RSVLC_CONFIG_DIR) + "/" + name + ".cfg");
  Instance in;
  in.problem = driver::make_problem(cfg.scenario);
  const auto& pr = in.problem;
  const auto data = lifting::normalize(pr.estimates, pr.model, pr.amplitude, pr.total_power, pr.optical_limit, true);
  const auto start = driver::initialize(data);
  in.sub = lifting::assemble(data, {start.y_c, start.y_p, start.u_max, -0.01});
  in.z = lifting::complete_start(in.sub, start.matrices);
  in.solution = driver::run(pr, true, {});
  return cache.emplace(name, std::move(in)).first->second;
}

const char* kConvergence = "convergence_4led_4user";
const char* kOverloaded = "overloaded_6led_8user";

void hessian(benchmark::State& state, const char* name, bool parallel) {
  const Instance& in = instance(name);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (auto _ : state) {
    if (parallel) {
      ipm::barrier_derivatives(in.sub.program, in.z, g, h, true);
    } else {
      ipm::barrier_derivatives_serial(in.sub.program, in.z, g, h);
    }
    benchmark::DoNotOptimize(h.data());
  }
  state.counters["vars"] = static_cast<double>(in.sub.program.num_vars);
}

void validator(benchmark::State& state, const char* name, bool parallel) {
  const Instance& in = instance(name);
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const auto rep = parallel ? rates::worst_case_validate(in.problem.estimates, in.solution, samples, 1)
                              : rates::worst_case_validate_serial(in.problem.estimates, in.solution, samples, 1);
    benchmark::DoNotOptimize(rep.private_margin);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(hessian, convergence_serial, kConvergence, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hessian, convergence_openmp, kConvergence, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hessian, overloaded_serial, kOverloaded, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(hessian, overloaded_openmp, kOverloaded, true)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(validator, overloaded_serial, kOverloaded, false)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(validator, overloaded_openmp, kOverloaded, true)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
