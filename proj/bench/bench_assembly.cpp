// Residual and Jacobian assembly: scalar reference vs blocked serial vs
// OpenMP-parallel kernels on Test-case-1 meshes.
//
//   polyfk_bench [--benchmark_filter=...]
// Arguments of each benchmark: number of elements, polynomial degree.

#include "polyfk/assembly.hpp"
#include "polyfk/parallel.hpp"
#include "polyfk/verify.hpp"
#include "polyfk/voronoi.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

using namespace polyfk;

namespace {

struct Fixture {
  std::shared_ptr<const PolyMesh> mesh;
  std::unique_ptr<DGSpace> space;
  ModelData model;
  PenaltyContext ctx;
  std::unique_ptr<FisherOperator> op;
  Eigen::VectorXd lambda_old, lambda;
  FisherOperator::Step step;
};

const ThetaParams kParams{0.5, 1e-3, 0.0};

Fixture &fixture(int elements, int degree) {
  static std::map<std::pair<int, int>, std::unique_ptr<Fixture>> cache;
  auto &slot = cache[{elements, degree}];
  if (!slot) {
    auto f = std::make_unique<Fixture>();
    const ManufacturedCase mc = manufactured_case();
    f->mesh = std::make_shared<const PolyMesh>(
        generate_voronoi(elements, BoundingBox{Point(0, 0), Point(1, 1)}, 1, 30));
    f->space = std::make_unique<DGSpace>(f->mesh, degree);
    f->model = mc.model(*f->mesh);
    f->ctx = make_penalty_context(*f->space, f->model, 10.0);
    f->op = std::make_unique<FisherOperator>(*f->space, f->model, f->ctx);
    f->lambda_old = f->space->project([&](const Point &x) { return mc.lambda(x, 0.0); });
    f->lambda = f->space->project([&](const Point &x) { return mc.lambda(x, 1e-3); });
    f->step = f->op->begin_step(f->lambda_old, 0.0, 1e-3, kParams);
    slot = std::move(f);
  }
  return *slot;
}

void BM_Reference(benchmark::State &state) {
  Fixture &f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state)
    benchmark::DoNotOptimize(reference_linearize(*f.space, f.model, f.ctx, f.lambda_old,
                                                 f.lambda, 0.0, 1e-3, kParams));
  state.counters["dofs"] = f.space->num_dofs();
}

void BM_Serial(benchmark::State &state) {
  Fixture &f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state)
    benchmark::DoNotOptimize(f.op->linearize(f.step, f.lambda, nullptr, Execution::serial));
  state.counters["dofs"] = f.space->num_dofs();
}

void BM_Parallel(benchmark::State &state) {
  Fixture &f = fixture(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state)
    benchmark::DoNotOptimize(f.op->linearize(f.step, f.lambda, nullptr, Execution::parallel));
  state.counters["dofs"] = f.space->num_dofs();
  state.counters["threads"] = assembly_threads();
}

void sizes(benchmark::internal::Benchmark *b) {
  for (int n : {100, 1000})
    for (int p : {1, 3})
      b->Args({n, p});
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

} // namespace

BENCHMARK(BM_Reference)->Apply(sizes);
BENCHMARK(BM_Serial)->Apply(sizes);
BENCHMARK(BM_Parallel)->Apply(sizes);

BENCHMARK_MAIN();
