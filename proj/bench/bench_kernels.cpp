// Times the parallel kernels against their serial reference twins: branch
// enumeration in the oracle and bulk product-point validation.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <thread>
#include <vector>

#include "qpsoc/conic.hpp"
#include "qpsoc/instance.hpp"
#include "qpsoc/oracle.hpp"
#include "qpsoc/relaxation.hpp"

using namespace qpsoc;

namespace {

double unit_draw(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

template <class F>
double time_s(F fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SparseQp oracle_instance(int n, std::mt19937_64& rng) {
  SparseQp qp;
  qp.n = n;
  qp.c.resize(size_t(n));
  qp.q_diag[0] = 0.75;  // one plus loop: every branch runs the segment minimizer
  for (int v = 1; v < n; v += 5) qp.q_diag[v] = -0.5 - unit_draw(rng);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (unit_draw(rng) * n < 3.0) qp.q_off[{a, b}] = 2.0 * unit_draw(rng) - 1.0;
  for (auto& v : qp.c) v = 2.0 * unit_draw(rng) - 1.0;
  return qp;
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 20;
  size_t points = argc > 2 ? size_t(std::atoll(argv[2])) : 20000;
  if (n < 2 || n > 24 || points == 0) {
    std::fprintf(stderr, "usage: %s [oracle-nodes 2..24] [validation-points]\n", argv[0]);
    return 2;
  }
  std::mt19937_64 rng(0xBE);
  std::printf("hardware threads: %u\n", std::thread::hardware_concurrency());

  auto qp = oracle_instance(n, rng);
  OracleResult par, ser;
  double t_par = time_s([&] { par = global_min(qp); });
  double t_ser = time_s([&] { ser = reference::global_min(qp); });
  bool agree = std::abs(par.value - ser.value) <= 1e-12;
  std::printf("oracle enumeration   n=%-3d branches=%-9lld parallel %8.3f s   serial %8.3f s   speedup %.2fx   %s\n",
              n, 1ll << (n - 1), t_par, t_ser, t_ser / t_par,
              agree ? "values agree" : "VALUE MISMATCH");

  SparseQp vqp;
  vqp.n = 8;
  vqp.c.resize(8);
  for (int v = 0; v < 8; ++v)
    if (v % 3 == 0)
      vqp.q_diag[v] = 1.0;
    else if (v % 3 == 1)
      vqp.q_diag[v] = -1.0;
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b)
      if (unit_draw(rng) < 0.5) vqp.q_off[{a, b}] = 2.0 * unit_draw(rng) - 1.0;
  auto g = build_graph(vqp);
  auto sys = to_system(hierarchy(g, 3));
  ProductValidator pv(sys);

  std::vector<std::vector<double>> pts(points, std::vector<double>(8));
  for (auto& p : pts)
    for (auto& z : p) z = unit_draw(rng);

  size_t bad_par = 0, bad_ser = 0;
  double v_par = time_s([&] { bad_par = pv.count_infeasible(pts, 1e-9); });
  double v_ser = time_s([&] { bad_ser = pv.count_infeasible_serial(pts, 1e-9); });
  std::printf("product validation   rows=%-3zu systems=%-2zu points=%-8zu parallel %8.3f s   serial %8.3f s   speedup %.2fx   %s\n",
              sys.linear.size(), sys.lifted.size(), points, v_par, v_ser, v_ser / v_par,
              bad_par == bad_ser ? "counts agree" : "COUNT MISMATCH");
  return agree && bad_par == bad_ser ? 0 : 1;
}
