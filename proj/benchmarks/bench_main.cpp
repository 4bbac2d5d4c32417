// Throughput benchmarks over three levels: single gadgets, single layers,
// and whole networks (offline garbling and the online phase).

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include <test_models.hpp>

#include "dash/circuit.hpp"
#include "dash/gadgets.hpp"
#include "dash/garble.hpp"
#include "dash/mixed_radix.hpp"

using namespace dash;

namespace {

struct Rig {
    LabelPrf prf{seed_from_string("be9c")};
    OffsetSet offsets;
    std::uint64_t wire = 1'000'000;

    Rig() {
        for (crt_val_t m = 2; m <= kMaxModulus; ++m) offsets.ensure(m, prf);
    }
    Label input(crt_val_t m) { return prf.label(wire++, m); }
};

Rig& rig() {
    static Rig r;
    return r;
}

}  // namespace

// ----- Gadget level ----------------------------------------------------------

static void gadget_proj_garble(benchmark::State& state) {
    const crt_val_t p = static_cast<crt_val_t>(state.range(0));
    const Label in = rig().input(p);
    std::vector<u128> cts;
    cts.reserve(p);
    const auto phi = [p](crt_val_t a) {
        return static_cast<crt_val_t>((a * a + 1) % p);
    };
    for (auto _ : state) {
        cts.clear();
        GarbleCtx g{&rig().prf, &rig().offsets, &cts, 1, 10};
        benchmark::DoNotOptimize(t_proj(g, in, p, phi));
    }
    state.SetItemsProcessed(state.iterations());
    state.SetBytesProcessed(state.iterations() * p * 16);
}
BENCHMARK(gadget_proj_garble)->Arg(2)->Arg(7)->Arg(23);

static void gadget_proj_eval(benchmark::State& state) {
    const crt_val_t p = static_cast<crt_val_t>(state.range(0));
    const Label in = rig().input(p);
    std::vector<u128> cts;
    const auto phi = [p](crt_val_t a) {
        return static_cast<crt_val_t>((a * a + 1) % p);
    };
    GarbleCtx g{&rig().prf, &rig().offsets, &cts, 1, 10};
    (void)t_proj(g, in, p, phi);
    const Label active = label_add(in, rig().offsets.get(p));
    for (auto _ : state) {
        EvalCtx e{cts, 0, 1};
        benchmark::DoNotOptimize(t_proj(e, active, p, phi));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(gadget_proj_eval)->Arg(2)->Arg(7)->Arg(23);

static void gadget_half_gate_garble(benchmark::State& state) {
    const crt_val_t p = static_cast<crt_val_t>(state.range(0));
    const Label a = rig().input(p), b = rig().input(p);
    std::vector<u128> cts;
    cts.reserve(2 * p);
    for (auto _ : state) {
        cts.clear();
        GarbleCtx g{&rig().prf, &rig().offsets, &cts, 1, 10};
        benchmark::DoNotOptimize(t_half_gate(g, a, b));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(gadget_half_gate_garble)->Arg(2)->Arg(7)->Arg(23);

static void gadget_mm_half_gate_garble(benchmark::State& state) {
    const crt_val_t p = static_cast<crt_val_t>(state.range(0));
    const Label a = rig().input(p), b = rig().input(2);
    std::vector<u128> cts;
    cts.reserve(p + 3);
    for (auto _ : state) {
        cts.clear();
        GarbleCtx g{&rig().prf, &rig().offsets, &cts, 1, 10};
        benchmark::DoNotOptimize(t_mm_half_gate(g, a, b));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(gadget_mm_half_gate_garble)->Arg(7)->Arg(23);

static void gadget_sign_bit(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const CrtBase base = crt_base(k);
    const MixedRadixSpec spec = choose_mixed_radix(base);
    const SignPlan plan = make_sign_plan(spec, k);
    const SignTables tables = build_sign_tables(base, spec);
    std::vector<Label> in;
    for (crt_val_t p : base.primes) in.push_back(rig().input(p));
    std::vector<u128> cts;
    for (auto _ : state) {
        cts.clear();
        GarbleCtx g{&rig().prf, &rig().offsets, &cts, 1, 10};
        benchmark::DoNotOptimize(
            t_approx_sign_bit(g, in, base, plan, &tables));
    }
    state.SetItemsProcessed(state.iterations());
    state.counters["cts"] =
        static_cast<double>(sign_gadget_cost(base, plan));
}
BENCHMARK(gadget_sign_bit)->Arg(3)->Arg(8)->Arg(9);

// ----- Layer level -----------------------------------------------------------

static void layer_network(benchmark::State& state, Circuit c, bool online) {
    const CrtBase base = crt_base(c.k);
    const Seed seed = seed_from_string("be9c01");
    if (!online) {
        for (auto _ : state) {
            benchmark::DoNotOptimize(garble(c, seed));
        }
    } else {
        const GarbledNetwork net = garble(c, seed);
        auto g = testsupport::rng(1);
        const auto input = testsupport::random_input(c, g);
        const auto lanes = garble_inputs(net.enc, input, base);
        for (auto _ : state) {
            benchmark::DoNotOptimize(evaluate(net.gc, lanes));
        }
        state.counters["cts"] = static_cast<double>(net.gc.cts.size());
    }
    state.SetItemsProcessed(state.iterations());
}

static Circuit dense_only() {
    auto g = testsupport::rng(41);
    Circuit c;
    c.input_shape = {784};
    c.k = 8;
    c.layers = {testsupport::dense(784, 128, g)};
    return c;
}

static Circuit relu_only() {
    Circuit c;
    c.input_shape = {128};
    c.k = 8;
    c.layers = {testsupport::relu()};
    return c;
}

static Circuit conv_only() {
    auto g = testsupport::rng(42);
    Circuit c;
    c.input_shape = {1, 28, 28};
    c.k = 8;
    c.layers = {testsupport::conv2d(1, 16, 6, 2, g)};
    return c;
}

BENCHMARK_CAPTURE(layer_network, dense_784x128_garble, dense_only(), false);
BENCHMARK_CAPTURE(layer_network, dense_784x128_eval, dense_only(), true);
BENCHMARK_CAPTURE(layer_network, conv_16f6s2_garble, conv_only(), false);
BENCHMARK_CAPTURE(layer_network, conv_16f6s2_eval, conv_only(), true);
BENCHMARK_CAPTURE(layer_network, relu_128_garble, relu_only(), false);
BENCHMARK_CAPTURE(layer_network, relu_128_eval, relu_only(), true);

// ----- Model level -----------------------------------------------------------

static void model_a_garble(benchmark::State& state) {
    const Circuit c = testsupport::model_a();
    const Seed seed = seed_from_string("be9c02");
    for (auto _ : state) {
        benchmark::DoNotOptimize(garble(c, seed));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(model_a_garble)->Unit(benchmark::kMillisecond);

static void model_a_online(benchmark::State& state) {
    const Circuit c = testsupport::model_a();
    const CrtBase base = crt_base(c.k);
    const GarbledNetwork net = garble(c, seed_from_string("be9c03"));
    auto g = testsupport::rng(2);
    const auto input = testsupport::random_input(c, g);
    for (auto _ : state) {
        const auto lanes = garble_inputs(net.enc, input, base);
        const auto out = evaluate(net.gc, lanes);
        benchmark::DoNotOptimize(decode_outputs(net.dec, out, base));
    }
    state.SetItemsProcessed(state.iterations());
    state.counters["cts"] = static_cast<double>(net.gc.cts.size());
}
BENCHMARK(model_a_online)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
