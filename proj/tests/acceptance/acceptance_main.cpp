// Acceptance harness: nine end-to-end checks over the garbling engine, the
// sign machinery, the cost accounting, the protocol, and the performance
// envelope. Each criterion prints exactly one [PASS]/[FAIL] line; the binary
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <oracle_data.hpp>
#include <test_models.hpp>

#include "dash/circuit.hpp"
#include "dash/gadgets.hpp"
#include "dash/garble.hpp"
#include "dash/mixed_radix.hpp"
#include "dash/protocol.hpp"

using namespace dash;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

// ----- Shared garble/eval rig ------------------------------------------------

struct Rig {
    LabelPrf prf{seed_from_string("acce9716")};
    OffsetSet offsets;
    std::uint64_t wire = 5'000'000;
    std::uint64_t gate = 0;

    Rig() {
        for (crt_val_t m = 2; m <= kMaxModulus; ++m) offsets.ensure(m, prf);
    }
    Label input(crt_val_t m) { return prf.label(wire++, m); }
    Label active(const Label& base, crt_val_t v) const {
        return label_add(base,
                         label_scale(offsets.get(base.mod),
                                     static_cast<crt_val_t>(v % base.mod)));
    }
    // Value on the output wire, or -1 if the label is not base + v·R.
    int value_of(const Label& out0, const Label& outa) const {
        const Label diff = label_sub(outa, out0);
        const Label& r = offsets.get(out0.mod);
        for (crt_val_t v = 0; v < out0.mod; ++v)
            if (label_eq(diff, label_scale(r, v))) return v;
        return -1;
    }
};

struct Failure {
    std::string detail;  // empty = pass
    explicit operator bool() const { return !detail.empty(); }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ----- Criterion 1: gadget equivalence ---------------------------------------
//
// Every gadget, garbled then evaluated on every (or ≥10^4 random) input
// combination, must reproduce its plaintext semantics exactly.

Failure criterion_gadgets() {
    Rig rig;
    std::mt19937 rnd(20260823);
    std::uint64_t mismatches = 0, trials = 0;
    std::ostringstream first;

    const auto note = [&](const std::string& what) {
        if (mismatches == 0) first << what;
        ++mismatches;
    };

    const auto proj_trial = [&](crt_val_t p, crt_val_t q, bool grr,
                                const std::vector<crt_val_t>& tab,
                                crt_val_t x) {
        const Label in0 = rig.input(p);
        std::vector<u128> cts;
        const std::uint64_t g0 = rig.gate;
        GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
        const auto phi = [&tab](crt_val_t a) { return tab[a]; };
        const Label out0 =
            grr ? t_proj_grr(g, in0, q, phi) : t_proj(g, in0, q, phi);
        rig.gate = g.next_gate;
        rig.wire = g.next_wire;
        EvalCtx e{cts, 0, g0};
        const Label outa = grr ? t_proj_grr(e, rig.active(in0, x), q, phi)
                               : t_proj(e, rig.active(in0, x), q, phi);
        ++trials;
        const std::size_t want_cts = grr ? p - 1u : p;
        if (cts.size() != want_cts || e.pos != cts.size() ||
            rig.value_of(out0, outa) != tab[x])
            note(fmt("proj p=%d q=%d grr=%d x=%d", p, q, grr, x));
    };

    const auto rand_table = [&](crt_val_t p, crt_val_t q) {
        std::vector<crt_val_t> tab(p);
        for (auto& t : tab) t = static_cast<crt_val_t>(rnd() % q);
        return tab;
    };

    const std::vector<crt_val_t> small = {2, 3, 5, 7};
    const CrtBase p9 = crt_base(9);

    // Projections, exhaustive then randomized.
    for (crt_val_t p : small)
        for (crt_val_t q : small)
            for (int rep = 0; rep < 2; ++rep) {
                const auto tab = rand_table(p, q);
                for (crt_val_t x = 0; x < p; ++x) {
                    proj_trial(p, q, false, tab, x);
                    proj_trial(p, q, true, tab, x);
                }
            }
    for (int i = 0; i < 5'000; ++i) {
        const crt_val_t p = p9.primes[rnd() % 9];
        const crt_val_t q = p9.primes[rnd() % 9];
        const auto tab = rand_table(p, q);
        const crt_val_t x = static_cast<crt_val_t>(rnd() % p);
        proj_trial(p, q, false, tab, x);
        proj_trial(p, q, true, tab, x);
    }

    // Half gates (same-modulus multiplication).
    const auto half_trial = [&](crt_val_t p, crt_val_t x, crt_val_t y) {
        const Label a0 = rig.input(p), b0 = rig.input(p);
        std::vector<u128> cts;
        const std::uint64_t g0 = rig.gate;
        GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
        const Label out0 = t_half_gate(g, a0, b0);
        rig.gate = g.next_gate;
        rig.wire = g.next_wire;
        EvalCtx e{cts, 0, g0};
        const Label outa =
            t_half_gate(e, rig.active(a0, x), rig.active(b0, y));
        ++trials;
        if (cts.size() != 2u * p ||
            rig.value_of(out0, outa) != (x * y) % p)
            note(fmt("half gate p=%d x=%d y=%d", p, x, y));
    };
    for (crt_val_t p : small)
        for (crt_val_t x = 0; x < p; ++x)
            for (crt_val_t y = 0; y < p; ++y) half_trial(p, x, y);
    for (int i = 0; i < 5'000; ++i) {
        const crt_val_t p = p9.primes[rnd() % 9];
        half_trial(p, static_cast<crt_val_t>(rnd() % p),
                   static_cast<crt_val_t>(rnd() % p));
    }

    // Mixed-modulus half gates (q ≤ p).
    const auto mm_trial = [&](crt_val_t p, crt_val_t q, crt_val_t x,
                              crt_val_t y) {
        const Label a0 = rig.input(p), b0 = rig.input(q);
        std::vector<u128> cts;
        const std::uint64_t g0 = rig.gate;
        GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
        const Label out0 = t_mm_half_gate(g, a0, b0);
        rig.gate = g.next_gate;
        rig.wire = g.next_wire;
        EvalCtx e{cts, 0, g0};
        const Label outa =
            t_mm_half_gate(e, rig.active(a0, x), rig.active(b0, y));
        ++trials;
        if (cts.size() != static_cast<std::size_t>(p) + q + 1 ||
            rig.value_of(out0, outa) != (x * y) % p)
            note(fmt("mm half gate p=%d q=%d x=%d y=%d", p, q, x, y));
    };
    for (crt_val_t p : small)
        for (crt_val_t q : small) {
            if (q > p) continue;
            for (crt_val_t x = 0; x < p; ++x)
                for (crt_val_t y = 0; y < q; ++y) mm_trial(p, q, x, y);
        }
    for (int i = 0; i < 5'000; ++i) {
        const std::size_t pi = rnd() % 9;
        const crt_val_t p = p9.primes[pi];
        const crt_val_t q = p9.primes[rnd() % (pi + 1)];
        mm_trial(p, q, static_cast<crt_val_t>(rnd() % p),
                 static_cast<crt_val_t>(rnd() % q));
    }

    // Free addition, constant multiplication, public constant addition.
    const auto linear_trial = [&](crt_val_t p, const std::vector<crt_val_t>& xs,
                                  crt_val_t cmul, crt_val_t cadd) {
        std::vector<Label> in0;
        for (std::size_t i = 0; i < xs.size(); ++i) in0.push_back(rig.input(p));
        std::vector<u128> cts;
        const std::uint64_t g0 = rig.gate;
        GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
        Label out0 = free_add(g, std::span<const Label>(in0));
        out0 = const_mult(g, out0, cmul);
        out0 = add_public_constant(g, out0, cadd);
        rig.gate = g.next_gate;
        rig.wire = g.next_wire;
        EvalCtx e{cts, 0, g0};
        std::vector<Label> ina;
        for (std::size_t i = 0; i < xs.size(); ++i)
            ina.push_back(rig.active(in0[i], xs[i]));
        Label outa = free_add(e, std::span<const Label>(ina));
        outa = const_mult(e, outa, cmul);
        outa = add_public_constant(e, outa, cadd);
        ++trials;
        const crt_val_t want = static_cast<crt_val_t>(
            (std::accumulate(xs.begin(), xs.end(), 0u) * cmul + cadd) % p);
        if (!cts.empty() || rig.value_of(out0, outa) != want)
            note(fmt("linear gadget p=%d", p));
    };
    for (crt_val_t p : small)
        for (crt_val_t x = 0; x < p; ++x)
            for (crt_val_t y = 0; y < p; ++y)
                for (crt_val_t c = 1; c < p; ++c)
                    linear_trial(p, {x, y}, c, static_cast<crt_val_t>(c - 1));
    for (int i = 0; i < 10'000; ++i) {
        const crt_val_t p = p9.primes[rnd() % 9];
        std::vector<crt_val_t> xs(2 + rnd() % 3);
        for (auto& x : xs) x = static_cast<crt_val_t>(rnd() % p);
        crt_val_t c = static_cast<crt_val_t>(
            1 + rnd() % static_cast<std::uint32_t>(p9.P % 97));
        if (c % p == 0) ++c;
        linear_trial(p, xs, c, static_cast<crt_val_t>(rnd() % p));
    }

    // Mixed-radix addition: MSD of the sum of k bundle values.
    const auto mr_trial = [&](const MixedRadixSpec& spec, int k,
                              const SignPlan& plan,
                              const std::vector<std::uint64_t>& vals) {
        const int t = spec.t();
        const std::uint64_t m = static_cast<std::uint64_t>(spec.M());
        std::vector<std::vector<Label>> in0(k, std::vector<Label>(t));
        std::vector<std::vector<std::uint32_t>> digit(
            k, std::vector<std::uint32_t>(t));
        for (int s = 0; s < k; ++s) {
            std::uint64_t v = vals[s];
            for (int j = t - 1; j >= 0; --j) {
                digit[s][j] = static_cast<std::uint32_t>(v % spec.radices[j]);
                v /= spec.radices[j];
            }
            for (int j = 0; j < t; ++j) in0[s][j] = rig.input(spec.radices[j]);
        }
        std::vector<u128> cts;
        const std::uint64_t g0 = rig.gate;
        GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
        const Label out0 = t_mixed_radix_add(g, in0, plan);
        rig.gate = g.next_gate;
        rig.wire = g.next_wire;
        std::vector<std::vector<Label>> ina(k, std::vector<Label>(t));
        for (int s = 0; s < k; ++s)
            for (int j = 0; j < t; ++j)
                ina[s][j] = rig.active(
                    in0[s][j], static_cast<crt_val_t>(digit[s][j]));
        EvalCtx e{cts, 0, g0};
        const Label outa = t_mixed_radix_add(e, ina, plan);
        ++trials;
        const std::uint64_t total =
            std::accumulate(vals.begin(), vals.end(), std::uint64_t{0}) % m;
        const int want = static_cast<int>(total / (m / spec.radices[0]));
        if (cts.size() != mixed_radix_add_cost(k, spec) ||
            rig.value_of(out0, outa) != want)
            note(fmt("mixed-radix add k=%d t=%d", k, t));
    };
    {
        const MixedRadixSpec s43{{4, 3}};
        const SignPlan plan43 = make_sign_plan(s43, 2);
        for (std::uint64_t a = 0; a < 12; ++a)
            for (std::uint64_t b = 0; b < 12; ++b)
                mr_trial(s43, 2, plan43, {a, b});
        const MixedRadixSpec s642{{6, 4, 2}};
        const SignPlan plan642 = make_sign_plan(s642, 2);
        for (std::uint64_t a = 0; a < 48; ++a)
            for (std::uint64_t b = 0; b < 48; ++b)
                mr_trial(s642, 2, plan642, {a, b});
        const MixedRadixSpec full9 = choose_mixed_radix(p9);
        const SignPlan plan9 = make_sign_plan(full9, 9);
        const std::uint64_t m9 = static_cast<std::uint64_t>(full9.M());
        for (int i = 0; i < 2'000; ++i) {
            std::vector<std::uint64_t> vals(9);
            for (auto& v : vals) v = rnd() % m9;
            mr_trial(full9, 9, plan9, vals);
        }
    }

    // Approximated sign: garbled output must equal the table model exactly.
    const auto sign_suite = [&](const CrtBase& base, std::uint64_t n_random) {
        const MixedRadixSpec spec = choose_mixed_radix(base);
        const SignPlan plan = make_sign_plan(spec, base.k);
        const SignTables tables = build_sign_tables(base, spec);
        const u128 m = spec.M();
        const std::uint64_t p_total = static_cast<std::uint64_t>(base.P);
        const bool exhaustive = p_total <= 4096;
        const std::uint64_t n = exhaustive ? p_total : n_random;
        for (std::uint64_t it = 0; it < n; ++it) {
            const std::uint64_t x =
                exhaustive ? it
                           : (static_cast<std::uint64_t>(rnd()) << 16 ^
                              rnd()) % p_total;
            std::vector<Label> in0;
            std::vector<crt_val_t> res;
            for (int i = 0; i < base.k; ++i) {
                in0.push_back(rig.input(base.primes[i]));
                res.push_back(static_cast<crt_val_t>(x % base.primes[i]));
            }
            std::vector<u128> cts;
            const std::uint64_t g0 = rig.gate;
            GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
            const Label out0 = t_approx_sign_bit(g, in0, base, plan, &tables);
            rig.gate = g.next_gate;
            rig.wire = g.next_wire;
            std::vector<Label> ina;
            for (int i = 0; i < base.k; ++i)
                ina.push_back(rig.active(in0[i], res[i]));
            EvalCtx e{cts, 0, g0};
            const Label outa = t_approx_sign_bit(e, ina, base, plan, nullptr);
            ++trials;
            u128 sum = 0;
            for (int i = 0; i < base.k; ++i) {
                sum += tables.d[i][res[i]];
                if (sum >= m) sum -= m;
            }
            const bool model_nonneg = !(2 * sum >= m);
            const int want = (model_nonneg && x != 0) ? 1 : 0;
            if (cts.size() != sign_gadget_cost(base, plan) ||
                rig.value_of(out0, outa) != want)
                note(fmt("approx sign k=%d x=%llu", base.k,
                         static_cast<unsigned long long>(x)));
        }
    };
    sign_suite(crt_base(3), 0);
    sign_suite(crt_base(4), 0);
    sign_suite(crt_base(9), 10'000);

    if (mismatches)
        return {fmt("%llu/%llu trials mismatched, first: %s",
                    static_cast<unsigned long long>(mismatches),
                    static_cast<unsigned long long>(trials),
                    first.str().c_str())};
    if (trials < 40'000)
        return {fmt("only %llu trials run",
                    static_cast<unsigned long long>(trials))};
    return {};
}

// ----- Criterion 2: correctness bound of the approximated sign ---------------
//
// On the k=3 base (P = 30), any discretization with M > k·P/2 = 45 must
// classify every ring element correctly; so must the chosen M = 46 spec.

Failure criterion_sign_bound() {
    Rig rig;
    const CrtBase base = crt_base(3);
    const std::vector<MixedRadixSpec> specs = {
        MixedRadixSpec{{46}}, MixedRadixSpec{{8, 3, 2}},
        MixedRadixSpec{{6, 4, 2}}, choose_mixed_radix(base)};
    for (const auto& spec : specs) {
        if (static_cast<std::uint64_t>(spec.M()) <= 45)
            return {fmt("spec M=%llu does not exceed 45",
                        static_cast<unsigned long long>(
                            static_cast<std::uint64_t>(spec.M())))};
        const SignPlan plan = make_sign_plan(spec, base.k);
        const SignTables tables = build_sign_tables(base, spec);
        for (std::uint64_t x = 0; x < 30; ++x) {
            std::vector<Label> in0;
            for (int i = 0; i < base.k; ++i)
                in0.push_back(rig.input(base.primes[i]));
            std::vector<u128> cts;
            const std::uint64_t g0 = rig.gate;
            GarbleCtx g{&rig.prf, &rig.offsets, &cts, g0, rig.wire};
            const Label out0 = t_approx_sign_bit(g, in0, base, plan, &tables);
            rig.gate = g.next_gate;
            rig.wire = g.next_wire;
            std::vector<Label> ina;
            for (int i = 0; i < base.k; ++i)
                ina.push_back(rig.active(
                    in0[i], static_cast<crt_val_t>(x % base.primes[i])));
            EvalCtx e{cts, 0, g0};
            const Label outa = t_approx_sign_bit(e, ina, base, plan, nullptr);
            const int truth = (x != 0 && x < 15) ? 1 : 0;
            if (rig.value_of(out0, outa) != truth)
                return {fmt("M=%llu misclassifies x=%llu",
                            static_cast<unsigned long long>(
                                static_cast<std::uint64_t>(spec.M())),
                            static_cast<unsigned long long>(x))};
        }
    }
    return {};
}

// ----- Criterion 3: ciphertext cost formulas ---------------------------------

Failure criterion_costs() {
    Rig rig;
    const CrtBase p9 = crt_base(9);

    const auto measured = [&](auto&& gadget) -> std::uint64_t {
        std::vector<u128> cts;
        GarbleCtx g{&rig.prf, &rig.offsets, &cts, rig.gate, rig.wire};
        gadget(g);
        rig.gate = g.next_gate;
        rig.wire = g.next_wire;
        return cts.size();
    };

    for (crt_val_t p : p9.primes) {
        const Label a = rig.input(p), b = rig.input(p), s = rig.input(2);
        const auto id = [](crt_val_t v) { return v; };
        const std::uint64_t proj = measured(
            [&](GarbleCtx& g) { t_proj(g, a, 7, [](crt_val_t v) {
                return static_cast<crt_val_t>(v % 7); }); });
        const std::uint64_t grr = measured(
            [&](GarbleCtx& g) { t_proj_grr(g, a, p, id); });
        const std::uint64_t half = measured(
            [&](GarbleCtx& g) { t_half_gate(g, a, b); });
        const std::uint64_t mm = measured(
            [&](GarbleCtx& g) { t_mm_half_gate(g, a, s); });
        if (proj != projection_cost(p) || proj != p)
            return {fmt("projection on p=%d costs %llu", p,
                        static_cast<unsigned long long>(proj))};
        if (grr != grr_projection_cost(p) || grr != p - 1u)
            return {fmt("reduced projection on p=%d costs %llu", p,
                        static_cast<unsigned long long>(grr))};
        if (half != half_gate_cost(p) || half != 2u * p)
            return {fmt("half gate on p=%d costs %llu", p,
                        static_cast<unsigned long long>(half))};
        if (mm != mm_half_gate_cost(p, 2) || mm != p + 2u + 1u)
            return {fmt("mixed-modulus half gate on p=%d costs %llu", p,
                        static_cast<unsigned long long>(mm))};
    }

    // Whole sign gadget: digit projections t·Σp_i, mixed-radix addition (exact
    // count under the closed-form bound), comparison m1−1, zero test, final
    // AND. The measured count must equal the term-by-term sum.
    for (int k : {2, 3, 4, 8, 9}) {
        const CrtBase base = crt_base(k);
        const MixedRadixSpec spec = choose_mixed_radix(base);
        const SignPlan plan = make_sign_plan(spec, k);
        const std::uint64_t sum_p = std::accumulate(
            base.primes.begin(), base.primes.end(), std::uint64_t{0});
        const std::uint64_t t = spec.t();
        const std::uint64_t mr = mixed_radix_add_cost(k, spec);
        const std::uint64_t expect = t * sum_p            // digit projections
                                     + mr                 // mixed-radix sum
                                     + (spec.radices[0] - 1u)  // comparison
                                     + sum_p + (k + 1u)   // zero test
                                     + 4u;                // final AND (Z_2)
        const std::uint64_t got = sign_gadget_cost(base, plan);
        if (got != expect)
            return {fmt("sign gadget k=%d costs %llu, expected %llu", k,
                        static_cast<unsigned long long>(got),
                        static_cast<unsigned long long>(expect))};
        if (mr > mixed_radix_add_bound(k, spec))
            return {fmt("mixed-radix addition k=%d exceeds its bound", k)};
    }

    // Public linear layers and flatten are ciphertext-free.
    auto g = testsupport::rng(77);
    Circuit lin;
    lin.input_shape = {1, 8, 8};
    lin.k = 8;
    lin.layers = {testsupport::conv2d(1, 2, 3, 1, g), testsupport::flatten(),
                  testsupport::dense(72, 9, g)};
    const CountCtx count = count_circuit(lin, crt_base(8), nullptr);
    if (count.cts != 0)
        return {fmt("public linear network emitted %llu ciphertexts",
                    static_cast<unsigned long long>(count.cts))};
    return {};
}

// ----- Criterion 4: end-to-end exactness on the model catalog ----------------

Failure criterion_end_to_end() {
    struct Case {
        const char* name;
        const char* seed;
        Circuit c;
    };
    std::vector<Case> cases;
    cases.push_back({"A", "e2e0a1", testsupport::model_a()});
    cases.push_back({"C", "e2e0c1", testsupport::model_c()});
    cases.push_back({"D", "e2e0d1", testsupport::model_d()});
    const int inputs_per_model = 1'000;

    for (auto& [name, seed, c] : cases) {
        const CrtBase base = crt_base(c.k);
        const GarbledNetwork net = garble(c, seed_from_string(seed));
        auto g = testsupport::rng(4000 + static_cast<std::uint32_t>(name[0]));
        for (int i = 0; i < inputs_per_model; ++i) {
            const auto input = testsupport::random_input(c, g);
            const auto want = circuit_plain_forward(c, input, base);
            const auto out =
                evaluate(net.gc, garble_inputs(net.enc, input, base));
            const auto got = decode_outputs(net.dec, out, base);
            if (got != want)
                return {fmt("model %s input %d decoded wrong", name, i)};
        }
    }
    return {};
}

// ----- Criterion 5: one online round, expected communication volume ----------

Failure criterion_protocol_comm() {
    struct Case {
        const char* name;
        Circuit c;
        double mib;
    };
    std::vector<Case> cases;
    cases.push_back({"A", testsupport::model_a(), 0.1});
    cases.push_back({"F", testsupport::model_f_dims(), 0.4});

    for (auto& [name, c, mib] : cases) {
        const CrtBase base = crt_base(c.k);
        auto g = testsupport::rng(5000 + static_cast<std::uint32_t>(name[0]));
        const auto input = testsupport::random_input(c, g);
        GarblerConfig cfg;
        cfg.use_fixed_seed = true;
        cfg.seed = seed_from_string("c5c5");
        const LocalRunResult run = run_local_protocol(c, input, 2, cfg);
        if (run.outputs != circuit_plain_forward(c, input, base))
            return {fmt("model %s protocol output mismatch", name)};

        int garbled_in = 0, garbled_out = 0;
        std::uint64_t in_bytes = 0, out_bytes = 0, plain_in = 0, plain_out = 0;
        for (const auto& e : run.trace) {
            if (e.type == FrameType::GarbledInput) {
                ++garbled_in;
                in_bytes += e.payload_bytes;
            } else if (e.type == FrameType::GarbledOutput) {
                ++garbled_out;
                out_bytes += e.payload_bytes;
            } else if (e.type == FrameType::InputUpload) {
                plain_in += e.payload_bytes - 10;  // minus the upload header
            } else if (e.type == FrameType::Result &&
                       e.edge == Edge::GarblerToClient) {
                plain_out += e.payload_bytes;
            }
        }
        if (garbled_in != 1 || garbled_out != 1)
            return {fmt("model %s used %d/%d online rounds", name, garbled_in,
                        garbled_out)};
        const CommVolume cv =
            comm_volume(c.k, size_of(c.input_shape), run.outputs.size());
        if (in_bytes != cv.garbled_in || out_bytes != cv.garbled_out ||
            plain_in != cv.plain_in || plain_out != cv.plain_out)
            return {fmt("model %s measured bytes differ from comm_volume",
                        name)};
        const double got_mib =
            std::round(static_cast<double>(cv.online_bytes()) / 1048576.0 *
                       10.0) /
            10.0;
        if (got_mib != mib)
            return {fmt("model %s online volume %.1f MiB, expected %.1f", name,
                        got_mib, mib)};
    }
    return {};
}

// ----- Criterion 6: authenticity of garbled outputs --------------------------

Failure criterion_authenticity() {
    const Circuit c = testsupport::model_tiny();
    const CrtBase base = crt_base(c.k);
    const GarbledNetwork net = garble(c, seed_from_string("a6a6"));
    auto g = testsupport::rng(6000);
    const auto input = testsupport::random_input(c, g);
    const auto out = evaluate(net.gc, garble_inputs(net.enc, input, base));
    const auto clean = bundle_payload(out);
    const dim_t out_shape = circuit_shapes(c).back();
    if (decode_outputs(net.dec, out, base) !=
        circuit_plain_forward(c, input, base))
        return {"clean decode failed before tampering"};

    std::mt19937 rnd(424242);
    const int trials = 1'000;
    int detected = 0;
    for (int i = 0; i < trials; ++i) {
        auto bytes = clean;
        const std::size_t bit = rnd() % (bytes.size() * 8);
        bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        try {
            const auto lanes = bundle_from_payload(bytes, base, out_shape);
            (void)decode_outputs(net.dec, lanes, base);
        } catch (const AuthenticityError&) {
            ++detected;
        } catch (const DataError&) {
            // wire count/shape failures also count as detection
            ++detected;
        }
    }
    if (detected < 999)
        return {fmt("only %d/%d bit flips detected", detected, trials)};
    return {};
}

// ----- Criterion 7: determinism across seeds and thread counts ---------------

Failure criterion_determinism() {
    const Circuit c = testsupport::model_tiny();
    const CrtBase base = crt_base(c.k);
    const Seed seed = seed_from_string("d7d7");
    const int hw = std::max(2u, std::thread::hardware_concurrency());

    const GarbledNetwork n1 = garble(c, seed, 1);
    const GarbledNetwork n2 = garble(c, seed, hw);
    const GarbledNetwork n3 = garble(c, seed, 1);
    if (serialize_garbled_circuit(n1.gc) != serialize_garbled_circuit(n2.gc) ||
        serialize_encoding(n1.enc) != serialize_encoding(n2.enc) ||
        serialize_decoding(n1.dec) != serialize_decoding(n2.dec))
        return {"garbling differs across thread counts"};
    if (serialize_garbled_circuit(n1.gc) != serialize_garbled_circuit(n3.gc))
        return {"fixed-seed garbling is not reproducible"};

    auto g = testsupport::rng(7000);
    const auto input = testsupport::random_input(c, g);
    const auto lanes = garble_inputs(n1.enc, input, base);
    const auto o1 = bundle_payload(evaluate(n1.gc, lanes, 1));
    const auto ohw = bundle_payload(evaluate(n1.gc, lanes, hw));
    if (o1 != ohw) return {"evaluation differs across thread counts"};
    return {};
}

// ----- Criterion 8: online latency envelope ----------------------------------

Failure criterion_latency() {
    const Circuit c = testsupport::model_a();
    const CrtBase base = crt_base(c.k);
    const GarbledNetwork net = garble(c, seed_from_string("c8c8"));
    auto g = testsupport::rng(8000);
    const auto input = testsupport::random_input(c, g);

    const auto t0 = std::chrono::steady_clock::now();
    const auto lanes = garble_inputs(net.enc, input, base);
    const double t_enc = seconds_since(t0);
    const auto t1 = std::chrono::steady_clock::now();
    const auto out = evaluate(net.gc, lanes);
    const double t_eval = seconds_since(t1);
    const auto t2 = std::chrono::steady_clock::now();
    const auto result = decode_outputs(net.dec, out, base);
    const double t_dec = seconds_since(t2);
    const double online = t_enc + t_eval + t_dec;

    if (result != circuit_plain_forward(c, input, base))
        return {"online result mismatched the plain forward pass"};

    static const char* kind_names[] = {"?", "dense", "conv2d", "relu", "sign",
                                       "flatten"};
    std::printf("       Model-A online phase: encode %.1f ms, evaluate %.1f "
                "ms, decode %.1f ms\n",
                t_enc * 1e3, t_eval * 1e3, t_dec * 1e3);
    for (std::size_t i = 0; i < c.layers.size(); ++i) {
        const std::uint64_t cts =
            net.gc.layer_ct_base[i + 1] - net.gc.layer_ct_base[i];
        std::printf("       layer %zu %-7s %10llu ciphertexts (%.1f%%)\n", i,
                    kind_names[static_cast<int>(c.layers[i].kind)],
                    static_cast<unsigned long long>(cts),
                    100.0 * static_cast<double>(cts) /
                        static_cast<double>(net.gc.cts.size()));
    }
    if (online >= 2.0)
        return {fmt("online phase took %.2f s (budget 2 s)", online)};
    return {};
}

// ----- Criterion 9: accuracy/speed sweep -------------------------------------

Failure criterion_sweep() {
    const CrtBase base = crt_base(3);
    std::uint64_t prev = 0;
    bool first = true;
    for (std::size_t i = 0; i < std::size(oracle::kSweepGridM); ++i) {
        const auto m = static_cast<mrs_val_t>(oracle::kSweepGridM[i]);
        const SignAccuracy acc =
            measure_sign_accuracy(base, MixedRadixSpec{{m}});
        if (!acc.exhaustive || acc.total != 30)
            return {fmt("M=%d sweep was not exhaustive", m)};
        if (!first && acc.correct > prev)
            return {fmt("accuracy increased when M dropped to %d", m)};
        if (m == 46 && acc.correct != 30)
            return {fmt("M=46 classified %llu/30",
                        static_cast<unsigned long long>(acc.correct))};
        prev = acc.correct;
        first = false;
    }
    return {};
}

// ----- Harness ---------------------------------------------------------------

struct Criterion {
    const char* name;
    double budget_s;  // 0 = no per-criterion budget
    std::function<Failure()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"1. garbled gadgets match their plaintext semantics", 120.0,
         criterion_gadgets},
        {"2. approximated sign is exact whenever M > k*P/2", 1.0,
         criterion_sign_bound},
        {"3. ciphertext costs match the closed-form counts", 10.0,
         criterion_costs},
        {"4. garbled inference equals plain inference on models A/C/D", 0.0,
         criterion_end_to_end},
        {"5. one online round at the expected communication volume", 30.0,
         criterion_protocol_comm},
        {"6. tampered garbled outputs are rejected", 0.0,
         criterion_authenticity},
        {"7. garbling and evaluation are thread-count deterministic", 0.0,
         criterion_determinism},
        {"8. Model-A online phase finishes under two seconds", 0.0,
         criterion_latency},
        {"9. sign accuracy is monotone in M and exact at M=46", 0.0,
         criterion_sweep},
    };

    int failures = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Failure f;
        try {
            f = cr.body();
        } catch (const std::exception& e) {
            f.detail = std::string("exception: ") + e.what();
        }
        const double dt = seconds_since(t0);
        if (!f && cr.budget_s > 0.0 && dt > cr.budget_s)
            f.detail = fmt("took %.1f s, budget %.0f s", dt, cr.budget_s);
        if (f) {
            ++failures;
            std::printf("[FAIL] %s — %s\n", cr.name, f.detail.c_str());
        } else {
            std::printf("[PASS] %s (%.1f s)\n", cr.name, dt);
        }
        std::fflush(stdout);
    }
    if (failures) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
