#include "dash/gadgets.hpp"

namespace dash {

SignPlan make_sign_plan(const MixedRadixSpec& spec, int k) {
    validate_spec(spec);
    SignPlan plan;
    plan.spec = spec;
    plan.k = k;
    const int t = spec.t();
    if (k <= 1 || t == 1) return plan;  // no carry chain needed
    std::uint32_t carry_mod = 0;
    for (int j = t - 1; j >= 1; --j) {  // positions t .. 2, LSD first
        MrPosition pos;
        pos.m = spec.radices[j];
        pos.carry_in = carry_mod;
        pos.b_mod = static_cast<std::uint32_t>(k) * (pos.m - 1) +
                    (carry_mod ? carry_mod - 1 : 0) + 1;
        if (pos.b_mod > kMaxModulus)
            throw DataError("mixed-radix digit sum exceeds the modulus limit");
        const std::uint32_t maxcarry = (pos.b_mod - 1) / pos.m;
        pos.carry_out = maxcarry > 0 ? maxcarry + 1 : 0;
        carry_mod = pos.carry_out;
        plan.positions.push_back(pos);
    }
    plan.msd_carry = carry_mod;
    return plan;
}

std::uint64_t sign_gadget_cost(const CrtBase& base, const SignPlan& plan) {
    CountCtx ctx;
    std::vector<Label> x;
    x.reserve(base.k);
    for (auto p : base.primes) x.push_back(Label::zeros(p));
    t_approx_sign_bit(ctx, x, base, plan, nullptr);
    return ctx.cts;
}

std::uint64_t relu_cost_per_element(const CrtBase& base, const SignPlan& plan) {
    CountCtx ctx;
    std::vector<Label> x;
    x.reserve(base.k);
    for (auto p : base.primes) x.push_back(Label::zeros(p));
    const Label bit = t_approx_sign_bit(ctx, x, base, plan, nullptr);
    for (int i = 0; i < base.k; ++i) t_mm_half_gate(ctx, x[i], bit);
    return ctx.cts;
}

std::uint64_t sign_act_cost_per_element(const CrtBase& base,
                                        const SignPlan& plan) {
    CountCtx ctx;
    std::vector<Label> x;
    x.reserve(base.k);
    for (auto p : base.primes) x.push_back(Label::zeros(p));
    const Label bit = t_approx_sign_bit(ctx, x, base, plan, nullptr);
    for (int i = 0; i < base.k; ++i)
        t_proj(ctx, bit, base.primes[i], [](crt_val_t) { return crt_val_t{0}; });
    return ctx.cts;
}

}  // namespace dash
