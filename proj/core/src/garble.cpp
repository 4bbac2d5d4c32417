#include "dash/garble.hpp"

#include <bit>
#include <cstring>

#include "dash/errors.hpp"

namespace dash {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'S', 'H'};

}  // namespace

std::vector<LayerBases> circuit_layout(const Circuit& c, const CrtBase& base,
                                       const SignPlan* plan,
                                       std::uint64_t wire0) {
    std::vector<LayerBases> bases;
    bases.reserve(c.layers.size() + 1);
    LayerEnv env;
    env.base = &base;
    env.plan = plan;
    LayerBases cur{0, wire0, 0};
    dim_t shape = c.input_shape;
    for (const auto& l : c.layers) {
        bases.push_back(cur);
        CountCtx ctx;
        count_layer(l, shape, env, ctx);
        cur.gate += ctx.gates;
        cur.wire += ctx.wires;
        cur.ct += ctx.cts;
        shape = layer_out_shape(l, shape);
    }
    bases.push_back(cur);
    return bases;
}

std::uint64_t input_wire_count(const Circuit& c) {
    return static_cast<std::uint64_t>(c.k) *
           (1 + size_of(c.input_shape));  // k zero wires + k per element
}

namespace {

void write_shape(ByteWriter& w, const dim_t& shape) {
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) w.u32(d);
}

dim_t read_shape(ByteReader& r) {
    const std::uint8_t rank = r.u8();
    if (rank == 0 || rank > 8) throw DataError("bad tensor rank");
    dim_t shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
        d = r.u32();
        if (d == 0) throw DataError("zero tensor dimension");
        total *= d;
        if (total > (std::size_t{1} << 26))
            throw DataError("tensor too large");
    }
    return shape;
}

void write_label(ByteWriter& w, const Label& l) { w.u128v(compress(l)); }

Label read_label(ByteReader& r, crt_val_t m) {
    return decompress_mod(r.u128v(), m);
}

void write_layer(ByteWriter& w, const Layer& l) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u8(l.private_weights ? 1 : 0);
    w.u32(l.in_dim);
    w.u32(l.out_dim);
    w.u32(l.in_ch);
    w.u32(l.out_ch);
    w.u32(l.filter);
    w.u32(l.stride);
    const bool with_weights = l.linear() && !l.private_weights;
    w.u8(with_weights ? 1 : 0);
    if (with_weights) {
        w.u64(l.q_weights.size());
        for (auto v : l.q_weights) w.i64(v);
    }
}

Layer read_layer(ByteReader& r) {
    Layer l;
    const std::uint8_t kind = r.u8();
    if (kind < 1 || kind > 5) throw DataError("bad layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.private_weights = r.u8() != 0;
    l.in_dim = r.u32();
    l.out_dim = r.u32();
    l.in_ch = r.u32();
    l.out_ch = r.u32();
    l.filter = r.u32();
    l.stride = r.u32();
    if (r.u8() != 0) {
        const std::uint64_t n = r.u64();
        if (n != l.weight_count()) throw DataError("bad weight count");
        l.q_weights.resize(n);
        for (auto& v : l.q_weights) v = r.i64();
    }
    return l;
}

std::uint64_t double_bits(double v) { return std::bit_cast<std::uint64_t>(v); }
double bits_double(std::uint64_t v) { return std::bit_cast<double>(v); }

}  // namespace

void write_file_header(ByteWriter& w, FileKind kind) {
    w.bytes(kMagic, 4);
    w.u16(kFormatVersion);
    w.u8(static_cast<std::uint8_t>(kind));
}

void read_file_header(ByteReader& r, FileKind expected) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("bad file magic");
    const std::uint16_t version = r.u16();
    if (version != kFormatVersion)
        throw DataError("unsupported format version");
    const std::uint8_t kind = r.u8();
    if (kind != static_cast<std::uint8_t>(expected))
        throw DataError("unexpected file kind");
}

GarbledNetwork garble(const Circuit& circuit, const Seed& seed, int threads) {
    validate_circuit(circuit);
    const CrtBase base = crt_base(circuit.k);
    const int k = base.k;
    for (const auto& l : circuit.layers)
        if (l.linear() && l.q_weights.size() != l.weight_count())
            throw DataError("circuit must be quantized before garbling");

    SignContext sign;
    const bool needs_sign = circuit_needs_sign(circuit);
    if (needs_sign) sign = make_sign_context(base, circuit.sign_target);

    const LabelPrf prf(seed);
    const CountCtx totals =
        count_circuit(circuit, base, needs_sign ? &sign.plan : nullptr);
    OffsetSet offsets;
    for (int m = 2; m <= kMaxModulus; ++m)
        if (totals.moduli[m])
            offsets.ensure(static_cast<crt_val_t>(m), prf);

    // Wire ids: 0..k−1 the constant-zero wires, then k per input element.
    std::vector<Label> zero_bases;
    zero_bases.reserve(k);
    for (int i = 0; i < k; ++i)
        zero_bases.push_back(prf.label(i, base.primes[i]));

    const std::size_t n_in = size_of(circuit.input_shape);
    EncodingInfo enc;
    enc.k = k;
    enc.shape = circuit.input_shape;
    for (auto p : base.primes) enc.offsets.push_back(offsets.get(p));
    std::vector<LabelTensor> wires;
    wires.reserve(k);
    for (int i = 0; i < k; ++i) {
        LabelTensor lane(base.primes[i], circuit.input_shape);
        for (std::size_t e = 0; e < n_in; ++e)
            lane.set(e, prf.label(k + e * k + i, base.primes[i]));
        enc.bases.push_back(lane);
        wires.push_back(std::move(lane));
    }

    LayerEnv env;
    env.base = &base;
    env.plan = needs_sign ? &sign.plan : nullptr;
    env.tables = needs_sign ? &sign.tables : nullptr;
    env.zeros = &zero_bases;
    env.prf = &prf;
    env.offsets = &offsets;
    env.threads = threads;

    const std::vector<LayerBases> layout = circuit_layout(
        circuit, base, env.plan, input_wire_count(circuit));

    GarbledCircuit gc;
    gc.circuit = circuit;
    for (auto& l : gc.circuit.layers) {  // strip garbler-private parameters
        l.weights.clear();
        l.biases.clear();
        l.q_biases.clear();
        if (l.private_weights) l.q_weights.clear();
    }
    gc.sign_spec = needs_sign ? sign.spec : MixedRadixSpec{};
    gc.zero_labels = zero_bases;
    gc.cts.reserve(totals.cts);
    gc.layer_ct_base.reserve(circuit.layers.size() + 1);
    gc.seed_commitment = davies_meyer(
        [&] {
            u128 v = 0;
            for (int i = 15; i >= 0; --i) v = (v << 8) | seed[i];
            return v;
        }());

    for (std::size_t li = 0; li < circuit.layers.size(); ++li) {
        gc.layer_ct_base.push_back(layout[li].ct);
        wires = garble_layer(circuit.layers[li], wires, env, layout[li].gate,
                             layout[li].wire, gc.cts);
    }
    gc.layer_ct_base.push_back(layout.back().ct);
    if (gc.cts.size() != totals.cts)
        throw Error("garbling did not match its counting pass");

    DecodingInfo dec;
    dec.k = k;
    dec.shape = wires[0].shape();
    const std::size_t n_out = size_of(dec.shape);
    dec.table.resize(n_out * k);
    for (std::size_t e = 0; e < n_out; ++e)
        for (int i = 0; i < k; ++i) {
            const crt_val_t p = base.primes[i];
            const Label& r = offsets.get(p);
            std::vector<u128>& row = dec.table[e * k + i];
            row.reserve(p);
            Label cand = wires[i].get(e);
            for (crt_val_t v = 0; v < p; ++v) {
                row.push_back(compress(cand));
                label_add_into(cand, r);
            }
        }

    GarbledNetwork out;
    out.gc = std::move(gc);
    out.enc = std::move(enc);
    out.dec = std::move(dec);
    out.stats = {totals.cts, totals.gates,
                 totals.wires + input_wire_count(circuit)};
    return out;
}

std::vector<LabelTensor> garble_inputs(const EncodingInfo& enc,
                                       std::span<const q_val_t> values,
                                       const CrtBase& base) {
    if (enc.k != base.k) throw DataError("encoding info base mismatch");
    if (values.size() != size_of(enc.shape))
        throw DataError("input element count mismatch");
    std::vector<LabelTensor> out;
    out.reserve(enc.k);
    for (int i = 0; i < enc.k; ++i) {
        const crt_val_t p = base.primes[i];
        LabelTensor lane(p, enc.shape);
        for (std::size_t e = 0; e < values.size(); ++e) {
            const u128 x = encode_signed(values[e], base);
            const auto v = static_cast<crt_val_t>(x % p);
            Label l = enc.bases[i].get(e);
            label_add_scaled(l, enc.offsets[i], v);
            lane.set(e, l);
        }
        out.push_back(std::move(lane));
    }
    return out;
}

std::vector<LabelTensor> evaluate(const GarbledCircuit& gc,
                                  const std::vector<LabelTensor>& inputs,
                                  int threads) {
    const Circuit& c = gc.circuit;
    const CrtBase base = crt_base(c.k);
    if (static_cast<int>(inputs.size()) != c.k)
        throw DataError("garbled input lane count mismatch");
    for (int i = 0; i < c.k; ++i) {
        if (inputs[i].mod() != base.primes[i])
            throw DataError("garbled input lane modulus mismatch");
        if (inputs[i].shape() != c.input_shape)
            throw DataError("garbled input shape mismatch");
    }
    if (static_cast<int>(gc.zero_labels.size()) != c.k)
        throw DataError("zero-wire label count mismatch");

    const bool needs_sign = circuit_needs_sign(c);
    SignPlan plan;
    if (needs_sign) {
        if (gc.sign_spec.radices.empty())
            throw DataError("garbled circuit lacks a sign spec");
        plan = make_sign_plan(gc.sign_spec, c.k);
    }

    LayerEnv env;
    env.base = &base;
    env.plan = needs_sign ? &plan : nullptr;
    env.zeros = &gc.zero_labels;
    env.threads = threads;

    const std::vector<LayerBases> layout =
        circuit_layout(c, base, env.plan, input_wire_count(c));
    if (gc.layer_ct_base.size() != c.layers.size() + 1 ||
        gc.layer_ct_base.back() != gc.cts.size() ||
        layout.back().ct != gc.cts.size())
        throw DataError("ciphertext blob does not match the circuit");
    for (std::size_t li = 0; li + 1 < gc.layer_ct_base.size(); ++li)
        if (gc.layer_ct_base[li] != layout[li].ct)
            throw DataError("ciphertext blob does not match the circuit");

    std::vector<LabelTensor> wires = inputs;
    for (std::size_t li = 0; li < c.layers.size(); ++li) {
        const std::span<const u128> blob(
            gc.cts.data() + layout[li].ct, layout[li + 1].ct - layout[li].ct);
        wires = eval_layer(c.layers[li], wires, env, layout[li].gate, blob);
    }
    return wires;
}

std::vector<q_val_t> decode_outputs(const DecodingInfo& dec,
                                    const std::vector<LabelTensor>& outputs,
                                    const CrtBase& base) {
    if (dec.k != base.k) throw DataError("decoding info base mismatch");
    if (static_cast<int>(outputs.size()) != dec.k)
        throw DataError("output lane count mismatch");
    const std::size_t n = size_of(dec.shape);
    for (const auto& lane : outputs)
        if (lane.size() != n) throw DataError("output element count mismatch");
    std::vector<q_val_t> values(n);
    std::vector<crt_val_t> residues(dec.k);
    for (std::size_t e = 0; e < n; ++e) {
        for (int i = 0; i < dec.k; ++i) {
            const u128 cand = compress(outputs[i].get(e));
            const std::vector<u128>& row = dec.table[e * dec.k + i];
            int found = -1;
            for (std::size_t v = 0; v < row.size(); ++v)
                if (row[v] == cand) {
                    found = static_cast<int>(v);
                    break;
                }
            if (found < 0)
                throw AuthenticityError(
                    "output label not present in the decoding table");
            residues[i] = static_cast<crt_val_t>(found);
        }
        values[e] = decode_signed(crt_reconstruct(residues, base), base);
    }
    return values;
}

// ----- Serialization --------------------------------------------------------

std::vector<std::uint8_t> serialize_garbled_circuit(const GarbledCircuit& gc) {
    ByteWriter w;
    write_file_header(w, FileKind::GarbledCircuit);
    const Circuit& c = gc.circuit;
    w.u8(static_cast<std::uint8_t>(c.k));
    write_shape(w, c.input_shape);
    w.u64(double_bits(c.quant.alpha));
    w.u64(double_bits(c.sign_target));
    w.u8(static_cast<std::uint8_t>(gc.sign_spec.radices.size()));
    for (auto m : gc.sign_spec.radices) w.u16(m);
    w.u16(static_cast<std::uint16_t>(c.layers.size()));
    for (const auto& l : c.layers) write_layer(w, l);
    for (const auto& z : gc.zero_labels) write_label(w, z);
    w.u64(gc.layer_ct_base.size());
    for (auto b : gc.layer_ct_base) w.u64(b);
    w.u64(gc.cts.size());
    for (auto ct : gc.cts) w.u128v(ct);
    w.u128v(gc.seed_commitment);
    return w.take();
}

GarbledCircuit parse_garbled_circuit(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    read_file_header(r, FileKind::GarbledCircuit);
    GarbledCircuit gc;
    Circuit& c = gc.circuit;
    c.k = r.u8();
    if (c.k < 1 || c.k > kMaxCrtPrimes) throw DataError("bad base size");
    const CrtBase base = crt_base(c.k);
    c.input_shape = read_shape(r);
    c.quant.alpha = bits_double(r.u64());
    c.sign_target = bits_double(r.u64());
    const std::uint8_t t = r.u8();
    gc.sign_spec.radices.resize(t);
    for (auto& m : gc.sign_spec.radices) m = r.u16();
    if (t != 0) validate_spec(gc.sign_spec);
    const std::uint16_t n_layers = r.u16();
    c.layers.reserve(n_layers);
    for (std::uint16_t i = 0; i < n_layers; ++i)
        c.layers.push_back(read_layer(r));
    validate_circuit(c);
    for (int i = 0; i < c.k; ++i)
        gc.zero_labels.push_back(read_label(r, base.primes[i]));
    const std::uint64_t n_bases = r.u64();
    if (n_bases != c.layers.size() + 1)
        throw DataError("bad ciphertext index length");
    gc.layer_ct_base.resize(n_bases);
    for (auto& b : gc.layer_ct_base) b = r.u64();
    const std::uint64_t n_cts = r.u64();
    if (n_cts > (std::uint64_t{1} << 32))
        throw DataError("ciphertext blob too large");
    gc.cts.resize(n_cts);
    for (auto& ct : gc.cts) ct = r.u128v();
    gc.seed_commitment = r.u128v();
    if (!r.done()) throw DataError("trailing bytes in garbled circuit file");
    return gc;
}

std::vector<std::uint8_t> serialize_encoding(const EncodingInfo& enc) {
    ByteWriter w;
    write_file_header(w, FileKind::Encoding);
    w.u8(static_cast<std::uint8_t>(enc.k));
    write_shape(w, enc.shape);
    for (const auto& o : enc.offsets) write_label(w, o);
    for (const auto& lane : enc.bases) tensor_write(w, lane);
    return w.take();
}

EncodingInfo parse_encoding(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    read_file_header(r, FileKind::Encoding);
    EncodingInfo enc;
    enc.k = r.u8();
    if (enc.k < 1 || enc.k > kMaxCrtPrimes) throw DataError("bad base size");
    const CrtBase base = crt_base(enc.k);
    enc.shape = read_shape(r);
    for (int i = 0; i < enc.k; ++i)
        enc.offsets.push_back(read_label(r, base.primes[i]));
    for (int i = 0; i < enc.k; ++i) {
        LabelTensor lane = tensor_read(r);
        if (lane.mod() != base.primes[i] || lane.shape() != enc.shape)
            throw DataError("encoding lane mismatch");
        enc.bases.push_back(std::move(lane));
    }
    if (!r.done()) throw DataError("trailing bytes in encoding file");
    return enc;
}

std::vector<std::uint8_t> serialize_decoding(const DecodingInfo& dec) {
    ByteWriter w;
    write_file_header(w, FileKind::Decoding);
    w.u8(static_cast<std::uint8_t>(dec.k));
    write_shape(w, dec.shape);
    for (const auto& row : dec.table)
        for (auto cand : row) w.u128v(cand);
    return w.take();
}

DecodingInfo parse_decoding(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    read_file_header(r, FileKind::Decoding);
    DecodingInfo dec;
    dec.k = r.u8();
    if (dec.k < 1 || dec.k > kMaxCrtPrimes) throw DataError("bad base size");
    const CrtBase base = crt_base(dec.k);
    dec.shape = read_shape(r);
    const std::size_t n = size_of(dec.shape);
    dec.table.resize(n * dec.k);
    for (std::size_t e = 0; e < n; ++e)
        for (int i = 0; i < dec.k; ++i) {
            std::vector<u128>& row = dec.table[e * dec.k + i];
            row.resize(base.primes[i]);
            for (auto& cand : row) cand = r.u128v();
        }
    if (!r.done()) throw DataError("trailing bytes in decoding file");
    return dec;
}

std::vector<std::uint8_t> bundle_payload(
    const std::vector<LabelTensor>& lanes) {
    ByteWriter w;
    for (const auto& lane : lanes)
        for (std::size_t e = 0; e < lane.size(); ++e)
            w.u128v(compress(lane.get(e)));
    return w.take();
}

std::vector<LabelTensor> bundle_from_payload(
    std::span<const std::uint8_t> data, const CrtBase& base,
    const dim_t& shape) {
    const std::size_t n = size_of(shape);
    if (data.size() != static_cast<std::size_t>(base.k) * n * 16)
        throw DataError("wire payload size mismatch");
    ByteReader r(data);
    std::vector<LabelTensor> lanes;
    lanes.reserve(base.k);
    for (int i = 0; i < base.k; ++i) {
        LabelTensor lane(base.primes[i], shape);
        for (std::size_t e = 0; e < n; ++e)
            lane.set(e, decompress_mod(r.u128v(), base.primes[i]));
        lanes.push_back(std::move(lane));
    }
    return lanes;
}

std::vector<std::uint8_t> serialize_bundle(
    FileKind kind, const std::vector<LabelTensor>& lanes) {
    if (kind != FileKind::GarbledInput && kind != FileKind::GarbledOutput)
        throw DataError("not a bundle file kind");
    if (lanes.empty()) throw DataError("empty wire bundle");
    ByteWriter w;
    write_file_header(w, kind);
    w.u8(static_cast<std::uint8_t>(lanes.size()));
    write_shape(w, lanes[0].shape());
    const auto payload = bundle_payload(lanes);
    w.bytes(payload.data(), payload.size());
    return w.take();
}

std::vector<LabelTensor> parse_bundle(FileKind kind,
                                      std::span<const std::uint8_t> data) {
    ByteReader r(data);
    read_file_header(r, kind);
    const int k = r.u8();
    if (k < 1 || k > kMaxCrtPrimes) throw DataError("bad base size");
    const CrtBase base = crt_base(k);
    const dim_t shape = read_shape(r);
    const std::size_t n = size_of(shape);
    if (r.remaining() != static_cast<std::size_t>(k) * n * 16)
        throw DataError("wire payload size mismatch");
    std::vector<LabelTensor> lanes;
    lanes.reserve(k);
    for (int i = 0; i < k; ++i) {
        LabelTensor lane(base.primes[i], shape);
        for (std::size_t e = 0; e < n; ++e)
            lane.set(e, decompress_mod(r.u128v(), base.primes[i]));
        lanes.push_back(std::move(lane));
    }
    return lanes;
}

}  // namespace dash
