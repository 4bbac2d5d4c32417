// dash — garbled-circuit CNN inference over CRT-residue labels.
//
// Commands: garble, encode, evaluate, decode, infer, serve-garbler,
// serve-evaluator, bench, count. Exit codes: 0 ok, 2 usage, 3 data error,
// 4 authenticity error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dash/circuit.hpp"
#include "dash/errors.hpp"
#include "dash/garble.hpp"
#include "dash/model_io.hpp"
#include "dash/protocol.hpp"

namespace {

using namespace dash;

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file: " + path);
    std::vector<double> out;
    std::string tok;
    while (in) {
        const int c = in.get();
        if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t' ||
            c == EOF) {
            if (!tok.empty()) {
                try {
                    std::size_t used = 0;
                    const double v = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                    out.push_back(v);
                } catch (const std::exception&) {
                    throw DataError("bad number in " + path + ": \"" + tok +
                                    "\"");
                }
                tok.clear();
            }
        } else {
            tok.push_back(static_cast<char>(c));
        }
    }
    if (out.empty()) throw DataError("no values in input file: " + path);
    return out;
}

bool is_dash_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && magic[0] == 'D' && magic[1] == 'A' &&
           magic[2] == 'S' && magic[3] == 'H';
}

double parse_sign_accuracy(const std::string& s) {
    if (s == "full") return 1.0;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || v <= 0.0 || v > 1.0)
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("--sign-accuracy must be \"full\" or a fraction in "
                        "(0, 1]");
    }
}

// Loads a model (JSON or quantized container) and ensures it is quantized;
// "auto" alpha runs the grid search against the provided samples.
Circuit prepare_circuit(const std::string& model_path, int k,
                        const std::string& sign_accuracy,
                        const std::string& alpha_arg,
                        const std::vector<std::vector<double>>& samples) {
    if (is_dash_container(model_path)) {
        Circuit c = load_quantized(model_path);
        return c;
    }
    Circuit c = load_model(model_path);
    c.k = k;
    c.sign_target = parse_sign_accuracy(sign_accuracy);
    const CrtBase base = crt_base(k);
    double alpha = 0.0;
    if (alpha_arg == "auto") {
        if (samples.empty())
            throw DataError(
                "--alpha auto needs a sample input (the -i file or --samples)");
        alpha = optimize_quantization(c, samples, base).alpha;
    } else {
        try {
            std::size_t used = 0;
            alpha = std::stod(alpha_arg, &used);
            if (used != alpha_arg.size() || alpha <= 0.0)
                throw std::invalid_argument(alpha_arg);
        } catch (const std::exception&) {
            throw DataError("--alpha must be \"auto\" or a positive number");
        }
    }
    quantize_circuit(c, alpha);
    return c;
}

// For count/bench the ciphertext totals and timings depend only on layer
// shapes, so "auto" alpha quietly becomes 1.0 (no sample inputs needed).
Circuit prepare_structural(const std::string& model_path, int k,
                           const std::string& sign_accuracy,
                           const std::string& alpha_arg) {
    const std::string a = alpha_arg == "auto" ? "1.0" : alpha_arg;
    return prepare_circuit(model_path, k, sign_accuracy, a, {});
}

std::vector<q_val_t> prepare_inputs(const Circuit& c,
                                    const std::vector<double>& raw,
                                    bool already_quantized) {
    const CrtBase base = crt_base(c.k);
    if (raw.size() != size_of(c.input_shape))
        throw DataError("input has " + std::to_string(raw.size()) +
                        " values, model expects " +
                        std::to_string(size_of(c.input_shape)));
    std::vector<q_val_t> q(raw.size());
    if (already_quantized) {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const double v = raw[i];
            if (v != static_cast<double>(static_cast<q_val_t>(v)))
                throw DataError("--quantized input contains non-integers");
            q[i] = static_cast<q_val_t>(v);
        }
        return q;
    }
    return quantize_input(raw, c.quant, base);
}

// Closed-form ciphertext total from the layer dimensions and gadget cost
// formulas alone (no circuit traversal).
std::uint64_t closed_form_cts(const Circuit& c, const CrtBase& base,
                              const MixedRadixSpec* spec) {
    std::uint64_t sum_p = 0;
    for (auto p : base.primes) sum_p += p;
    const int k = base.k;
    std::uint64_t sign_cost = 0;
    if (spec != nullptr) {
        const std::uint64_t t = spec->radices.size();
        const std::uint64_t m1 = spec->radices[0];
        sign_cost = t * sum_p                          // digit projections
                    + mixed_radix_add_cost(k, *spec)   // garbled addition
                    + (m1 - 1)                         // comparison (GRR)
                    + sum_p + (k + 1)                  // exact zero test
                    + 4;                               // Z_2 AND half gate
    }
    std::uint64_t total = 0;
    dim_t shape = c.input_shape;
    for (const auto& l : c.layers) {
        const dim_t out = layer_out_shape(l, shape);
        const std::uint64_t n = size_of(out);
        switch (l.kind) {
            case LayerKind::Dense:
            case LayerKind::Conv2d:
                if (l.private_weights) {
                    const std::uint64_t window =
                        l.kind == LayerKind::Dense
                            ? l.in_dim
                            : std::uint64_t{l.in_ch} * l.filter * l.filter;
                    total += n * window * sum_p;
                }
                break;
            case LayerKind::ReLU: {
                std::uint64_t mm = 0;
                for (auto p : base.primes) mm += p + 2 + 1;
                total += n * (sign_cost + mm);
                break;
            }
            case LayerKind::SignAct:
                total += n * (sign_cost + 2 * std::uint64_t(k));
                break;
            case LayerKind::Flatten:
                break;
        }
        shape = out;
    }
    return total;
}

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::ReLU: return "relu";
        case LayerKind::SignAct: return "sign";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

int cmd_garble(const std::string& model, int k, const std::string& sign_acc,
               const std::string& alpha, const std::string& samples_path,
               const std::string& out_prefix, int threads) {
    std::vector<std::vector<double>> samples;
    if (!samples_path.empty()) samples.push_back(read_csv(samples_path));
    Circuit c = prepare_circuit(model, k, sign_acc, alpha, samples);
    const Seed seed = seed_from_env();
    const double t0 = now_ms();
    GarbledNetwork net = garble(c, seed, threads);
    const double t1 = now_ms();
    save_garbled_circuit(net.gc, out_prefix + ".gc");
    save_encoding(net.enc, out_prefix + ".enc");
    save_decoding(net.dec, out_prefix + ".dec");
    export_quantized(c, out_prefix + ".qm");
    std::cout << "garbled " << c.layers.size() << " layers, k=" << c.k
              << ", alpha=" << c.quant.alpha << "\n"
              << "ciphertexts: " << net.stats.ciphertexts << " ("
              << net.stats.ciphertext_bytes() << " bytes), wires: "
              << net.stats.wires << ", " << (t1 - t0) << " ms\n"
              << "wrote " << out_prefix << ".gc/.enc/.dec/.qm\n";
    return 0;
}

int cmd_encode(const std::string& enc_path, const std::string& input,
               bool quantized, double alpha, const std::string& out) {
    const EncodingInfo enc = load_encoding(enc_path);
    const CrtBase base = crt_base(enc.k);
    const std::vector<double> raw = read_csv(input);
    if (raw.size() != size_of(enc.shape))
        throw DataError("input size does not match the encoding info");
    std::vector<q_val_t> q(raw.size());
    if (quantized) {
        for (std::size_t i = 0; i < raw.size(); ++i)
            q[i] = static_cast<q_val_t>(raw[i]);
    } else {
        q = quantize_input(raw, QuantParams{alpha}, base);
    }
    save_bundle(FileKind::GarbledInput, garble_inputs(enc, q, base), out);
    std::cout << "wrote " << out << " (" << enc.k * raw.size()
              << " labels)\n";
    return 0;
}

int cmd_evaluate(const std::string& gc_path, const std::string& gin_path,
                 const std::string& out, int threads) {
    const GarbledCircuit gc = load_garbled_circuit(gc_path);
    const auto gin = load_bundle(FileKind::GarbledInput, gin_path);
    const double t0 = now_ms();
    const auto gout = evaluate(gc, gin, threads);
    const double t1 = now_ms();
    save_bundle(FileKind::GarbledOutput, gout, out);
    std::cout << "evaluated in " << (t1 - t0) << " ms; wrote " << out << "\n";
    return 0;
}

int cmd_decode(const std::string& dec_path, const std::string& gout_path) {
    const DecodingInfo dec = load_decoding(dec_path);
    const auto gout = load_bundle(FileKind::GarbledOutput, gout_path);
    const CrtBase base = crt_base(dec.k);
    const auto values = decode_outputs(dec, gout, base);
    for (auto v : values) std::cout << v << "\n";
    return 0;
}

int cmd_infer(const std::string& model, const std::string& input, int k,
              const std::string& sign_acc, const std::string& alpha,
              bool quantized, int threads, bool trace, int owners,
              const std::string& garbler_host, std::uint16_t garbler_port) {
    const std::vector<double> raw = read_csv(input);
    Circuit c = prepare_circuit(model, k, sign_acc, alpha, {{raw}});
    const CrtBase base = crt_base(c.k);
    const std::vector<q_val_t> q = prepare_inputs(c, raw, quantized);

    std::vector<q_val_t> out_values;
    if (!garbler_host.empty()) {
        out_values = remote_infer(garbler_host, garbler_port, c, q,
                                  static_cast<std::uint16_t>(owners));
    } else if (trace) {
        GarblerConfig gcfg;
        gcfg.threads = threads;
        const char* env = std::getenv("DASH_SEED");
        if (env != nullptr) {
            gcfg.use_fixed_seed = true;
            gcfg.seed = seed_from_string(env);
        }
        const double t0 = now_ms();
        LocalRunResult run = run_local_protocol(
            c, q, static_cast<std::uint16_t>(owners), gcfg, threads);
        const double t1 = now_ms();
        out_values = run.outputs;
        std::cout << "frame trace (" << (t1 - t0) << " ms):\n";
        const auto edge_name = [](Edge e) {
            switch (e) {
                case Edge::ClientToGarbler: return "client  -> garbler  ";
                case Edge::GarblerToClient: return "garbler -> client   ";
                case Edge::GarblerToEvaluator: return "garbler -> evaluator";
                case Edge::EvaluatorToGarbler: return "evaluator -> garbler";
            }
            return "?";
        };
        const auto type_name = [](FrameType t) {
            switch (t) {
                case FrameType::ModelUpload: return "MODEL_UPLOAD";
                case FrameType::GcTransfer: return "GC_TRANSFER";
                case FrameType::InputUpload: return "INPUT_UPLOAD";
                case FrameType::GarbledInput: return "GARBLED_INPUT";
                case FrameType::GarbledOutput: return "GARBLED_OUTPUT";
                case FrameType::Result: return "RESULT";
                case FrameType::Error: return "ERROR";
            }
            return "?";
        };
        for (const auto& e : run.trace)
            std::cout << "  " << edge_name(e.edge) << "  " << type_name(e.type)
                      << "  " << e.payload_bytes << " bytes\n";
        const CommVolume v = comm_volume(c.k, size_of(c.input_shape),
                                         size_of(circuit_shapes(c).back()));
        std::cout << "online volume: " << v.online_bytes() << " bytes ("
                  << v.with_overhead() << " with protocol overhead)\n";
    } else {
        const Seed seed = seed_from_env();
        const double t0 = now_ms();
        GarbledNetwork net = garble(c, seed, threads);
        const double t1 = now_ms();
        const auto gin = garble_inputs(net.enc, q, base);
        const auto gout = evaluate(net.gc, gin, threads);
        out_values = decode_outputs(net.dec, gout, base);
        const double t2 = now_ms();
        std::cerr << "offline (garble) " << (t1 - t0) << " ms, online "
                  << (t2 - t1) << " ms\n";
    }

    const double scale = circuit_output_scale(c, c.quant.alpha);
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < out_values.size(); ++i)
        if (out_values[i] > out_values[argmax]) argmax = i;
    std::cout << "logits:";
    for (auto v : out_values) std::cout << " " << (v / scale);
    std::cout << "\nargmax: " << argmax << "\n";
    return 0;
}

int cmd_count(const std::string& model, int k, const std::string& sign_acc,
              const std::string& alpha) {
    Circuit c = prepare_structural(model, k, sign_acc, alpha);
    const CrtBase base = crt_base(c.k);
    SignContext sign;
    const bool needs_sign = circuit_needs_sign(c);
    if (needs_sign) sign = make_sign_context(base, c.sign_target);
    const CountCtx measured =
        count_circuit(c, base, needs_sign ? &sign.plan : nullptr);
    const std::uint64_t closed =
        closed_form_cts(c, base, needs_sign ? &sign.spec : nullptr);

    dim_t shape = c.input_shape;
    LayerEnv env;
    env.base = &base;
    env.plan = needs_sign ? &sign.plan : nullptr;
    std::cout << "layer      ciphertexts\n";
    for (const auto& l : c.layers) {
        CountCtx one;
        count_layer(l, shape, env, one);
        std::printf("%-8s  %12llu\n", kind_name(l.kind),
                    static_cast<unsigned long long>(one.cts));
        shape = layer_out_shape(l, shape);
    }
    std::cout << "closed-form total: " << closed
              << "\nmeasured total:    " << measured.cts << "\n";
    if (closed != measured.cts) {
        std::cout << "MISMATCH\n";
        return 3;
    }
    std::cout << "match\n";
    return 0;
}

int cmd_bench(const std::string& model, int k, const std::string& sign_acc,
              const std::string& alpha, int threads, int repeat) {
    Circuit c = prepare_structural(model, k, sign_acc, alpha);
    const CrtBase base = crt_base(c.k);
    SignContext sign;
    const bool needs_sign = circuit_needs_sign(c);
    if (needs_sign) sign = make_sign_context(base, c.sign_target);
    const SignPlan* plan = needs_sign ? &sign.plan : nullptr;

    const Seed seed = seed_from_env();
    const LabelPrf prf(seed);
    const CountCtx totals = count_circuit(c, base, plan);
    OffsetSet offsets;
    for (int m = 2; m <= kMaxModulus; ++m)
        if (totals.moduli[m]) offsets.ensure(static_cast<crt_val_t>(m), prf);
    std::vector<Label> zeros;
    for (int i = 0; i < base.k; ++i)
        zeros.push_back(prf.label(i, base.primes[i]));

    const std::size_t n_in = size_of(c.input_shape);
    std::vector<LabelTensor> bases, active;
    for (int i = 0; i < base.k; ++i) {
        LabelTensor lane(base.primes[i], c.input_shape);
        for (std::size_t e = 0; e < n_in; ++e)
            lane.set(e, prf.label(base.k + e * base.k + i, base.primes[i]));
        bases.push_back(lane);
        active.push_back(lane);  // inputs fixed to zero: active = base
    }

    LayerEnv genv;
    genv.base = &base;
    genv.plan = plan;
    genv.tables = needs_sign ? &sign.tables : nullptr;
    genv.zeros = &zeros;
    genv.prf = &prf;
    genv.offsets = &offsets;
    genv.threads = threads;
    LayerEnv eenv;
    eenv.base = &base;
    eenv.plan = plan;
    eenv.zeros = &zeros;
    eenv.threads = threads;

    const auto layout = circuit_layout(c, base, plan, input_wire_count(c));
    nlohmann::json layers = nlohmann::json::array();
    dim_t shape = c.input_shape;
    double garble_total = 0, eval_total = 0;
    for (std::size_t li = 0; li < c.layers.size(); ++li) {
        const Layer& l = c.layers[li];
        CountCtx one;
        count_layer(l, shape, {.base = &base, .plan = plan}, one);
        double tg = 0, te = 0;
        std::vector<LabelTensor> next_bases, next_active;
        for (int r = 0; r < repeat; ++r) {
            std::vector<u128> cts;
            const double a = now_ms();
            next_bases = garble_layer(l, bases, genv, layout[li].gate,
                                      layout[li].wire, cts);
            const double b = now_ms();
            next_active = eval_layer(l, active, eenv, layout[li].gate, cts);
            const double d = now_ms();
            tg += b - a;
            te += d - b;
        }
        tg /= repeat;
        te /= repeat;
        garble_total += tg;
        eval_total += te;
        layers.push_back({{"index", li},
                          {"kind", kind_name(l.kind)},
                          {"ciphertexts", one.cts},
                          {"ciphertext_bytes", one.cts * 16},
                          {"garble_ms", tg},
                          {"eval_ms", te}});
        bases = std::move(next_bases);
        active = std::move(next_active);
        shape = layer_out_shape(l, shape);
    }
    nlohmann::json out{{"model", model},
                       {"k", c.k},
                       {"threads", threads},
                       {"repeat", repeat},
                       {"layers", layers},
                       {"total_ciphertexts", totals.cts},
                       {"garble_ms", garble_total},
                       {"eval_ms", eval_total}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "dash: private CNN inference with arithmetic garbled circuits"};
    app.require_subcommand(1);

    std::string model, input, out_prefix = "net", enc_path, gc_path, gin_path,
                gout_path, dec_path, out_file, samples_path;
    std::string sign_acc = "full", alpha = "auto";
    std::string bind_host = "127.0.0.1", eval_host = "127.0.0.1";
    std::uint16_t port = 7700, eval_port = 7701;
    int k = 8, threads = 0, repeat = 3, owners = 1;
    bool quantized = false, trace = false;

    auto* g = app.add_subcommand("garble", "garble a model into gc/enc/dec");
    g->add_option("-m,--model", model, "model file (JSON or quantized)")
        ->required();
    g->add_option("-o,--output", out_prefix, "output path prefix");
    g->add_option("-k,--base", k, "CRT base size (1..16)");
    g->add_option("--sign-accuracy", sign_acc, "\"full\" or a fraction");
    g->add_option("--alpha", alpha, "quantization scale or \"auto\"");
    g->add_option("--samples", samples_path, "sample input CSV for auto alpha");
    g->add_option("--threads", threads, "thread cap (0 = all)");

    auto* e = app.add_subcommand("encode", "encode inputs into garbled labels");
    e->add_option("-e,--encoding", enc_path, "encoding info file")->required();
    e->add_option("-i,--input", input, "CSV input")->required();
    e->add_option("-o,--output", out_file, "garbled input file")->required();
    e->add_flag("-q,--quantized", quantized, "input is already integer");
    double enc_alpha = 1.0;
    e->add_option("--alpha", enc_alpha, "quantization scale for real input");

    auto* ev = app.add_subcommand("evaluate", "run a garbled circuit");
    ev->add_option("-g,--circuit", gc_path, "garbled circuit file")->required();
    ev->add_option("-i,--input", gin_path, "garbled input file")->required();
    ev->add_option("-o,--output", out_file, "garbled output file")->required();
    ev->add_option("--threads", threads, "thread cap (0 = all)");

    auto* d = app.add_subcommand("decode", "decode garbled outputs");
    d->add_option("-d,--decoding", dec_path, "decoding info file")->required();
    d->add_option("-i,--input", gout_path, "garbled output file")->required();

    auto* inf = app.add_subcommand("infer", "full local pipeline");
    inf->add_option("-m,--model", model, "model file")->required();
    inf->add_option("-i,--input", input, "CSV input")->required();
    inf->add_option("-k,--base", k, "CRT base size");
    inf->add_option("--sign-accuracy", sign_acc, "\"full\" or a fraction");
    inf->add_option("--alpha", alpha, "quantization scale or \"auto\"");
    inf->add_flag("-q,--quantized", quantized, "input is already integer");
    inf->add_option("--threads", threads, "thread cap (0 = all)");
    inf->add_flag("--trace", trace, "run through the protocol and print frames");
    inf->add_option("--owners", owners, "input owners for --trace/remote");
    std::string garbler_host;
    std::uint16_t garbler_port = 7700;
    inf->add_option("--garbler", garbler_host, "remote garbler host");
    inf->add_option("--garbler-port", garbler_port, "remote garbler port");

    auto* sg = app.add_subcommand("serve-garbler", "run the garbling service");
    sg->add_option("--bind", bind_host, "bind host");
    sg->add_option("--port", port, "bind port");
    sg->add_option("--evaluator", eval_host, "evaluator host");
    sg->add_option("--evaluator-port", eval_port, "evaluator port");
    sg->add_option("--threads", threads, "thread cap (0 = all)");

    auto* se = app.add_subcommand("serve-evaluator", "run the inference service");
    se->add_option("--bind", bind_host, "bind host");
    se->add_option("--port", port, "bind port");
    se->add_option("--threads", threads, "thread cap (0 = all)");

    auto* cnt = app.add_subcommand("count",
                                   "closed-form vs measured ciphertext counts");
    cnt->add_option("-m,--model", model, "model file")->required();
    cnt->add_option("-k,--base", k, "CRT base size");
    cnt->add_option("--sign-accuracy", sign_acc, "\"full\" or a fraction");
    cnt->add_option("--alpha", alpha, "quantization scale or \"auto\"");

    auto* b = app.add_subcommand("bench", "per-layer garble/eval timings");
    b->add_option("-m,--model", model, "model file")->required();
    b->add_option("-k,--base", k, "CRT base size");
    b->add_option("--sign-accuracy", sign_acc, "\"full\" or a fraction");
    b->add_option("--alpha", alpha, "quantization scale or \"auto\"");
    b->add_option("--threads", threads, "thread cap (0 = all)");
    b->add_option("--repeat", repeat, "timing repetitions");

    try {
        app.parse(argc, argv);
        if (g->parsed())
            return cmd_garble(model, k, sign_acc, alpha, samples_path,
                              out_prefix, threads);
        if (e->parsed())
            return cmd_encode(enc_path, input, quantized, enc_alpha, out_file);
        if (ev->parsed()) return cmd_evaluate(gc_path, gin_path, out_file,
                                              threads);
        if (d->parsed()) return cmd_decode(dec_path, gout_path);
        if (inf->parsed())
            return cmd_infer(model, input, k, sign_acc, alpha, quantized,
                             threads, trace, owners, garbler_host,
                             garbler_port);
        if (sg->parsed()) {
            GarblerConfig cfg;
            cfg.threads = threads;
            const char* env = std::getenv("DASH_SEED");
            if (env != nullptr) {
                cfg.use_fixed_seed = true;
                cfg.seed = seed_from_string(env);
            }
            serve_garbler(bind_host, port, eval_host, eval_port, cfg);
        }
        if (se->parsed()) serve_evaluator(bind_host, port, threads);
        if (cnt->parsed()) return cmd_count(model, k, sign_acc, alpha);
        if (b->parsed())
            return cmd_bench(model, k, sign_acc, alpha, threads, repeat);
        return 2;
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    } catch (const AuthenticityError& err) {
        std::cerr << "authenticity error: " << err.what() << "\n";
        return 4;
    } catch (const DataError& err) {
        std::cerr << "data error: " << err.what() << "\n";
        return 3;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    }
}
