#include "dash/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dash/errors.hpp"

namespace dash {

namespace {

using nlohmann::json;

Layer layer_from_json(const json& j, std::size_t index) {
    const auto fail = [index](const std::string& what) -> DataError {
        return DataError("model layer " + std::to_string(index) + ": " + what);
    };
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw fail("missing \"type\"");
    const std::string type = j["type"].get<std::string>();
    Layer l;
    if (type == "flatten") {
        l.kind = LayerKind::Flatten;
    } else if (type == "relu") {
        l.kind = LayerKind::ReLU;
    } else if (type == "sign") {
        l.kind = LayerKind::SignAct;
    } else if (type == "dense") {
        l.kind = LayerKind::Dense;
        if (!j.contains("in") || !j.contains("out"))
            throw fail("dense needs \"in\" and \"out\"");
        l.in_dim = j["in"].get<std::uint32_t>();
        l.out_dim = j["out"].get<std::uint32_t>();
        if (l.in_dim == 0 || l.out_dim == 0) throw fail("zero dense dimension");
    } else if (type == "conv2d") {
        l.kind = LayerKind::Conv2d;
        for (const char* f : {"in_channels", "out_channels", "filter", "stride"})
            if (!j.contains(f))
                throw fail(std::string("conv2d needs \"") + f + "\"");
        l.in_ch = j["in_channels"].get<std::uint32_t>();
        l.out_ch = j["out_channels"].get<std::uint32_t>();
        l.filter = j["filter"].get<std::uint32_t>();
        l.stride = j["stride"].get<std::uint32_t>();
        if (l.in_ch == 0 || l.out_ch == 0 || l.filter == 0 || l.stride == 0)
            throw fail("zero conv2d parameter");
    } else {
        throw fail("unknown layer type \"" + type + "\"");
    }
    if (l.linear()) {
        l.private_weights = j.value("private", true);
        if (j.contains("weights")) {
            if (!j["weights"].is_array()) throw fail("\"weights\" not an array");
            l.weights = j["weights"].get<std::vector<wandb_t>>();
            if (l.weights.size() != l.weight_count())
                throw fail("expected " + std::to_string(l.weight_count()) +
                           " weights, got " + std::to_string(l.weights.size()));
        }
        if (j.contains("biases")) {
            if (!j["biases"].is_array()) throw fail("\"biases\" not an array");
            l.biases = j["biases"].get<std::vector<wandb_t>>();
            if (l.biases.size() != l.bias_count())
                throw fail("expected " + std::to_string(l.bias_count()) +
                           " biases, got " + std::to_string(l.biases.size()));
        }
    }
    return l;
}

json layer_to_json(const Layer& l) {
    json j;
    switch (l.kind) {
        case LayerKind::Flatten:
            j["type"] = "flatten";
            return j;
        case LayerKind::ReLU:
            j["type"] = "relu";
            return j;
        case LayerKind::SignAct:
            j["type"] = "sign";
            return j;
        case LayerKind::Dense:
            j["type"] = "dense";
            j["in"] = l.in_dim;
            j["out"] = l.out_dim;
            break;
        case LayerKind::Conv2d:
            j["type"] = "conv2d";
            j["in_channels"] = l.in_ch;
            j["out_channels"] = l.out_ch;
            j["filter"] = l.filter;
            j["stride"] = l.stride;
            break;
    }
    j["private"] = l.private_weights;
    if (!l.weights.empty()) j["weights"] = l.weights;
    if (!l.biases.empty()) j["biases"] = l.biases;
    return j;
}

}  // namespace

Circuit parse_model_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model parse error: ") + e.what());
    }
    try {
        if (!j.is_object()) throw DataError("model file is not a JSON object");
        if (j.value("format", std::string{}) != "dash-model")
            throw DataError("not a dash-model file (missing format field)");
        if (j.value("version", 0) != 1)
            throw DataError("unsupported model format version");
        if (!j.contains("input_shape") || !j["input_shape"].is_array())
            throw DataError("model needs an \"input_shape\" array");
        Circuit c;
        c.input_shape = j["input_shape"].get<dim_t>();
        if (c.input_shape.empty() || size_of(c.input_shape) == 0)
            throw DataError("empty input shape");
        if (!j.contains("layers") || !j["layers"].is_array())
            throw DataError("model needs a \"layers\" array");
        std::size_t index = 0;
        for (const auto& lj : j["layers"])
            c.layers.push_back(layer_from_json(lj, index++));
        circuit_shapes(c);  // throws DataError with the offending layer
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("model field error: ") + e.what());
    }
}

std::string model_to_json(const Circuit& c) {
    json j;
    j["format"] = "dash-model";
    j["version"] = 1;
    j["input_shape"] = c.input_shape;
    j["layers"] = json::array();
    for (const auto& l : c.layers) j["layers"].push_back(layer_to_json(l));
    return j.dump(2) + "\n";
}

Circuit load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_json(buf.str());
}

void save_model(const Circuit& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path.string());
    out << model_to_json(c);
    if (!out) throw DataError("write failed: " + path.string());
}

q_val_t dry_run_peak(const Circuit& quantized, const std::vector<double>& sample,
                     const CrtBase& base) {
    std::vector<q_val_t> values =
        quantize_input(sample, quantized.quant, base);
    q_val_t peak = 0;
    const auto update = [&peak](const std::vector<q_val_t>& v) {
        for (q_val_t x : v)
            peak = std::max(peak, x == INT64_MIN ? INT64_MAX : std::abs(x));
    };
    update(values);
    dim_t shape = quantized.input_shape;
    for (const auto& l : quantized.layers) {
        values = plain_forward(l, values, shape, base);
        shape = layer_out_shape(l, shape);
        update(values);
    }
    return peak;
}

QuantParams optimize_quantization(
    const Circuit& c, const std::vector<std::vector<double>>& samples,
    const CrtBase& base) {
    if (samples.empty())
        throw DataError("quantization needs at least one sample input");
    const std::size_t n_in = size_of(c.input_shape);
    for (const auto& s : samples)
        if (s.size() != n_in)
            throw DataError("sample size does not match the input shape");
    const q_val_t budget = max_signed(base) / 2;  // safety factor 2
    for (int e = 8; e >= -8; --e) {
        const double alpha = std::ldexp(1.0, e);
        Circuit trial = c;
        try {
            quantize_circuit(trial, alpha);
            bool ok = true;
            for (const auto& s : samples)
                if (dry_run_peak(trial, s, base) > budget) {
                    ok = false;
                    break;
                }
            if (ok) return QuantParams{alpha};
        } catch (const OverflowError&) {
            // grid point infeasible; keep shrinking alpha
        }
    }
    throw DataError(
        "no feasible quantization scale in [2^-8, 2^8] for this base");
}

// ----- Quantized-circuit container ------------------------------------------

std::vector<std::uint8_t> serialize_circuit(const Circuit& c) {
    ByteWriter w;
    write_file_header(w, FileKind::QuantizedModel);
    w.u8(static_cast<std::uint8_t>(c.k));
    w.u8(static_cast<std::uint8_t>(c.input_shape.size()));
    for (auto d : c.input_shape) w.u32(d);
    w.u64(std::bit_cast<std::uint64_t>(c.quant.alpha));
    w.u64(std::bit_cast<std::uint64_t>(c.sign_target));
    w.u16(static_cast<std::uint16_t>(c.layers.size()));
    for (const auto& l : c.layers) {
        w.u8(static_cast<std::uint8_t>(l.kind));
        w.u8(l.private_weights ? 1 : 0);
        w.u32(l.in_dim);
        w.u32(l.out_dim);
        w.u32(l.in_ch);
        w.u32(l.out_ch);
        w.u32(l.filter);
        w.u32(l.stride);
        w.u64(l.q_weights.size());
        for (auto v : l.q_weights) w.i64(v);
        w.u64(l.q_biases.size());
        for (auto v : l.q_biases) w.i64(v);
    }
    return w.take();
}

Circuit parse_circuit(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    read_file_header(r, FileKind::QuantizedModel);
    Circuit c;
    c.k = r.u8();
    if (c.k < 1 || c.k > kMaxCrtPrimes) throw DataError("bad base size");
    const std::uint8_t rank = r.u8();
    if (rank == 0 || rank > 8) throw DataError("bad input rank");
    c.input_shape.resize(rank);
    for (auto& d : c.input_shape) d = r.u32();
    c.quant.alpha = std::bit_cast<double>(r.u64());
    c.sign_target = std::bit_cast<double>(r.u64());
    const std::uint16_t n_layers = r.u16();
    for (std::uint16_t i = 0; i < n_layers; ++i) {
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
        const std::uint64_t nw = r.u64();
        if (nw != 0 && nw != l.weight_count())
            throw DataError("bad weight count");
        l.q_weights.resize(nw);
        for (auto& v : l.q_weights) v = r.i64();
        const std::uint64_t nb = r.u64();
        if (nb != 0 && nb != l.bias_count()) throw DataError("bad bias count");
        l.q_biases.resize(nb);
        for (auto& v : l.q_biases) v = r.i64();
        c.layers.push_back(std::move(l));
    }
    if (!r.done()) throw DataError("trailing bytes in quantized model");
    validate_circuit(c);
    return c;
}

void export_quantized(const Circuit& c, const std::filesystem::path& path) {
    const auto bytes = serialize_circuit(c);
    write_binary_file(path, bytes);
}

Circuit load_quantized(const std::filesystem::path& path) {
    const auto bytes = read_binary_file(path);
    return parse_circuit(bytes);
}

// ----- Artifact file helpers ------------------------------------------------

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (in.bad()) throw DataError("read failed: " + path.string());
    return data;
}

void write_binary_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

void save_garbled_circuit(const GarbledCircuit& gc,
                          const std::filesystem::path& path) {
    write_binary_file(path, serialize_garbled_circuit(gc));
}
GarbledCircuit load_garbled_circuit(const std::filesystem::path& path) {
    return parse_garbled_circuit(read_binary_file(path));
}
void save_encoding(const EncodingInfo& enc, const std::filesystem::path& path) {
    write_binary_file(path, serialize_encoding(enc));
}
EncodingInfo load_encoding(const std::filesystem::path& path) {
    return parse_encoding(read_binary_file(path));
}
void save_decoding(const DecodingInfo& dec, const std::filesystem::path& path) {
    write_binary_file(path, serialize_decoding(dec));
}
DecodingInfo load_decoding(const std::filesystem::path& path) {
    return parse_decoding(read_binary_file(path));
}
void save_bundle(FileKind kind, const std::vector<LabelTensor>& lanes,
                 const std::filesystem::path& path) {
    write_binary_file(path, serialize_bundle(kind, lanes));
}
std::vector<LabelTensor> load_bundle(FileKind kind,
                                     const std::filesystem::path& path) {
    return parse_bundle(kind, read_binary_file(path));
}

}  // namespace dash
