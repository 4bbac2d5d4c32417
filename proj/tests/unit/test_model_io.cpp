#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <test_models.hpp>

#include "dash/garble.hpp"
#include "dash/model_io.hpp"
#include "dash/prf.hpp"

using namespace dash;

namespace {

std::filesystem::path tmp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("dash_test_" + name);
}

void check_same_circuit(const Circuit& a, const Circuit& b) {
    CHECK(a.k == b.k);
    CHECK(a.input_shape == b.input_shape);
    CHECK(a.quant.alpha == b.quant.alpha);
    CHECK(a.sign_target == b.sign_target);
    REQUIRE(a.layers.size() == b.layers.size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const Layer& x = a.layers[i];
        const Layer& y = b.layers[i];
        CHECK(x.kind == y.kind);
        CHECK(x.private_weights == y.private_weights);
        CHECK(x.in_dim == y.in_dim);
        CHECK(x.out_dim == y.out_dim);
        CHECK(x.in_ch == y.in_ch);
        CHECK(x.out_ch == y.out_ch);
        CHECK(x.filter == y.filter);
        CHECK(x.stride == y.stride);
        CHECK(x.q_weights == y.q_weights);
        CHECK(x.q_biases == y.q_biases);
    }
}

Circuit real_model() {
    Circuit c;
    c.input_shape = {1, 4, 4};
    Layer conv;
    conv.kind = LayerKind::Conv2d;
    conv.private_weights = false;
    conv.in_ch = 1;
    conv.out_ch = 2;
    conv.filter = 2;
    conv.stride = 2;
    conv.weights = {0.1, -2.5, 0.75, 1.0, -0.3, 0.25, 2.0, -1.125};
    conv.biases = {0.5, -0.25};
    c.layers.push_back(conv);
    c.layers.push_back(testsupport::relu());
    c.layers.push_back(testsupport::flatten());
    Layer dense;
    dense.kind = LayerKind::Dense;
    dense.private_weights = true;
    dense.in_dim = 8;
    dense.out_dim = 3;
    for (int i = 0; i < 24; ++i) dense.weights.push_back(0.125 * i - 1.0);
    dense.biases = {1.5, 0.0, -3.25};
    c.layers.push_back(dense);
    c.layers.push_back(testsupport::sign_act());
    return c;
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("model JSON roundtrips real parameters exactly") {
    const Circuit c = real_model();
    const Circuit back = parse_model_json(model_to_json(c));
    CHECK(back.input_shape == c.input_shape);
    REQUIRE(back.layers.size() == c.layers.size());
    for (std::size_t i = 0; i < c.layers.size(); ++i) {
        CHECK(back.layers[i].kind == c.layers[i].kind);
        CHECK(back.layers[i].private_weights == c.layers[i].private_weights);
        CHECK(back.layers[i].weights == c.layers[i].weights);
        CHECK(back.layers[i].biases == c.layers[i].biases);
    }
    CHECK(back.layers[0].filter == 2);
    CHECK(back.layers[3].in_dim == 8);

    const auto f = tmp_path("model.json");
    save_model(c, f);
    const Circuit loaded = load_model(f);
    CHECK(loaded.layers.size() == c.layers.size());
    CHECK(loaded.layers[3].weights == c.layers[3].weights);
    std::filesystem::remove(f);
}

TEST_CASE("weights default to private when the field is omitted") {
    const Circuit a = parse_model_json(
        R"({"format":"dash-model","version":1,"input_shape":[2],
            "layers":[{"type":"dense","in":2,"out":1}]})");
    CHECK(a.layers[0].private_weights);
    const Circuit b = parse_model_json(
        R"({"format":"dash-model","version":1,"input_shape":[2],
            "layers":[{"type":"dense","in":2,"out":1,"private":false}]})");
    CHECK_FALSE(b.layers[0].private_weights);
}

TEST_CASE("model JSON diagnostics name the offending layer") {
    CHECK_THROWS_AS(parse_model_json("not json at all"), DataError);
    CHECK_THROWS_AS(parse_model_json(R"({"format":"other"})"), DataError);
    CHECK_THROWS_AS(
        parse_model_json(R"({"format":"dash-model","version":9})"), DataError);
    CHECK_THROWS_AS(
        parse_model_json(R"({"format":"dash-model","version":1,
            "input_shape":[],"layers":[]})"),
        DataError);

    try {
        parse_model_json(R"({"format":"dash-model","version":1,
            "input_shape":[2],
            "layers":[{"type":"dense","in":2,"out":3,"weights":[1,2,3]}]})");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("layer 0") != std::string::npos);
        CHECK(msg.find("expected 6 weights") != std::string::npos);
    }

    try {
        parse_model_json(R"({"format":"dash-model","version":1,
            "input_shape":[2],"layers":[{"type":"pool"}]})");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("unknown layer type") !=
              std::string::npos);
    }

    // Shape propagation failures surface at load time, not garble time.
    CHECK_THROWS_AS(
        parse_model_json(R"({"format":"dash-model","version":1,
            "input_shape":[2],
            "layers":[{"type":"dense","in":3,"out":1}]})"),
        DataError);
}

TEST_CASE("quantized container preserves the circuit byte for byte") {
    Circuit c = testsupport::model_tiny();
    c.layers[0].private_weights = true;  // cover private weights on disk
    c.quant.alpha = 2.0;
    c.sign_target = 0.99;
    const auto bytes = serialize_circuit(c);
    const Circuit back = parse_circuit(bytes);
    check_same_circuit(c, back);
    CHECK(serialize_circuit(back) == bytes);

    const auto f = tmp_path("model.qm");
    export_quantized(c, f);
    check_same_circuit(c, load_quantized(f));
    std::filesystem::remove(f);
}

TEST_CASE("container headers are strict") {
    const Circuit c = testsupport::model_tiny();
    auto bytes = serialize_circuit(c);

    auto bad_magic = bytes;
    bad_magic[0] ^= 0xff;
    CHECK_THROWS_AS(parse_circuit(bad_magic), DataError);

    auto bad_version = bytes;
    bad_version[4] = 0xfe;
    CHECK_THROWS_AS(parse_circuit(bad_version), DataError);

    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_AS(parse_circuit(truncated), DataError);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(parse_circuit(trailing), DataError);
}

TEST_CASE("binary file helpers roundtrip and report failures") {
    const auto f = tmp_path("blob.bin");
    const std::vector<std::uint8_t> data = {0, 1, 2, 254, 255};
    write_binary_file(f, data);
    CHECK(read_binary_file(f) == data);
    write_binary_file(f, std::vector<std::uint8_t>{});
    CHECK(read_binary_file(f).empty());
    std::filesystem::remove(f);
    CHECK_THROWS_AS(read_binary_file(f), DataError);
    CHECK_THROWS_AS(load_model(tmp_path("missing_dir/x.json")), DataError);
}

TEST_CASE("garbling artifacts roundtrip through their files") {
    const Circuit c = testsupport::model_tiny();
    const GarbledNetwork net = garble(c, seed_from_string("ab12"));

    const auto gc_file = tmp_path("net.gc");
    const auto enc_file = tmp_path("net.enc");
    const auto dec_file = tmp_path("net.dec");
    save_garbled_circuit(net.gc, gc_file);
    save_encoding(net.enc, enc_file);
    save_decoding(net.dec, dec_file);

    CHECK(serialize_garbled_circuit(load_garbled_circuit(gc_file)) ==
          serialize_garbled_circuit(net.gc));
    CHECK(serialize_encoding(load_encoding(enc_file)) ==
          serialize_encoding(net.enc));
    CHECK(serialize_decoding(load_decoding(dec_file)) ==
          serialize_decoding(net.dec));

    // Kind tags are not interchangeable.
    CHECK_THROWS_AS(load_encoding(dec_file), DataError);
    CHECK_THROWS_AS(load_garbled_circuit(enc_file), DataError);

    for (const auto& f : {gc_file, enc_file, dec_file})
        std::filesystem::remove(f);
}

TEST_CASE("label bundles roundtrip as files and raw payloads") {
    const Circuit c = testsupport::model_tiny();
    const CrtBase base = crt_base(c.k);
    const GarbledNetwork net = garble(c, seed_from_string("ab12"));
    auto g = testsupport::rng(3);
    const auto values = testsupport::random_input(c, g);
    const auto lanes = garble_inputs(net.enc, values, base);

    const auto bytes = serialize_bundle(FileKind::GarbledInput, lanes);
    const auto back = parse_bundle(FileKind::GarbledInput, bytes);
    REQUIRE(back.size() == lanes.size());
    for (std::size_t i = 0; i < lanes.size(); ++i)
        CHECK(back[i] == lanes[i]);
    CHECK_THROWS_AS(parse_bundle(FileKind::GarbledOutput, bytes), DataError);

    const auto payload = bundle_payload(lanes);
    CHECK(payload.size() ==
          static_cast<std::size_t>(base.k) * size_of(c.input_shape) * 16);
    const auto relanes = bundle_from_payload(payload, base, c.input_shape);
    for (std::size_t i = 0; i < lanes.size(); ++i)
        CHECK(relanes[i] == lanes[i]);

    const auto f = tmp_path("input.gin");
    save_bundle(FileKind::GarbledInput, lanes, f);
    const auto from_file = load_bundle(FileKind::GarbledInput, f);
    for (std::size_t i = 0; i < lanes.size(); ++i)
        CHECK(from_file[i] == lanes[i]);
    std::filesystem::remove(f);
}

}  // TEST_SUITE
