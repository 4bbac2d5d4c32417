#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dash/circuit.hpp"
#include "dash/garble.hpp"
#include "dash/prf.hpp"

namespace dash {

// ----- Framing --------------------------------------------------------------
//
// frame = length u32 | type u8 | session_id u128 | payload
// length covers everything after itself (17 + payload bytes), little-endian.

enum class FrameType : std::uint8_t {
    ModelUpload = 1,    // model owner → garbler: quantized circuit
    GcTransfer = 2,     // garbler → evaluator: gNN (offline)
    InputUpload = 3,    // input owner → garbler: plain 16-bit inputs
    GarbledInput = 4,   // garbler → evaluator: gIn (online)
    GarbledOutput = 5,  // evaluator → garbler: gOut (online)
    Result = 6,         // result owner ↔ garbler: empty = request, else i64s
    Error = 7,
};

struct Frame {
    FrameType type = FrameType::Error;
    u128 session = 0;
    std::vector<std::uint8_t> payload;
};

inline constexpr std::size_t kMaxFramePayload = std::size_t{1} << 30;

std::vector<std::uint8_t> encode_frame(const Frame& f);

// Incremental frame parser for byte streams; throws ProtocolError on
// oversized or malformed frames.
class FrameDecoder {
  public:
    void feed(std::span<const std::uint8_t> data);
    std::optional<Frame> next();

  private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

// ----- Payload codecs -------------------------------------------------------

enum class ErrorCode : std::uint8_t {
    Protocol = 1,
    Data = 2,
    Authenticity = 3,
};

std::vector<std::uint8_t> encode_error(ErrorCode code,
                                       const std::string& message);
std::pair<ErrorCode, std::string> decode_error(
    std::span<const std::uint8_t> payload);

// MODEL_UPLOAD: input-owner count (u16) followed by the quantized circuit.
std::vector<std::uint8_t> encode_model_upload(const Circuit& c,
                                              std::uint16_t owners);
std::pair<Circuit, std::uint16_t> decode_model_upload(
    std::span<const std::uint8_t> payload);

// INPUT_UPLOAD: owner u16 | offset u32 | count u32 | i16 per element.
// Plain inputs ride a 16-bit type; quantized values must fit it.
struct InputUpload {
    std::uint16_t owner = 0;
    std::uint32_t offset = 0;
    std::vector<q_val_t> values;
};
std::vector<std::uint8_t> encode_input_upload(std::uint16_t owner,
                                              std::uint32_t offset,
                                              std::span<const q_val_t> values);
InputUpload decode_input_upload(std::span<const std::uint8_t> payload);

// RESULT: i64 per output element (empty payload = request).
std::vector<std::uint8_t> encode_result(std::span<const q_val_t> values);
std::vector<q_val_t> decode_result(std::span<const std::uint8_t> payload);

// ----- Communication accounting ---------------------------------------------

// Online bytes per inference: garbled wires are k·128 bits per element;
// plain inputs 16-bit, plain outputs 64-bit.
struct CommVolume {
    std::uint64_t garbled_in = 0;
    std::uint64_t garbled_out = 0;
    std::uint64_t plain_in = 0;
    std::uint64_t plain_out = 0;
    std::uint64_t online_bytes() const {
        return garbled_in + garbled_out + plain_in + plain_out;
    }
    // The flat protocol-overhead model: ×2.
    std::uint64_t with_overhead() const { return 2 * online_bytes(); }
};
CommVolume comm_volume(int k, std::size_t in_size, std::size_t out_size);

// ----- Frame traces ---------------------------------------------------------

enum class Edge : std::uint8_t {
    ClientToGarbler = 1,
    GarblerToClient = 2,
    GarblerToEvaluator = 3,
    EvaluatorToGarbler = 4,
};

struct TraceEntry {
    Edge edge;
    FrameType type;
    std::size_t payload_bytes;
};
using FrameTrace = std::vector<TraceEntry>;

// ----- Services -------------------------------------------------------------
//
// Transport-independent session state machines; the TCP servers below and the
// in-process loopback both drive these. Methods throw ProtocolError /
// DataError / AuthenticityError; the frame dispatchers convert exceptions
// into ERROR frames.

enum class Destination : std::uint8_t { Reply = 1, Evaluator = 2 };

struct Outbound {
    Destination dest;
    Frame frame;
};

struct GarblerConfig {
    int threads = 0;
    bool use_fixed_seed = false;  // tests / DASH_SEED; default fresh per session
    Seed seed{};
};

// The trusted garbling device: owns e and d, never ships them.
class GarblerService {
  public:
    explicit GarblerService(GarblerConfig cfg = {});

    // Dispatch any client/evaluator frame. Exceptions become ERROR frames
    // addressed to the sender.
    std::vector<Outbound> handle(const Frame& f);

    bool session_done(u128 session) const;

  private:
    enum class Phase { InputsPending, AwaitingOutput, Done, Failed };
    struct Session {
        Phase phase = Phase::InputsPending;
        CrtBase base;
        GarbledCircuit gc;  // retained only until transfer; cleared after
        EncodingInfo enc;
        DecodingInfo dec;
        dim_t out_shape;
        std::uint16_t owners = 0;
        std::vector<q_val_t> inputs;
        std::vector<bool> filled;
        std::size_t filled_count = 0;
        std::vector<q_val_t> result;
        std::string error;
        ErrorCode error_code = ErrorCode::Protocol;
    };

    Outbound on_model_upload(const Frame& f);
    std::optional<Outbound> on_input_upload(const Frame& f);
    void on_garbled_output(const Frame& f);
    Outbound on_result_request(const Frame& f);

    GarblerConfig cfg_;
    mutable std::mutex mu_;
    std::map<u128, Session> sessions_;
};

// The untrusted inference device: holds gNN only; single-use per session.
class EvaluatorService {
  public:
    explicit EvaluatorService(int threads = 0);

    // GC_TRANSFER stores the circuit (no reply); GARBLED_INPUT evaluates and
    // replies GARBLED_OUTPUT. A second GARBLED_INPUT for a session is
    // rejected (garbled circuits are single-use). Exceptions become ERROR.
    std::optional<Frame> handle(const Frame& f);

    // Instrumentation: bytes of per-session state (a function of gNN size
    // and input dimension only).
    std::size_t session_memory(u128 session) const;

  private:
    struct Session {
        GarbledCircuit gc;
        bool used = false;
    };
    int threads_;
    mutable std::mutex mu_;
    std::map<u128, Session> sessions_;
};

// ----- In-process loopback ---------------------------------------------------

struct LocalRunResult {
    std::vector<q_val_t> outputs;
    FrameTrace trace;
};

// Drives both services through the full five-role workflow in-process:
// model upload, GC transfer, `owners` input uploads partitioning the input
// vector evenly, one online round, result fetch. Inputs are pre-quantized.
LocalRunResult run_local_protocol(const Circuit& quantized,
                                  std::span<const q_val_t> inputs,
                                  std::uint16_t owners,
                                  const GarblerConfig& gcfg,
                                  int eval_threads = 0);

// ----- TCP servers and clients ----------------------------------------------

// Blocking servers; accept loops run until the process is terminated.
// The garbler connects out to the evaluator for GC_TRANSFER and the online
// round. Channel encryption is left to the deployment (see docs).
[[noreturn]] void serve_garbler(const std::string& bind_host,
                                std::uint16_t port,
                                const std::string& evaluator_host,
                                std::uint16_t evaluator_port,
                                const GarblerConfig& cfg);
[[noreturn]] void serve_evaluator(const std::string& bind_host,
                                  std::uint16_t port, int threads);

// Client side: uploads the model and inputs to a garbler, polls the result.
std::vector<q_val_t> remote_infer(const std::string& garbler_host,
                                  std::uint16_t port, const Circuit& quantized,
                                  std::span<const q_val_t> inputs,
                                  std::uint16_t owners = 1);

}  // namespace dash
