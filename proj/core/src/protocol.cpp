#include "dash/protocol.hpp"

#include <chrono>
#include <cstring>
#include <thread>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "dash/errors.hpp"
#include "dash/model_io.hpp"
#include "dash/serial.hpp"

namespace dash {

// ----- Framing --------------------------------------------------------------

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > kMaxFramePayload)
        throw ProtocolError("frame payload too large");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(17 + f.payload.size()));
    w.u8(static_cast<std::uint8_t>(f.type));
    w.u128v(f.session);
    w.bytes(f.payload.data(), f.payload.size());
    return w.take();
}

void FrameDecoder::feed(std::span<const std::uint8_t> data) {
    buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Frame> FrameDecoder::next() {
    if (buf_.size() - pos_ < 4) return std::nullopt;
    std::uint32_t length = 0;
    std::memcpy(&length, buf_.data() + pos_, 4);
    if (length < 17) throw ProtocolError("frame shorter than its header");
    if (length > 17 + kMaxFramePayload) throw ProtocolError("frame too large");
    if (buf_.size() - pos_ < 4 + static_cast<std::size_t>(length))
        return std::nullopt;
    ByteReader r({buf_.data() + pos_ + 4, length});
    Frame f;
    const std::uint8_t type = r.u8();
    if (type < 1 || type > 7) throw ProtocolError("unknown frame type");
    f.type = static_cast<FrameType>(type);
    f.session = r.u128v();
    f.payload.resize(length - 17);
    r.bytes(f.payload.data(), f.payload.size());
    pos_ += 4 + static_cast<std::size_t>(length);
    if (pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    } else if (pos_ > (std::size_t{1} << 20)) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<long>(pos_));
        pos_ = 0;
    }
    return f;
}

// ----- Payload codecs -------------------------------------------------------

std::vector<std::uint8_t> encode_error(ErrorCode code,
                                       const std::string& message) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(code));
    w.str(message);
    return w.take();
}

std::pair<ErrorCode, std::string> decode_error(
    std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    const std::uint8_t code = r.u8();
    if (code < 1 || code > 3) throw ProtocolError("bad error code");
    return {static_cast<ErrorCode>(code), r.str()};
}

std::vector<std::uint8_t> encode_model_upload(const Circuit& c,
                                              std::uint16_t owners) {
    ByteWriter w;
    w.u16(owners);
    const auto body = serialize_circuit(c);
    w.bytes(body.data(), body.size());
    return w.take();
}

std::pair<Circuit, std::uint16_t> decode_model_upload(
    std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    const std::uint16_t owners = r.u16();
    Circuit c = parse_circuit(payload.subspan(2));
    return {std::move(c), owners};
}

std::vector<std::uint8_t> encode_input_upload(
    std::uint16_t owner, std::uint32_t offset,
    std::span<const q_val_t> values) {
    ByteWriter w;
    w.u16(owner);
    w.u32(offset);
    w.u32(static_cast<std::uint32_t>(values.size()));
    for (q_val_t v : values) {
        if (v < INT16_MIN || v > INT16_MAX)
            throw DataError("plain input does not fit the 16-bit wire type");
        w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
    return w.take();
}

InputUpload decode_input_upload(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    InputUpload u;
    u.owner = r.u16();
    u.offset = r.u32();
    const std::uint32_t count = r.u32();
    if (static_cast<std::size_t>(count) * 2 != r.remaining())
        throw ProtocolError("input upload length mismatch");
    u.values.resize(count);
    for (auto& v : u.values)
        v = static_cast<std::int16_t>(r.u16());
    return u;
}

std::vector<std::uint8_t> encode_result(std::span<const q_val_t> values) {
    ByteWriter w;
    for (q_val_t v : values) w.i64(v);
    return w.take();
}

std::vector<q_val_t> decode_result(std::span<const std::uint8_t> payload) {
    if (payload.size() % 8 != 0)
        throw ProtocolError("result payload length not a multiple of 8");
    ByteReader r(payload);
    std::vector<q_val_t> out(payload.size() / 8);
    for (auto& v : out) v = r.i64();
    return out;
}

CommVolume comm_volume(int k, std::size_t in_size, std::size_t out_size) {
    CommVolume v;
    v.garbled_in = std::uint64_t{16} * k * in_size;   // k·128 bits per element
    v.garbled_out = std::uint64_t{16} * k * out_size;
    v.plain_in = std::uint64_t{2} * in_size;
    v.plain_out = std::uint64_t{8} * out_size;
    return v;
}

// ----- Garbler service ------------------------------------------------------

namespace {

Frame error_frame(u128 session, ErrorCode code, const std::string& msg) {
    return Frame{FrameType::Error, session, encode_error(code, msg)};
}

ErrorCode code_for(const Error& e) {
    if (dynamic_cast<const AuthenticityError*>(&e)) return ErrorCode::Authenticity;
    if (dynamic_cast<const DataError*>(&e)) return ErrorCode::Data;
    return ErrorCode::Protocol;
}

}  // namespace

GarblerService::GarblerService(GarblerConfig cfg) : cfg_(std::move(cfg)) {}

std::vector<Outbound> GarblerService::handle(const Frame& f) {
    try {
        switch (f.type) {
            case FrameType::ModelUpload:
                return {on_model_upload(f)};
            case FrameType::InputUpload: {
                auto out = on_input_upload(f);
                if (out) return {*std::move(out)};
                return {};
            }
            case FrameType::GarbledOutput:
                on_garbled_output(f);
                return {};
            case FrameType::Result:
                return {on_result_request(f)};
            case FrameType::Error: {
                const auto [code, msg] = decode_error(f.payload);
                std::lock_guard<std::mutex> lk(mu_);
                auto it = sessions_.find(f.session);
                if (it != sessions_.end()) {
                    it->second.phase = Phase::Failed;
                    it->second.error = msg;
                    it->second.error_code = code;
                }
                return {};
            }
            default:
                throw ProtocolError("unexpected frame type for garbler");
        }
    } catch (const Error& e) {
        return {{Destination::Reply,
                 error_frame(f.session, code_for(e), e.what())}};
    }
}

Outbound GarblerService::on_model_upload(const Frame& f) {
    auto [circuit, owners] = decode_model_upload(f.payload);
    if (owners == 0) throw ProtocolError("at least one input owner required");
    const std::size_t n_in = size_of(circuit.input_shape);
    if (owners > n_in)
        throw ProtocolError("more input owners than input elements");
    const Seed seed = cfg_.use_fixed_seed ? cfg_.seed : random_seed();
    GarbledNetwork net = garble(circuit, seed, cfg_.threads);
    const auto gc_bytes = serialize_garbled_circuit(net.gc);

    std::lock_guard<std::mutex> lk(mu_);
    if (sessions_.count(f.session))
        throw ProtocolError("session already exists");
    Session& s = sessions_[f.session];
    s.base = crt_base(circuit.k);
    s.enc = std::move(net.enc);
    s.dec = std::move(net.dec);
    s.out_shape = s.dec.shape;
    s.owners = owners;
    s.inputs.assign(n_in, 0);
    s.filled.assign(n_in, false);

    Frame out{FrameType::GcTransfer, f.session, {}};
    out.payload = gc_bytes;
    return {Destination::Evaluator, std::move(out)};
}

std::optional<Outbound> GarblerService::on_input_upload(const Frame& f) {
    const InputUpload u = decode_input_upload(f.payload);
    std::lock_guard<std::mutex> lk(mu_);
    auto it = sessions_.find(f.session);
    if (it == sessions_.end()) throw ProtocolError("unknown session");
    Session& s = it->second;
    if (s.phase != Phase::InputsPending)
        throw ProtocolError("inputs already complete for this session");
    if (u.owner >= s.owners) throw ProtocolError("input owner out of range");
    if (u.offset + u.values.size() > s.inputs.size() ||
        u.offset + u.values.size() < u.offset)
        throw ProtocolError("input range out of bounds");
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        if (s.filled[u.offset + i])
            throw ProtocolError("input element uploaded twice");
        s.filled[u.offset + i] = true;
        s.inputs[u.offset + i] = u.values[i];
    }
    s.filled_count += u.values.size();
    if (s.filled_count < s.inputs.size()) return std::nullopt;

    const auto gin = garble_inputs(s.enc, s.inputs, s.base);
    s.phase = Phase::AwaitingOutput;
    Frame out{FrameType::GarbledInput, f.session, bundle_payload(gin)};
    return Outbound{Destination::Evaluator, std::move(out)};
}

void GarblerService::on_garbled_output(const Frame& f) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = sessions_.find(f.session);
    if (it == sessions_.end()) throw ProtocolError("unknown session");
    Session& s = it->second;
    if (s.phase != Phase::AwaitingOutput)
        throw ProtocolError("no garbled output expected for this session");
    try {
        const auto lanes = bundle_from_payload(f.payload, s.base, s.out_shape);
        s.result = decode_outputs(s.dec, lanes, s.base);
        s.phase = Phase::Done;
    } catch (const Error& e) {
        s.phase = Phase::Failed;
        s.error = e.what();
        s.error_code = code_for(e);
    }
}

Outbound GarblerService::on_result_request(const Frame& f) {
    if (!f.payload.empty())
        throw ProtocolError("result frames to the garbler must be empty");
    std::lock_guard<std::mutex> lk(mu_);
    auto it = sessions_.find(f.session);
    if (it == sessions_.end()) throw ProtocolError("unknown session");
    const Session& s = it->second;
    switch (s.phase) {
        case Phase::Done:
            return {Destination::Reply,
                    Frame{FrameType::Result, f.session, encode_result(s.result)}};
        case Phase::Failed:
            return {Destination::Reply,
                    error_frame(f.session, s.error_code, s.error)};
        default:
            throw ProtocolError("result not ready");
    }
}

bool GarblerService::session_done(u128 session) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = sessions_.find(session);
    return it != sessions_.end() && (it->second.phase == Phase::Done ||
                                     it->second.phase == Phase::Failed);
}

// ----- Evaluator service ----------------------------------------------------

EvaluatorService::EvaluatorService(int threads) : threads_(threads) {}

std::optional<Frame> EvaluatorService::handle(const Frame& f) {
    try {
        switch (f.type) {
            case FrameType::GcTransfer: {
                GarbledCircuit gc = parse_garbled_circuit(f.payload);
                std::lock_guard<std::mutex> lk(mu_);
                if (sessions_.count(f.session))
                    throw ProtocolError("session already has a circuit");
                sessions_[f.session].gc = std::move(gc);
                return std::nullopt;  // same-connection ordering is the ack
            }
            case FrameType::GarbledInput: {
                std::unique_lock<std::mutex> lk(mu_);
                auto it = sessions_.find(f.session);
                if (it == sessions_.end())
                    throw ProtocolError("unknown session");
                if (it->second.used)
                    throw ProtocolError(
                        "garbled circuit already used (single-use)");
                it->second.used = true;
                const GarbledCircuit& gc = it->second.gc;
                lk.unlock();
                const CrtBase base = crt_base(gc.circuit.k);
                const auto gin =
                    bundle_from_payload(f.payload, base, gc.circuit.input_shape);
                const auto gout = evaluate(gc, gin, threads_);
                return Frame{FrameType::GarbledOutput, f.session,
                             bundle_payload(gout)};
            }
            default:
                throw ProtocolError("unexpected frame type for evaluator");
        }
    } catch (const Error& e) {
        return error_frame(f.session, code_for(e), e.what());
    }
}

std::size_t EvaluatorService::session_memory(u128 session) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = sessions_.find(session);
    if (it == sessions_.end()) return 0;
    const GarbledCircuit& gc = it->second.gc;
    return gc.cts.size() * 16 + gc.zero_labels.size() * 16 +
           std::size_t{16} * gc.circuit.k * size_of(gc.circuit.input_shape);
}

// ----- In-process loopback ---------------------------------------------------

LocalRunResult run_local_protocol(const Circuit& quantized,
                                  std::span<const q_val_t> inputs,
                                  std::uint16_t owners,
                                  const GarblerConfig& gcfg, int eval_threads) {
    if (inputs.size() != size_of(quantized.input_shape))
        throw DataError("input size does not match the model");
    if (owners == 0) throw DataError("at least one input owner required");
    GarblerService garbler(gcfg);
    EvaluatorService evaluator(eval_threads);
    const u128 session = make_u128(0x44415348u, 1);  // loopback session token
    LocalRunResult result;

    const auto to_evaluator = [&](Frame frame) {
        result.trace.push_back(
            {Edge::GarblerToEvaluator, frame.type, frame.payload.size()});
        auto reply = evaluator.handle(frame);
        while (reply) {
            result.trace.push_back({Edge::EvaluatorToGarbler, reply->type,
                                    reply->payload.size()});
            std::vector<Outbound> outs = garbler.handle(*reply);
            reply.reset();
            for (auto& o : outs)
                if (o.dest == Destination::Evaluator)
                    reply = std::move(o.frame);
        }
    };
    const auto to_garbler = [&](Frame frame) {
        result.trace.push_back(
            {Edge::ClientToGarbler, frame.type, frame.payload.size()});
        std::vector<Outbound> outs = garbler.handle(frame);
        std::vector<Frame> replies;
        for (auto& o : outs) {
            if (o.dest == Destination::Evaluator)
                to_evaluator(std::move(o.frame));
            else
                replies.push_back(std::move(o.frame));
        }
        return replies;
    };

    auto replies = to_garbler(
        Frame{FrameType::ModelUpload, session,
              encode_model_upload(quantized, owners)});
    for (const auto& r : replies)
        if (r.type == FrameType::Error)
            throw ProtocolError(decode_error(r.payload).second);

    const std::size_t n = inputs.size();
    const std::size_t chunk = n / owners, extra = n % owners;
    std::size_t offset = 0;
    for (std::uint16_t o = 0; o < owners; ++o) {
        const std::size_t count = chunk + (o < extra ? 1 : 0);
        replies = to_garbler(Frame{
            FrameType::InputUpload, session,
            encode_input_upload(o, static_cast<std::uint32_t>(offset),
                                inputs.subspan(offset, count))});
        for (const auto& r : replies)
            if (r.type == FrameType::Error)
                throw ProtocolError(decode_error(r.payload).second);
        offset += count;
    }

    replies = to_garbler(Frame{FrameType::Result, session, {}});
    if (replies.size() != 1) throw ProtocolError("no result reply");
    result.trace.push_back({Edge::GarblerToClient, replies[0].type,
                            replies[0].payload.size()});
    if (replies[0].type == FrameType::Error) {
        const auto [code, msg] = decode_error(replies[0].payload);
        if (code == ErrorCode::Authenticity) throw AuthenticityError(msg);
        if (code == ErrorCode::Data) throw DataError(msg);
        throw ProtocolError(msg);
    }
    result.outputs = decode_result(replies[0].payload);
    return result;
}

// ----- TCP plumbing ---------------------------------------------------------

namespace {

struct Fd {
    int fd = -1;
    Fd() = default;
    explicit Fd(int f) : fd(f) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd(o.fd) { o.fd = -1; }
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            if (fd >= 0) ::close(fd);
            fd = o.fd;
            o.fd = -1;
        }
        return *this;
    }
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
};

void send_all(int fd, const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
        if (w <= 0) throw ProtocolError("connection write failed");
        data += w;
        n -= static_cast<std::size_t>(w);
    }
}

void write_frame_fd(int fd, const Frame& f) {
    const auto bytes = encode_frame(f);
    send_all(fd, bytes.data(), bytes.size());
}

// Blocking read of the next whole frame; empty optional on clean EOF.
std::optional<Frame> read_frame_fd(int fd, FrameDecoder& dec) {
    std::uint8_t buf[16384];
    for (;;) {
        if (auto f = dec.next()) return f;
        const ssize_t r = ::recv(fd, buf, sizeof buf, 0);
        if (r == 0) return std::nullopt;
        if (r < 0) throw ProtocolError("connection read failed");
        dec.feed({buf, static_cast<std::size_t>(r)});
    }
}

Fd tcp_connect(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints,
                    &res) != 0 ||
        res == nullptr)
        throw ProtocolError("cannot resolve " + host);
    Fd fd;
    for (addrinfo* a = res; a; a = a->ai_next) {
        const int s = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (s < 0) continue;
        if (::connect(s, a->ai_addr, a->ai_addrlen) == 0) {
            fd = Fd(s);
            break;
        }
        ::close(s);
    }
    freeaddrinfo(res);
    if (fd.fd < 0)
        throw ProtocolError("cannot connect to " + host + ":" +
                            std::to_string(port));
    return fd;
}

Fd tcp_listen(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.empty() ? nullptr : host.c_str(),
                    std::to_string(port).c_str(), &hints, &res) != 0 ||
        res == nullptr)
        throw ProtocolError("cannot resolve bind address " + host);
    Fd fd;
    for (addrinfo* a = res; a; a = a->ai_next) {
        const int s = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
        if (s < 0) continue;
        const int one = 1;
        ::setsockopt(s, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(s, a->ai_addr, a->ai_addrlen) == 0 && ::listen(s, 16) == 0) {
            fd = Fd(s);
            break;
        }
        ::close(s);
    }
    freeaddrinfo(res);
    if (fd.fd < 0)
        throw ProtocolError("cannot bind " + host + ":" +
                            std::to_string(port));
    return fd;
}

}  // namespace

void serve_garbler(const std::string& bind_host, std::uint16_t port,
                   const std::string& evaluator_host,
                   std::uint16_t evaluator_port, const GarblerConfig& cfg) {
    auto garbler = std::make_shared<GarblerService>(cfg);
    const Fd evaluator = tcp_connect(evaluator_host, evaluator_port);
    auto eval_mu = std::make_shared<std::mutex>();
    const int eval_fd = evaluator.fd;

    // One writer at a time on the evaluator link; each online exchange is a
    // strict request/reply pair, so the reply is read under the same lock.
    const auto to_evaluator = [garbler, eval_mu, eval_fd](Frame frame) {
        std::lock_guard<std::mutex> lk(*eval_mu);
        FrameDecoder dec;
        for (;;) {
            const bool expects_reply = frame.type == FrameType::GarbledInput;
            write_frame_fd(eval_fd, frame);
            if (!expects_reply) return;
            auto reply = read_frame_fd(eval_fd, dec);
            if (!reply) throw ProtocolError("evaluator closed the connection");
            auto outs = garbler->handle(*reply);
            bool again = false;
            for (auto& o : outs)
                if (o.dest == Destination::Evaluator) {
                    frame = std::move(o.frame);
                    again = true;
                }
            if (!again) return;
        }
    };

    const Fd listener = tcp_listen(bind_host, port);
    for (;;) {
        const int client = ::accept(listener.fd, nullptr, nullptr);
        if (client < 0) continue;
        std::thread([garbler, to_evaluator, client] {
            Fd conn(client);
            FrameDecoder dec;
            try {
                for (;;) {
                    auto f = read_frame_fd(conn.fd, dec);
                    if (!f) break;
                    auto outs = garbler->handle(*f);
                    for (auto& o : outs) {
                        if (o.dest == Destination::Evaluator)
                            to_evaluator(std::move(o.frame));
                        else
                            write_frame_fd(conn.fd, o.frame);
                    }
                }
            } catch (const Error&) {
                // connection torn down; session state remains consistent
            }
        }).detach();
    }
}

void serve_evaluator(const std::string& bind_host, std::uint16_t port,
                     int threads) {
    auto evaluator = std::make_shared<EvaluatorService>(threads);
    const Fd listener = tcp_listen(bind_host, port);
    for (;;) {
        const int client = ::accept(listener.fd, nullptr, nullptr);
        if (client < 0) continue;
        std::thread([evaluator, client] {
            Fd conn(client);
            FrameDecoder dec;
            try {
                for (;;) {
                    auto f = read_frame_fd(conn.fd, dec);
                    if (!f) break;
                    auto reply = evaluator->handle(*f);
                    if (reply) write_frame_fd(conn.fd, *reply);
                }
            } catch (const Error&) {
            }
        }).detach();
    }
}

std::vector<q_val_t> remote_infer(const std::string& garbler_host,
                                  std::uint16_t port, const Circuit& quantized,
                                  std::span<const q_val_t> inputs,
                                  std::uint16_t owners) {
    if (inputs.size() != size_of(quantized.input_shape))
        throw DataError("input size does not match the model");
    if (owners == 0) throw DataError("at least one input owner required");
    const Fd conn = tcp_connect(garbler_host, port);
    const Seed s = random_seed();
    u128 session = 0;
    for (int i = 15; i >= 0; --i) session = (session << 8) | s[i];

    write_frame_fd(conn.fd,
                   Frame{FrameType::ModelUpload, session,
                         encode_model_upload(quantized, owners)});
    const std::size_t n = inputs.size();
    const std::size_t chunk = n / owners, extra = n % owners;
    std::size_t offset = 0;
    for (std::uint16_t o = 0; o < owners; ++o) {
        const std::size_t count = chunk + (o < extra ? 1 : 0);
        write_frame_fd(
            conn.fd,
            Frame{FrameType::InputUpload, session,
                  encode_input_upload(o, static_cast<std::uint32_t>(offset),
                                      inputs.subspan(offset, count))});
        offset += count;
    }

    FrameDecoder dec;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::seconds(120);
    for (;;) {
        write_frame_fd(conn.fd, Frame{FrameType::Result, session, {}});
        auto reply = read_frame_fd(conn.fd, dec);
        if (!reply) throw ProtocolError("garbler closed the connection");
        if (reply->type == FrameType::Result)
            return decode_result(reply->payload);
        const auto [code, msg] = decode_error(reply->payload);
        if (code == ErrorCode::Authenticity) throw AuthenticityError(msg);
        if (code == ErrorCode::Data) throw DataError(msg);
        if (msg != "result not ready") throw ProtocolError(msg);
        if (std::chrono::steady_clock::now() > deadline)
            throw ProtocolError("timed out waiting for the result");
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
}

}  // namespace dash
