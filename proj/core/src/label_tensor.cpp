#include "dash/label_tensor.hpp"

#include <cstring>

#include "dash/errors.hpp"

namespace dash {

namespace {

void require_same_layout(const LabelTensor& a, const LabelTensor& b) {
    if (a.mod() != b.mod()) throw DataError("tensor modulus mismatch");
    if (a.shape() != b.shape()) throw DataError("tensor shape mismatch");
}

}  // namespace

LabelTensor::LabelTensor(crt_val_t m, dim_t shape)
    : mod_(m),
      n_(static_cast<std::uint16_t>(n_digits(m))),
      shape_(std::move(shape)) {
    storage_.assign(size_of(shape_) * n_, 0);
}

Label LabelTensor::get(std::size_t i) const {
    Label l = Label::shape(mod_);
    std::memcpy(l.d.data(), at(i), n_ * sizeof(crt_val_t));
    return l;
}

void LabelTensor::set(std::size_t i, const Label& l) {
    std::memcpy(at(i), l.d.data(), n_ * sizeof(crt_val_t));
}

LabelTensor tensor_add(const LabelTensor& a, const LabelTensor& b) {
    require_same_layout(a, b);
    LabelTensor r = a;
    const crt_val_t m = a.mod();
    crt_val_t* out = r.at(0);
    const crt_val_t* in = b.at(0);
    const std::size_t total = a.size() * a.digits();
    for (std::size_t i = 0; i < total; ++i) {
        const crt_val_t s = static_cast<crt_val_t>(out[i] + in[i]);
        out[i] = s >= m ? static_cast<crt_val_t>(s - m) : s;
    }
    return r;
}

LabelTensor tensor_scale(const LabelTensor& a, crt_val_t c) {
    LabelTensor r = a;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) r.set(i, label_scale(a.get(i), c));
    return r;
}

void LabelTensor::reshape(dim_t shape) {
    if (size_of(shape) != size()) throw DataError("reshape size mismatch");
    shape_ = std::move(shape);
}

LabelTensor tensor_reshape(const LabelTensor& t, dim_t shape) {
    LabelTensor r = t;
    r.reshape(std::move(shape));
    return r;
}

LabelTensor tensor_gather(const LabelTensor& t, std::uint32_t wh,
                          std::uint32_t ww, std::uint32_t stride) {
    const dim_t& s = t.shape();
    if (s.size() != 3) throw DataError("gather expects a [C,H,W] tensor");
    const std::uint32_t c = s[0], h = s[1], w = s[2];
    if (stride == 0 || wh == 0 || ww == 0 || wh > h || ww > w)
        throw DataError("gather window does not fit");
    const std::uint32_t oh = (h - wh) / stride + 1;
    const std::uint32_t ow = (w - ww) / stride + 1;
    LabelTensor out(t.mod(), {oh, ow, c, wh, ww});
    const std::size_t chunk = static_cast<std::size_t>(t.digits());
    std::size_t dst = 0;
    for (std::uint32_t oy = 0; oy < oh; ++oy)
        for (std::uint32_t ox = 0; ox < ow; ++ox)
            for (std::uint32_t ch = 0; ch < c; ++ch)
                for (std::uint32_t ky = 0; ky < wh; ++ky)
                    for (std::uint32_t kx = 0; kx < ww; ++kx) {
                        const std::size_t src =
                            (static_cast<std::size_t>(ch) * h +
                             (oy * stride + ky)) *
                                w +
                            (ox * stride + kx);
                        std::memcpy(out.at(dst++), t.at(src),
                                    chunk * sizeof(crt_val_t));
                    }
    return out;
}

void tensor_write(ByteWriter& w, const LabelTensor& t) {
    w.u16(t.mod());
    w.u8(static_cast<std::uint8_t>(t.shape().size()));
    for (auto d : t.shape()) w.u32(d);
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) w.u128v(compress(t.get(i)));
}

LabelTensor tensor_read(ByteReader& r) {
    const crt_val_t m = r.u16();
    if (m < 2 || m > kMaxModulus) throw DataError("bad tensor modulus");
    const std::uint8_t rank = r.u8();
    if (rank == 0 || rank > 8) throw DataError("bad tensor rank");
    dim_t shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
        d = r.u32();
        if (d == 0) throw DataError("zero tensor dimension");
        total *= d;
        if (total > (1u << 26)) throw DataError("tensor too large");
    }
    LabelTensor t(m, shape);
    for (std::uint64_t i = 0; i < total; ++i)
        t.set(i, decompress_mod(r.u128v(), m));
    return t;
}

}  // namespace dash
