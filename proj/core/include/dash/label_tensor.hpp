#pragma once

#include <cstdint>
#include <vector>

#include "dash/label.hpp"
#include "dash/serial.hpp"
#include "dash/types.hpp"

namespace dash {

// A tensor of labels sharing one modulus, label-major: the n_m digits of each
// label are contiguous. One LabelTensor per CRT modulus forms a wire bundle.
class LabelTensor {
  public:
    LabelTensor() = default;
    LabelTensor(crt_val_t m, dim_t shape);

    crt_val_t mod() const { return mod_; }
    int digits() const { return n_; }
    const dim_t& shape() const { return shape_; }
    std::size_t size() const { return n_ ? storage_.size() / n_ : 0; }

    crt_val_t* at(std::size_t i) { return storage_.data() + i * n_; }
    const crt_val_t* at(std::size_t i) const { return storage_.data() + i * n_; }

    Label get(std::size_t i) const;
    void set(std::size_t i, const Label& l);

    const std::vector<crt_val_t>& storage() const { return storage_; }

    // Metadata-only shape change; the new product must equal size().
    void reshape(dim_t shape);

    bool operator==(const LabelTensor& o) const = default;

  private:
    crt_val_t mod_ = 0;
    std::uint16_t n_ = 0;
    dim_t shape_;
    std::vector<crt_val_t> storage_;
};

// Elementwise lifts of the label ops; shapes and moduli must match.
LabelTensor tensor_add(const LabelTensor& a, const LabelTensor& b);
LabelTensor tensor_scale(const LabelTensor& a, crt_val_t c);
LabelTensor tensor_reshape(const LabelTensor& t, dim_t shape);
// Sliding-window extraction for convolution. Input shape [C, H, W]; output
// shape [out_h, out_w, C, wh, ww] with out = (in - w)/stride + 1 per axis.
LabelTensor tensor_gather(const LabelTensor& t, std::uint32_t wh,
                          std::uint32_t ww, std::uint32_t stride);

// Wire format: modulus u16 | rank u8 | dims u32 each | one 16-byte
// little-endian chunk per label in storage order.
void tensor_write(ByteWriter& w, const LabelTensor& t);
// Chunks are reduced mod m^n on read, so any 16-byte block parses; corrupted
// labels surface later as decoding-table misses.
LabelTensor tensor_read(ByteReader& r);

}  // namespace dash
