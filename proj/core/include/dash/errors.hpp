#pragma once

#include <stdexcept>
#include <string>

namespace dash {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data: bad files, shape mismatches, values out of
// the representable range. CLI exit code 3.
struct DataError : Error {
    using Error::Error;
};

// A plain-evaluation intermediate left the signed range of the CRT base
// (quantization constant too large for the network).
struct OverflowError : DataError {
    using DataError::DataError;
};

// An output label did not match any entry of the decoding tables: the garbled
// output was tampered with or corrupted. CLI exit code 4.
struct AuthenticityError : Error {
    using Error::Error;
};

// Network-protocol failures: framing, phase violations, timeouts.
struct ProtocolError : Error {
    using Error::Error;
};

}  // namespace dash
