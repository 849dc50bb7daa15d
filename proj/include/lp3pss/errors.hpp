#pragma once

#include <stdexcept>
#include <string>

namespace lp3pss {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (out-of-domain plaintext, bad config, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// AEAD tag did not verify: wrong key, wrong associated data or tampered bytes.
class AuthenticationError : public Error {
 public:
  using Error::Error;
};

// Byte string cannot be parsed (truncated frame, bad length prefix, ...).
class MalformedInput : public Error {
 public:
  using Error::Error;
};

// A protocol participant received something it cannot act on.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A transcript lacks the events required to analyse it.
class IncompleteTranscript : public Error {
 public:
  using Error::Error;
};

}  // namespace lp3pss
