#pragma once

#include "circuits/circuit.hpp"
#include "circuits/net.hpp"
#include "circuits/verify.hpp"

#include <cstdint>
#include <string>

namespace circuits {

/// Raised when a document cannot be parsed; the message names the node
/// or field at fault.
struct ParseError : Error {
  using Error::Error;
};

/// Versioned text format for networks (see README for the schema).
/// to_text(network_from_text(s)) reproduces s byte for byte when s was
/// produced by to_text.
std::string to_text(const Network& net);
Network network_from_text(const std::string& text);

/// FNV-1a over the canonical serialization; identifies a network in
/// circuit files.
std::uint64_t network_hash(const Network& net);

std::string to_text(const Circuit& circuit, const PatchingScheme& patch);
std::pair<Circuit, PatchingScheme> circuit_from_text(const std::string& text);

/// Verification query: the combined network plus its descriptor (region
/// boxes, metric, branch slot map). Round-trips exactly.
std::string to_text(const SiameseQuery& query);
SiameseQuery query_from_text(const std::string& text);

/// Verdict record (one-way emission).
std::string to_text(const Verdict& verdict);

}  // namespace circuits
