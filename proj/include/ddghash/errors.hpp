#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ddghash {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoInstructionsFound : public Error {
 public:
  NoInstructionsFound() : Error("no instruction lines found") {}
};

class UnparsableOperand : public Error {
 public:
  explicit UnparsableOperand(const std::string& token)
      : Error("unparsable operand: '" + token + "'"), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// Raised when too many instruction-shaped lines fail to parse.
class ParseFailed : public Error {
 public:
  using Error::Error;
};

class EmptyGraph : public Error {
 public:
  EmptyGraph() : Error("cannot hash a graph with no nodes") {}
};

class IncompatibleCorpora : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus contains no term vectors") {}
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("cosine similarity of a zero vector is undefined") {}
};

class UnknownProgram : public Error {
 public:
  explicit UnknownProgram(const std::string& id)
      : Error("unknown program: '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

// Malformed or version-mismatched on-disk document.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddghash
